#include "promptwise/simulator.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace pw {

namespace fs = std::filesystem;

const char* scenario_name(MissingScenario s) {
    switch (s) {
        case MissingScenario::MissingText:
            return "text";
        case MissingScenario::MissingImage:
            return "image";
        case MissingScenario::MissingBoth:
            return "both";
    }
    return "?";
}

MissingScenario scenario_from_name(const std::string& s) {
    if (s == "text") {
        return MissingScenario::MissingText;
    }
    if (s == "image") {
        return MissingScenario::MissingImage;
    }
    if (s == "both") {
        return MissingScenario::MissingBoth;
    }
    throw ConfigError("unknown missing scenario: " + s);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

CaseQuotas case_quotas(std::size_t n, const MissingSpec& spec) {
    if (spec.eta < 0.0 || spec.eta > 100.0) {
        throw ConfigError("missing rate eta must lie in [0, 100], got " +
                          std::to_string(spec.eta));
    }
    if (n < 1) {
        throw ArgumentError("partition: n must be at least 1");
    }
    // nearbyint under the default rounding mode is round-half-to-even.
    const auto incomplete = static_cast<std::size_t>(
        std::nearbyint(spec.eta * static_cast<double>(n) / 100.0));
    CaseQuotas q;
    switch (spec.scenario) {
        case MissingScenario::MissingText:
            q.missing_text = incomplete;
            break;
        case MissingScenario::MissingImage:
            q.missing_image = incomplete;
            break;
        case MissingScenario::MissingBoth:
            // Text-only samples lack the image, so they count as MissingImage.
            q.missing_image = incomplete / 2;
            q.missing_text = incomplete - q.missing_image;
            break;
    }
    q.complete = n - q.missing_text - q.missing_image;
    return q;
}

namespace {

void fisher_yates(std::vector<MissingCase>& cases, std::mt19937_64& rng) {
    for (std::size_t i = cases.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(cases[i - 1], cases[j]);
    }
}

} // namespace

std::vector<MissingCase> partition(std::size_t n, const MissingSpec& spec) {
    const CaseQuotas q = case_quotas(n, spec);
    std::vector<MissingCase> cases;
    cases.reserve(n);
    cases.insert(cases.end(), q.missing_text, MissingCase::MissingText);
    cases.insert(cases.end(), q.missing_image, MissingCase::MissingImage);
    cases.insert(cases.end(), q.complete, MissingCase::Complete);
    std::mt19937_64 rng(spec.seed);
    fisher_yates(cases, rng);
    return cases;
}

std::vector<MissingCase> resample_cases_per_epoch(std::size_t n, const MissingSpec& spec,
                                                  std::size_t epoch) {
    MissingSpec derived = spec;
    derived.seed = derive_seed(spec.seed, 0x0e90c000 + epoch);
    return partition(n, derived);
}

MultimodalSample apply_case(const MultimodalSample& sample, MissingCase c) {
    if (sample.missing_case != MissingCase::Complete) {
        throw ArgumentError("apply_case: input sample must be modality-complete");
    }
    MultimodalSample out = sample;
    out.missing_case = c;
    switch (c) {
        case MissingCase::Complete:
            break;
        case MissingCase::MissingText:
            out.text = dummy_text(sample.text.max_len);
            break;
        case MissingCase::MissingImage:
            out.image = dummy_image(sample.image.height, sample.image.width,
                                    sample.image.channels, sample.image.patch_size);
            break;
    }
    return out;
}

Vocab make_synthetic_vocab(const SyntheticConfig& config, std::size_t vocab_size) {
    const std::size_t groups = synthetic_image_groups(config.classes);
    std::vector<std::string> words{"<unk>", "<task>"};
    for (std::size_t a = 0; a * groups < config.classes; ++a) {
        words.push_back("k" + std::to_string(a));
    }
    for (std::size_t b = 0; b < groups; ++b) {
        words.push_back("h" + std::to_string(b));
    }
    for (std::size_t i = 0; i < config.noise_words; ++i) {
        words.push_back("n" + std::to_string(i));
    }
    if (words.size() > vocab_size) {
        throw ConfigError("vocab_size " + std::to_string(vocab_size) + " too small for " +
                          std::to_string(words.size()) + " generator words");
    }
    for (std::size_t i = words.size(); i < vocab_size; ++i) {
        words.push_back("w" + std::to_string(i));
    }
    return Vocab(std::move(words));
}

std::size_t synthetic_image_groups(std::size_t classes) {
    std::size_t groups = 1;
    while (groups * groups < classes) {
        ++groups;
    }
    return groups;
}

std::vector<MultimodalSample> gen_synthetic(std::size_t n, const SyntheticConfig& config,
                                            std::uint64_t seed) {
    if (config.classes < 2) {
        throw ConfigError("gen_synthetic: need at least 2 classes");
    }
    const std::size_t patches = config.num_patches();
    const std::size_t groups = synthetic_image_groups(config.classes);
    std::size_t group_bits = 1;
    while ((std::size_t{1} << group_bits) < groups) {
        ++group_bits;
    }
    if (patches < group_bits) {
        throw ConfigError("gen_synthetic: " + std::to_string(config.classes) +
                          " classes need at least " + std::to_string(group_bits) + " patches");
    }
    if (config.signal_drop_prob < 0.0 || config.signal_drop_prob >= 0.5) {
        throw ConfigError("gen_synthetic: signal_drop_prob must lie in [0, 0.5)");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, config.pixel_noise);
    std::uniform_int_distribution<std::size_t> noise_word(0, config.noise_words - 1);

    const std::size_t ps = config.patch_size;
    const std::size_t patches_w = config.image_width / ps;

    std::vector<MultimodalSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t label = i % config.classes;
        // The label factors into a text part and an image part. The text
        // carries its factor through keywords plus an unreliable hint for
        // the image factor; the image carries its factor through patch
        // intensities. Flattened-image samples force the hint into use.
        const std::size_t text_part = label / groups;
        const std::size_t image_part = label % groups;
        const bool drop_image = unit(rng) < config.signal_drop_prob;

        std::vector<std::string> words;
        for (std::size_t k = 0; k < config.keyword_copies; ++k) {
            words.push_back("k" + std::to_string(text_part));
        }
        const std::size_t hinted = unit(rng) < config.hint_reliability
                                       ? image_part
                                       : static_cast<std::size_t>(rng() % groups);
        words.push_back("h" + std::to_string(hinted));
        while (words.size() < config.text_words) {
            words.push_back("n" + std::to_string(noise_word(rng)));
        }
        for (std::size_t w = words.size(); w > 1; --w) {
            std::swap(words[w - 1], words[rng() % w]);
        }
        std::string content;
        for (std::size_t w = 0; w < words.size(); ++w) {
            if (w > 0) {
                content += ' ';
            }
            content += words[w];
        }

        // Image: per-patch intensity template for the image part, group
        // bits spread cyclically, plus pixel noise. Set bits sit at
        // intensity 1.0, so the all-bits-set pattern coincides with the
        // all-ones dummy up to pixel noise.
        ImageInput img{config.image_height, config.image_width, config.channels, ps, {}};
        img.pixels.assign(config.image_height * config.image_width * config.channels, 0.0);
        for (std::size_t h = 0; h < config.image_height; ++h) {
            for (std::size_t w = 0; w < config.image_width; ++w) {
                const std::size_t patch = (h / ps) * patches_w + (w / ps);
                double base = 0.65;
                if (!drop_image) {
                    const std::size_t bit = (image_part >> (patch % group_bits)) & 1u;
                    base = bit ? 1.0 : 0.3;
                }
                for (std::size_t c = 0; c < config.channels; ++c) {
                    img.at(h, w, c) = (base + noise(rng)) * config.pixel_scale;
                }
            }
        }

        out.push_back(MultimodalSample{TextInput{content, config.max_text_len}, std::move(img),
                                       label, MissingCase::Complete});
    }
    return out;
}

void save_dataset(const std::string& dir, const std::vector<MultimodalSample>& samples) {
    fs::create_directories(fs::path(dir) / "images");
    std::ofstream manifest(fs::path(dir) / "manifest.tsv");
    if (!manifest) {
        throw Error("cannot write dataset manifest in " + dir);
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const MultimodalSample& s = samples[i];
        if (s.text.content.find_first_of("\t\n") != std::string::npos) {
            throw ArgumentError("save_dataset: text of sample " + std::to_string(i) +
                                " contains a tab or newline");
        }
        const std::string image_ref = "images/" + std::to_string(i) + ".bin";
        manifest << i << '\t' << case_name(s.missing_case) << '\t' << s.label << '\t'
                 << s.text.content << '\t' << image_ref << '\n';

        std::ofstream img(fs::path(dir) / image_ref, std::ios::binary);
        const std::uint32_t header[3] = {static_cast<std::uint32_t>(s.image.height),
                                         static_cast<std::uint32_t>(s.image.width),
                                         static_cast<std::uint32_t>(s.image.channels)};
        img.write(reinterpret_cast<const char*>(header), sizeof(header));
        img.write(reinterpret_cast<const char*>(s.image.pixels.data()),
                  static_cast<std::streamsize>(s.image.pixels.size() * sizeof(double)));
        if (!img) {
            throw Error("cannot write image payload " + image_ref);
        }
    }
}

std::vector<MultimodalSample> load_dataset(const std::string& dir, std::size_t patch_size,
                                           std::size_t max_text_len) {
    std::ifstream manifest(fs::path(dir) / "manifest.tsv");
    if (!manifest) {
        throw DependencyError("cannot open dataset manifest in " + dir);
    }
    std::vector<MultimodalSample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(manifest, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string id, case_str, label_str, text, image_ref;
        if (!std::getline(ss, id, '\t') || !std::getline(ss, case_str, '\t') ||
            !std::getline(ss, label_str, '\t') || !std::getline(ss, text, '\t') ||
            !std::getline(ss, image_ref)) {
            throw ParseError("malformed manifest record", line_no);
        }
        MultimodalSample s;
        try {
            s.missing_case = case_from_name(case_str);
            s.label = std::stoul(label_str);
        } catch (const std::exception&) {
            throw ParseError("bad case or label field", line_no);
        }
        s.text = TextInput{text, max_text_len};

        std::ifstream img(fs::path(dir) / image_ref, std::ios::binary);
        if (!img) {
            throw DependencyError("missing image payload: " + image_ref);
        }
        std::uint32_t header[3];
        img.read(reinterpret_cast<char*>(header), sizeof(header));
        s.image.height = header[0];
        s.image.width = header[1];
        s.image.channels = header[2];
        s.image.patch_size = patch_size;
        s.image.pixels.resize(std::size_t{header[0]} * header[1] * header[2]);
        img.read(reinterpret_cast<char*>(s.image.pixels.data()),
                 static_cast<std::streamsize>(s.image.pixels.size() * sizeof(double)));
        if (!img) {
            throw Error("truncated image payload: " + image_ref);
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace pw
