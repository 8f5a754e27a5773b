#include "promptwise/embedding.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

namespace pw {

TextInput dummy_text(std::size_t max_len) {
    return TextInput{"", max_len};
}

ImageInput dummy_image(std::size_t height, std::size_t width, std::size_t channels,
                       std::size_t patch_size) {
    ImageInput img{height, width, channels, patch_size, {}};
    img.pixels.assign(height * width * channels, 1.0);
    return img;
}

Vocab::Vocab(std::vector<std::string> words) : words_(std::move(words)) {
    if (words_.size() < 2) {
        throw ConfigError("vocab needs at least the unknown and task entries, got " +
                          std::to_string(words_.size()));
    }
    for (std::size_t i = 0; i < words_.size(); ++i) {
        index_.emplace(words_[i], i);
    }
}

std::size_t Vocab::lookup(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnknownId : it->second;
}

void Vocab::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) {
        throw Error("cannot open vocab file for writing: " + path);
    }
    for (const auto& w : words_) {
        os << w << '\n';
    }
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw DependencyError("cannot open vocab file: " + path);
    }
    std::vector<std::string> words;
    std::string line;
    while (std::getline(is, line)) {
        words.push_back(line);
    }
    return Vocab(std::move(words));
}

std::vector<std::size_t> tokenize_text(const TextInput& input, const Vocab& vocab) {
    std::vector<std::size_t> ids{Vocab::kTextTaskId};
    std::string word;
    auto flush = [&]() {
        if (!word.empty() && ids.size() < 1 + input.max_len) {
            ids.push_back(vocab.lookup(word));
        }
        word.clear();
    };
    for (char ch : input.content) {
        const auto uc = static_cast<unsigned char>(ch);
        if (std::isalnum(uc)) {
            word.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            flush();
        }
    }
    flush();
    return ids;
}

TensorPtr patchify_image(const ImageInput& input) {
    if (input.patch_size == 0 || input.height % input.patch_size != 0 ||
        input.width % input.patch_size != 0) {
        throw ShapeError("patchify_image: " + std::to_string(input.height) + "x" +
                         std::to_string(input.width) + " not divisible by patch size " +
                         std::to_string(input.patch_size));
    }
    if (input.pixels.size() != input.height * input.width * input.channels) {
        throw ShapeError("patchify_image: pixel buffer size " +
                         std::to_string(input.pixels.size()) + " does not match dimensions");
    }
    for (double v : input.pixels) {
        if (!std::isfinite(v)) {
            throw NumericError("patchify_image: non-finite pixel value");
        }
    }
    const std::size_t ps = input.patch_size;
    const std::size_t patches_h = input.height / ps;
    const std::size_t patches_w = input.width / ps;
    const std::size_t dim = input.patch_dim();
    std::vector<double> d(patches_h * patches_w * dim);
    std::size_t row = 0;
    for (std::size_t ph = 0; ph < patches_h; ++ph) {
        for (std::size_t pw_ = 0; pw_ < patches_w; ++pw_) {
            std::size_t k = 0;
            for (std::size_t dh = 0; dh < ps; ++dh) {
                for (std::size_t dw = 0; dw < ps; ++dw) {
                    for (std::size_t c = 0; c < input.channels; ++c) {
                        d[row * dim + k++] = input.at(ph * ps + dh, pw_ * ps + dw, c);
                    }
                }
            }
            ++row;
        }
    }
    return make_tensor(patches_h * patches_w, dim, std::move(d));
}

Embedder Embedder::init(const EmbedderConfig& config, std::mt19937_64& rng) {
    if (config.image_height % config.patch_size != 0 ||
        config.image_width % config.patch_size != 0) {
        throw ConfigError("embedder: image dimensions must be multiples of patch size");
    }
    constexpr double kStd = 0.02;
    Embedder e;
    e.config = config;
    e.token_table = gaussian(config.vocab_size, config.dim, 0.0, kStd, rng, true);
    e.patch_proj = gaussian(config.patch_dim(), config.dim, 0.0, kStd, rng, true);
    e.text_pos = gaussian(1 + config.max_text_len, config.dim, 0.0, kStd, rng, true);
    e.image_pos = gaussian(1 + config.num_patches(), config.dim, 0.0, kStd, rng, true);
    e.type_table = gaussian(2, config.dim, 0.0, kStd, rng, true);
    e.task_tokens = gaussian(2, config.dim, 0.0, kStd, rng, true);
    return e;
}

NamedTensors Embedder::named_tensors(const std::string& prefix) const {
    return {
        {prefix + "token_table", token_table},  {prefix + "patch_proj", patch_proj},
        {prefix + "text_pos", text_pos},        {prefix + "image_pos", image_pos},
        {prefix + "type_table", type_table},    {prefix + "task_tokens", task_tokens},
    };
}

void Embedder::set_trainable(bool trainable) {
    for (auto& [name, t] : named_tensors("")) {
        t->requires_grad = trainable;
        if (!trainable) {
            t->grad.clear();
        }
    }
}

JointSequence assemble_sequence(const std::vector<std::size_t>& text_ids,
                                const TensorPtr& patches, const Embedder& embedder,
                                MissingCase missing_case) {
    if (text_ids.empty() || text_ids[0] != Vocab::kTextTaskId) {
        throw ArgumentError("assemble_sequence: text ids must start with the task token");
    }
    if (patches->cols != embedder.patch_proj->rows) {
        throw ShapeError("assemble_sequence: patch dim " + std::to_string(patches->cols) +
                         " does not match projection " + embedder.patch_proj->shape_str());
    }
    const std::size_t content = text_ids.size() - 1;
    if (content > embedder.config.max_text_len) {
        throw RangeError("assemble_sequence: " + std::to_string(content) +
                         " content tokens exceed max_text_len " +
                         std::to_string(embedder.config.max_text_len));
    }
    if (patches->rows != embedder.config.num_patches()) {
        throw ShapeError("assemble_sequence: expected " +
                         std::to_string(embedder.config.num_patches()) + " patches, got " +
                         std::to_string(patches->rows));
    }

    // Text region: task token then content embeddings.
    TensorPtr text_emb = gather_rows(embedder.task_tokens, {0});
    if (content > 0) {
        std::vector<std::size_t> ids(text_ids.begin() + 1, text_ids.end());
        text_emb = concat_rows(text_emb, gather_rows(embedder.token_table, ids));
    }
    std::vector<std::size_t> text_positions(1 + content);
    for (std::size_t i = 0; i < text_positions.size(); ++i) {
        text_positions[i] = i;
    }
    TensorPtr text_part = add(text_emb, gather_rows(embedder.text_pos, text_positions));
    text_part = add(text_part, gather_rows(embedder.type_table,
                                           std::vector<std::size_t>(1 + content, 0)));

    // Image region: task token then projected patches.
    TensorPtr image_emb =
        concat_rows(gather_rows(embedder.task_tokens, {1}), matmul(patches, embedder.patch_proj));
    const std::size_t num_patches = patches->rows;
    std::vector<std::size_t> image_positions(1 + num_patches);
    for (std::size_t i = 0; i < image_positions.size(); ++i) {
        image_positions[i] = i;
    }
    TensorPtr image_part = add(image_emb, gather_rows(embedder.image_pos, image_positions));
    image_part = add(image_part, gather_rows(embedder.type_table,
                                             std::vector<std::size_t>(1 + num_patches, 1)));

    JointSequence seq;
    seq.tokens = concat_rows(text_part, image_part);
    seq.text_begin = 0;
    seq.text_end = 1 + content;
    seq.image_begin = seq.text_end;
    seq.image_end = seq.image_begin + 1 + num_patches;
    seq.text_task_index = 0;
    seq.missing_case = missing_case;
    return seq;
}

} // namespace pw
