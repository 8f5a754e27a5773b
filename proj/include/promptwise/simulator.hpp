#ifndef PROMPTWISE_SIMULATOR_HPP
#define PROMPTWISE_SIMULATOR_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "promptwise/embedding.hpp"
#include "promptwise/missing_case.hpp"

namespace pw {

struct MultimodalSample {
    TextInput text;
    ImageInput image;
    std::size_t label = 0;
    MissingCase missing_case = MissingCase::Complete;
};

enum class MissingScenario {
    MissingText,
    MissingImage,
    MissingBoth,
};

const char* scenario_name(MissingScenario s);
MissingScenario scenario_from_name(const std::string& s);

struct MissingSpec {
    double eta = 70.0;  // percent of modality-incomplete samples
    MissingScenario scenario = MissingScenario::MissingBoth;
    std::uint64_t seed = 0;
};

struct CaseQuotas {
    std::size_t missing_text = 0;   // image-only samples
    std::size_t missing_image = 0;  // text-only samples
    std::size_t complete = 0;
};

/// Exact quota arithmetic: incomplete total = round-half-to-even of
/// eta*n/100; under the missing-both scenario the text-only share is the
/// floor of half the incomplete total and image-only takes the remainder.
CaseQuotas case_quotas(std::size_t n, const MissingSpec& spec);

/// Case label per sample index, quotas as above, placement by a seeded
/// shuffle.
std::vector<MissingCase> partition(std::size_t n, const MissingSpec& spec);

/// Fresh deterministic assignment for (spec.seed, epoch), same quotas.
std::vector<MissingCase> resample_cases_per_epoch(std::size_t n, const MissingSpec& spec,
                                                  std::size_t epoch);

/// Stream-indexed seed derivation (train/test splits, per-epoch draws).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Replaces the missing modality with its dummy; the other modality and
/// the label are untouched.
MultimodalSample apply_case(const MultimodalSample& sample, MissingCase c);

struct SyntheticConfig {
    std::size_t classes = 4;
    std::size_t image_height = 8;
    std::size_t image_width = 8;
    std::size_t channels = 1;
    std::size_t patch_size = 4;
    std::size_t max_text_len = 16;
    std::size_t noise_words = 16;
    std::size_t text_words = 8;
    std::size_t keyword_copies = 2;
    /// Chance a sample's image signal is flattened to a neutral field;
    /// such samples make the text hint worth reading during pretraining.
    double signal_drop_prob = 0.2;
    double pixel_noise = 0.1;
    /// Scales the natural pixel range (template and noise). At 1.0 the
    /// set-bit intensity equals the all-ones dummy's pixel value.
    double pixel_scale = 1.0;
    /// Chance the text hint word actually encodes the image factor rather
    /// than a random group.
    double hint_reliability = 0.6;

    std::size_t num_patches() const {
        return (image_height / patch_size) * (image_width / patch_size);
    }
};

/// Modality-complete classification set. The label factors into a text
/// part (a class keyword planted among noise words) and an image part (a
/// per-patch intensity template under pixel noise); each modality alone
/// narrows the label, the pair identifies it. Labels round-robin over
/// classes.
std::vector<MultimodalSample> gen_synthetic(std::size_t n, const SyntheticConfig& config,
                                            std::uint64_t seed);

/// Number of image-distinguishable groups the label's image part ranges
/// over (the smallest g with g*g >= classes).
std::size_t synthetic_image_groups(std::size_t classes);

/// Word table the generator draws from: reserved ids, class keywords
/// k0..k{C-1}, noise words n0..n{K-1}, padded with filler up to vocab_size.
Vocab make_synthetic_vocab(const SyntheticConfig& config, std::size_t vocab_size);

/// Writes manifest.tsv (id, case, label, text, image file) plus one binary
/// grid per image under images/, header of three u32 (H, W, C) then
/// doubles.
void save_dataset(const std::string& dir, const std::vector<MultimodalSample>& samples);
std::vector<MultimodalSample> load_dataset(const std::string& dir, std::size_t patch_size,
                                           std::size_t max_text_len);

} // namespace pw

#endif
