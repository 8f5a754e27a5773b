#ifndef PROMPTWISE_PROMPT_BANK_HPP
#define PROMPTWISE_PROMPT_BANK_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "promptwise/checkpoint.hpp"
#include "promptwise/missing_case.hpp"
#include "promptwise/tensor.hpp"

namespace pw {

enum class PromptMode {
    InputLevel,
    AttentionLevel,
};

const char* prompt_mode_name(PromptMode mode);

struct PromptBankConfig {
    std::size_t prompt_len = 16;  // L_p; must be even in attention mode
    std::size_t start_layer = 0;
    std::size_t end_layer = 5;  // inclusive
    PromptMode mode = PromptMode::InputLevel;

    std::size_t num_layers() const { return end_layer - start_layer + 1; }
};

/// The learnable missing-aware prompts: one L_p x d tensor per
/// (missing case, prompted layer). Selection returns the stored tensor
/// itself, so gradients accumulate across a batch.
class PromptBank {
  public:
    /// Prompts drawn from N(0, 0.02), deterministic per seed.
    static PromptBank init(const PromptBankConfig& config, std::size_t dim, std::uint64_t seed);
    /// A bank with no prompts; forward passes treat it as plain layers.
    static PromptBank empty();

    bool active() const { return !prompts_.empty(); }
    const PromptBankConfig& config() const { return config_; }
    std::size_t dim() const { return dim_; }

    bool covers_layer(std::size_t layer) const {
        return active() && layer >= config_.start_layer && layer <= config_.end_layer;
    }
    /// Throws RangeError when the prompted range does not fit the backbone.
    void validate_for_depth(std::size_t depth) const;

    const TensorPtr& select(MissingCase c, std::size_t layer) const;

    std::vector<TensorPtr> all_prompts() const;
    std::size_t parameter_count() const;
    /// Entries named prompt/<case>/<layer>.
    NamedTensors named_tensors() const;

  private:
    PromptBankConfig config_;
    std::size_t dim_ = 0;
    // prompts_[case][layer - start_layer]
    std::vector<std::vector<TensorPtr>> prompts_;
};

/// Splits an even-length prompt into key and value halves (first rows,
/// last rows). Gradients flow back into the matching halves.
std::pair<TensorPtr, TensorPtr> split_kv(const TensorPtr& prompt);

} // namespace pw

#endif
