#include "promptwise/prompt_bank.hpp"

namespace pw {

const char* prompt_mode_name(PromptMode mode) {
    return mode == PromptMode::InputLevel ? "input" : "attention";
}

PromptBank PromptBank::init(const PromptBankConfig& config, std::size_t dim, std::uint64_t seed) {
    if (config.prompt_len < 1) {
        throw ConfigError("prompt bank: prompt_len must be at least 1");
    }
    if (config.mode == PromptMode::AttentionLevel && config.prompt_len % 2 != 0) {
        throw ConfigError("prompt bank: attention-level prompts need an even length, got " +
                          std::to_string(config.prompt_len));
    }
    if (config.start_layer > config.end_layer) {
        throw ConfigError("prompt bank: start_layer " + std::to_string(config.start_layer) +
                          " exceeds end_layer " + std::to_string(config.end_layer));
    }
    PromptBank bank;
    bank.config_ = config;
    bank.dim_ = dim;
    std::mt19937_64 rng(seed);
    bank.prompts_.resize(kAllCases.size());
    for (std::size_t ci = 0; ci < kAllCases.size(); ++ci) {
        bank.prompts_[ci].reserve(config.num_layers());
        for (std::size_t l = 0; l < config.num_layers(); ++l) {
            bank.prompts_[ci].push_back(
                gaussian(config.prompt_len, dim, 0.0, 0.02, rng, true));
        }
    }
    return bank;
}

PromptBank PromptBank::empty() {
    return PromptBank{};
}

void PromptBank::validate_for_depth(std::size_t depth) const {
    if (active() && config_.end_layer >= depth) {
        throw RangeError("prompt bank: end_layer " + std::to_string(config_.end_layer) +
                         " out of range for depth " + std::to_string(depth));
    }
}

const TensorPtr& PromptBank::select(MissingCase c, std::size_t layer) const {
    if (!covers_layer(layer)) {
        throw RangeError("prompt bank: layer " + std::to_string(layer) +
                         " outside prompted range");
    }
    return prompts_[static_cast<std::size_t>(c)][layer - config_.start_layer];
}

std::vector<TensorPtr> PromptBank::all_prompts() const {
    std::vector<TensorPtr> out;
    for (const auto& per_case : prompts_) {
        for (const auto& p : per_case) {
            out.push_back(p);
        }
    }
    return out;
}

std::size_t PromptBank::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : all_prompts()) {
        n += p->size();
    }
    return n;
}

NamedTensors PromptBank::named_tensors() const {
    NamedTensors out;
    for (std::size_t ci = 0; ci < prompts_.size(); ++ci) {
        for (std::size_t l = 0; l < prompts_[ci].size(); ++l) {
            out.emplace_back("prompt/" + std::string(case_name(kAllCases[ci])) + "/" +
                                 std::to_string(config_.start_layer + l),
                             prompts_[ci][l]);
        }
    }
    return out;
}

std::pair<TensorPtr, TensorPtr> split_kv(const TensorPtr& prompt) {
    if (prompt->rows % 2 != 0) {
        throw ConfigError("split_kv: prompt length " + std::to_string(prompt->rows) +
                          " is odd");
    }
    const std::size_t half = prompt->rows / 2;
    return {slice_rows(prompt, 0, half), slice_rows(prompt, half, prompt->rows)};
}

} // namespace pw
