#ifndef PROMPTWISE_HARNESS_HPP
#define PROMPTWISE_HARNESS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "promptwise/metrics.hpp"
#include "promptwise/prompt_bank.hpp"
#include "promptwise/simulator.hpp"
#include "promptwise/trainer.hpp"
#include "promptwise/transformer.hpp"

namespace pw {

/// Full experiment configuration. Serialized as flat key=value text under
/// [section] headers; parse_config_text and config_to_text round-trip.
struct HarnessConfig {
    // [data]
    std::size_t n_train = 2000;
    std::size_t n_test = 500;
    SyntheticConfig synth;
    std::size_t vocab_size = 256;
    std::uint64_t seed = 0;

    // [model]
    std::size_t depth = 6;
    std::size_t dim = 32;
    std::string mode = "input";  // baseline | input | attention
    std::size_t prompt_len = 16;
    std::size_t prompt_start = 0;
    std::size_t prompt_end = 2;  // early half of the default depth
    std::size_t head_hidden = 0;

    // [pretrain] / [train]
    TrainConfig pretrain = default_pretrain();
    TrainConfig train = default_train();

    // [missing]
    MissingScenario scenario = MissingScenario::MissingBoth;
    /// Evaluation-side scenario override for train/test mismatch
    /// experiments; evaluation uses `scenario` when unset.
    std::optional<MissingScenario> test_scenario;
    double train_eta = 70.0;
    double test_eta = 70.0;

    MissingScenario eval_scenario() const { return test_scenario.value_or(scenario); }

    // [eval]
    MetricKind metric = MetricKind::Accuracy;

    static TrainConfig default_pretrain();
    static TrainConfig default_train();
    EmbedderConfig embedder_config() const;
    BackboneConfig backbone_config() const;
    PromptBankConfig bank_config() const;
};

HarnessConfig parse_config_text(const std::string& text);
HarnessConfig parse_config_file(const std::string& path);
/// Canonical, re-parseable form; doubles keep full precision.
std::string config_to_text(const HarnessConfig& config);
/// FNV-1a over the canonical text, as 16 hex digits.
std::string config_hash_hex(const HarnessConfig& config);

struct PipelineResult {
    EvalResult eval;
    ParamCounts counts;
    TrainResult prompt_history;
    BackboneParams backbone;
    PromptBank bank;
    std::shared_ptr<const Vocab> vocab;
    std::vector<MultimodalSample> test_set_complete;
};

/// pretrain -> freeze -> prompt-train -> evaluate. Writes manifest.txt,
/// vocab.txt, checkpoints, loss histories and eval_report.csv under
/// out_dir. A non-empty reuse_backbone path skips pretraining and loads
/// the frozen weights from that checkpoint instead.
PipelineResult run_pipeline(const HarnessConfig& config, const std::string& out_dir,
                            const std::string& reuse_backbone = {});

/// Applies a deterministic missing-case partition to a complete set.
std::vector<MultimodalSample> make_missing_set(const std::vector<MultimodalSample>& complete,
                                               double eta, MissingScenario scenario,
                                               std::uint64_t seed);

/// Standalone pipeline stages for the CLI. stage_prompt_train expects
/// out_dir/backbone.pwck; stage_evaluate expects out_dir/model.pwck;
/// both throw DependencyError otherwise.
void stage_pretrain(const HarnessConfig& config, const std::string& out_dir);
void stage_prompt_train(const HarnessConfig& config, const std::string& out_dir);
EvalResult stage_evaluate(const HarnessConfig& config, const std::string& out_dir);

/// Trains once per (scenario, train eta) against a shared pretrained
/// backbone and evaluates every cell across all test etas. Emits
/// eta_grid.csv and a gnuplot script.
void sweep_missing_rate(const HarnessConfig& base, const std::vector<double>& etas,
                        const std::vector<MissingScenario>& scenarios,
                        const std::string& out_dir);

/// One prompt-training run per (start, end) placement on identical data
/// and seeds. Emits layer_grid.csv.
void sweep_prompt_layers(const HarnessConfig& base,
                         const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                         const std::string& out_dir);

/// One run per prompt length plus a parameter-matched baseline control
/// per length (classifier hidden layer sized to the prompt parameter
/// count). Emits length_grid.csv with a parameter-ratio column.
void sweep_prompt_length(const HarnessConfig& base, const std::vector<std::size_t>& lengths,
                         const std::string& out_dir);

/// Every contiguous (start, end) pair for the given depth.
std::vector<std::pair<std::size_t, std::size_t>> all_continuous_pairs(std::size_t depth);

} // namespace pw

#endif
