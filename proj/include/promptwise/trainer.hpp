#ifndef PROMPTWISE_TRAINER_HPP
#define PROMPTWISE_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "promptwise/metrics.hpp"
#include "promptwise/optim.hpp"
#include "promptwise/prompt_bank.hpp"
#include "promptwise/simulator.hpp"
#include "promptwise/transformer.hpp"

namespace pw {

enum class LossKind {
    CrossEntropyMulticlass,
    BinaryCrossEntropyMultilabel,
};

const char* loss_name(LossKind kind);
LossKind loss_from_name(const std::string& s);

struct TrainConfig {
    std::size_t total_steps = 500;
    std::size_t batch_size = 16;
    double base_lr = 1e-2;
    double weight_decay = 2e-2;
    double warmup_fraction = 0.1;
    LossKind loss_kind = LossKind::CrossEntropyMulticlass;
    std::uint64_t seed = 0;
    /// Draw a fresh case assignment each epoch instead of a fixed one.
    bool resample_per_epoch = false;
};

/// Task loss for one sample. Multiclass: -log softmax(logits)[label].
/// Multilabel: mean binary cross-entropy against the one-hot of the label.
TensorPtr loss_op(const TensorPtr& logits, std::size_t label, LossKind kind);

/// Forward every sample with its case's prompts, take the mean loss,
/// backprop and apply one optimizer update. Returns the mean loss.
/// Throws NumericError when the loss is non-finite.
double train_step(const std::vector<MultimodalSample>& batch, BackboneParams& backbone,
                  const PromptBank& bank, const Vocab& vocab, AdamW& optimizer, double lr_now,
                  LossKind loss_kind);

struct StepRecord {
    std::size_t step = 0;  // 1-based
    double lr = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    std::vector<StepRecord> history;
};

/// Iterates seeded-shuffled batches over the complete training set with
/// cases drawn from spec, updating exactly the tensors flagged trainable
/// (requires_grad). The frozen backbone is never touched.
TrainResult train_loop(const std::vector<MultimodalSample>& complete_train_set,
                       const MissingSpec& spec, const TrainConfig& config,
                       BackboneParams& backbone, const PromptBank& bank, const Vocab& vocab);

/// CSV with columns step, lr, loss.
void save_loss_history(const std::string& path, const TrainResult& result);

} // namespace pw

#endif
