#include "promptwise/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace pw {

const char* loss_name(LossKind kind) {
    return kind == LossKind::CrossEntropyMulticlass ? "cross_entropy" : "bce";
}

LossKind loss_from_name(const std::string& s) {
    if (s == "cross_entropy") {
        return LossKind::CrossEntropyMulticlass;
    }
    if (s == "bce") {
        return LossKind::BinaryCrossEntropyMultilabel;
    }
    throw ConfigError("unknown loss kind: " + s);
}

TensorPtr loss_op(const TensorPtr& logits, std::size_t label, LossKind kind) {
    const std::size_t classes = logits->cols;
    if (label >= classes) {
        throw RangeError("loss: label " + std::to_string(label) + " out of range for " +
                         std::to_string(classes) + " classes");
    }
    if (kind == LossKind::CrossEntropyMulticlass) {
        return cross_entropy_logits(logits, label);
    }
    std::vector<double> targets(classes, 0.0);
    targets[label] = 1.0;
    return bce_with_logits(logits, targets);
}

double train_step(const std::vector<MultimodalSample>& batch, BackboneParams& backbone,
                  const PromptBank& bank, const Vocab& vocab, AdamW& optimizer, double lr_now,
                  LossKind loss_kind) {
    if (batch.empty()) {
        throw ArgumentError("train_step: empty batch");
    }
    optimizer.zero_grad();

    TensorPtr total;
    for (const auto& sample : batch) {
        const auto seq = encode_sample(sample, vocab, backbone.embedder);
        const auto trace = forward(seq, backbone, bank);
        const auto sample_loss = loss_op(trace.logits, sample.label, loss_kind);
        total = total ? add(total, sample_loss) : sample_loss;
    }
    auto mean_loss = scale(total, 1.0 / static_cast<double>(batch.size()));
    const double value = mean_loss->item();
    if (!std::isfinite(value)) {
        throw NumericError("train_step: non-finite loss " + std::to_string(value) + " at step " +
                           std::to_string(optimizer.step_count() + 1));
    }
    mean_loss->backward();
    optimizer.step(lr_now);
    return value;
}

TrainResult train_loop(const std::vector<MultimodalSample>& complete_train_set,
                       const MissingSpec& spec, const TrainConfig& config,
                       BackboneParams& backbone, const PromptBank& bank, const Vocab& vocab) {
    if (complete_train_set.empty()) {
        throw ArgumentError("train_loop: empty training set");
    }
    if (config.total_steps < 1 || config.batch_size < 1) {
        throw ConfigError("train_loop: total_steps and batch_size must be at least 1");
    }
    const std::size_t n = complete_train_set.size();

    std::vector<TensorPtr> params = backbone.backbone_tensors();
    for (const auto& t : backbone.head_tensors()) {
        params.push_back(t);
    }
    for (const auto& t : bank.all_prompts()) {
        params.push_back(t);
    }
    AdamW optimizer(std::move(params), AdamW::Options{config.base_lr, config.weight_decay});

    std::vector<MissingCase> cases =
        config.resample_per_epoch ? resample_cases_per_epoch(n, spec, 0) : partition(n, spec);
    std::vector<std::size_t> order(n);
    std::size_t epoch = 0;
    std::size_t cursor = n;  // force a shuffle before the first batch
    auto next_epoch = [&](bool initial) {
        if (!initial) {
            ++epoch;
            if (config.resample_per_epoch) {
                cases = resample_cases_per_epoch(n, spec, epoch);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            order[i] = i;
        }
        std::mt19937_64 rng(derive_seed(config.seed, 0x5a0f1e00 + epoch));
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[rng() % i]);
        }
        cursor = 0;
    };
    next_epoch(true);

    TrainResult result;
    result.history.reserve(config.total_steps);
    for (std::size_t step = 1; step <= config.total_steps; ++step) {
        std::vector<MultimodalSample> batch;
        batch.reserve(config.batch_size);
        while (batch.size() < config.batch_size) {
            if (cursor == n) {
                next_epoch(false);
            }
            const std::size_t idx = order[cursor++];
            batch.push_back(apply_case(complete_train_set[idx], cases[idx]));
        }
        const double lr_now =
            lr_at_step(step, config.total_steps, config.base_lr, config.warmup_fraction);
        const double loss =
            train_step(batch, backbone, bank, vocab, optimizer, lr_now, config.loss_kind);
        result.history.push_back(StepRecord{step, lr_now, loss});
    }
    return result;
}

void save_loss_history(const std::string& path, const TrainResult& result) {
    std::ofstream os(path);
    if (!os) {
        throw Error("cannot write loss history: " + path);
    }
    os << "step,lr,loss\n";
    char buf[64];
    for (const auto& rec : result.history) {
        os << rec.step << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", rec.lr);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", rec.loss);
        os << buf << '\n';
    }
}

} // namespace pw
