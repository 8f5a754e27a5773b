#include "promptwise/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace pw {

double accuracy(const std::vector<std::size_t>& preds, const std::vector<std::size_t>& labels) {
    if (preds.empty() || preds.size() != labels.size()) {
        throw ArgumentError("accuracy: need equal nonempty prediction/label lists");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        hits += preds[i] == labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double f1_macro(const std::vector<std::vector<int>>& preds,
                const std::vector<std::vector<int>>& labels, std::size_t classes) {
    if (classes == 0) {
        throw ArgumentError("f1_macro: classes must be positive");
    }
    if (preds.empty() || preds.size() != labels.size()) {
        throw ArgumentError("f1_macro: need equal nonempty prediction/label lists");
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].size() != classes || labels[i].size() != classes) {
            throw ArgumentError("f1_macro: bit vector length does not match class count");
        }
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const bool p = preds[i][c] != 0;
            const bool l = labels[i][c] != 0;
            tp += (p && l) ? 1 : 0;
            fp += (p && !l) ? 1 : 0;
            fn += (!p && l) ? 1 : 0;
        }
        const std::size_t denom = 2 * tp + fp + fn;
        sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
    return sum / static_cast<double>(classes);
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.empty() || scores.size() != labels.size()) {
        throw ArgumentError("auroc: need equal nonempty score/label lists");
    }
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        (labels[i] != 0 ? pos : neg).push_back(scores[i]);
    }
    if (pos.empty() || neg.empty()) {
        throw MetricError("auroc: undefined without both a positive and a negative label");
    }
    double credit = 0.0;
    for (double p : pos) {
        for (double n : neg) {
            if (p > n) {
                credit += 1.0;
            } else if (p == n) {
                credit += 0.5;
            }
        }
    }
    return credit / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

const char* metric_name(MetricKind kind) {
    switch (kind) {
        case MetricKind::Accuracy:
            return "accuracy";
        case MetricKind::F1Macro:
            return "f1_macro";
        case MetricKind::Auroc:
            return "auroc";
    }
    return "?";
}

MetricKind metric_from_name(const std::string& s) {
    if (s == "accuracy") {
        return MetricKind::Accuracy;
    }
    if (s == "f1_macro") {
        return MetricKind::F1Macro;
    }
    if (s == "auroc") {
        return MetricKind::Auroc;
    }
    throw ConfigError("unknown metric: " + s);
}

JointSequence encode_sample(const MultimodalSample& sample, const Vocab& vocab,
                            const Embedder& embedder) {
    const auto ids = tokenize_text(sample.text, vocab);
    const auto patches = patchify_image(sample.image);
    return assemble_sequence(ids, patches, embedder, sample.missing_case);
}

namespace {

struct CaseAccumulator {
    std::vector<std::size_t> pred_idx, label_idx;
    std::vector<std::vector<int>> pred_bits, label_bits;
    std::vector<double> scores;
    std::vector<int> binary_labels;

    double metric(MetricKind kind, std::size_t classes) const {
        switch (kind) {
            case MetricKind::Accuracy:
                return accuracy(pred_idx, label_idx);
            case MetricKind::F1Macro:
                return f1_macro(pred_bits, label_bits, classes);
            case MetricKind::Auroc:
                return auroc(scores, binary_labels);
        }
        return 0.0;
    }
};

} // namespace

EvalResult evaluate(const BackboneParams& backbone, const PromptBank& bank, const Vocab& vocab,
                    const std::vector<MultimodalSample>& test_set, MetricKind kind) {
    if (test_set.empty()) {
        throw ArgumentError("evaluate: empty test set");
    }
    const std::size_t classes = backbone.config.classes;
    if (kind == MetricKind::Auroc && classes != 2) {
        throw MetricError("auroc: needs a binary task, got " + std::to_string(classes) +
                          " classes");
    }

    CaseAccumulator overall;
    std::map<MissingCase, CaseAccumulator> per_case;
    for (const auto& sample : test_set) {
        const auto seq = encode_sample(sample, vocab, backbone.embedder);
        const auto trace = forward(seq, backbone, bank);
        const auto& z = trace.logits->data;

        std::size_t pred = 0;
        for (std::size_t c = 1; c < classes; ++c) {
            if (z[c] > z[pred]) {
                pred = c;
            }
        }
        std::vector<int> pred_bits(classes), label_bits(classes);
        for (std::size_t c = 0; c < classes; ++c) {
            pred_bits[c] = z[c] > 0.0 ? 1 : 0;
            label_bits[c] = sample.label == c ? 1 : 0;
        }

        for (CaseAccumulator* acc : {&overall, &per_case[sample.missing_case]}) {
            acc->pred_idx.push_back(pred);
            acc->label_idx.push_back(sample.label);
            acc->pred_bits.push_back(pred_bits);
            acc->label_bits.push_back(label_bits);
            if (classes == 2) {
                // Probability of class 1; any strictly monotone score works.
                acc->scores.push_back(1.0 / (1.0 + std::exp(z[0] - z[1])));
                acc->binary_labels.push_back(sample.label == 1 ? 1 : 0);
            }
        }
    }

    EvalResult result;
    result.overall = overall.metric(kind, classes);
    for (const auto& [c, acc] : per_case) {
        result.case_counts[c] = acc.pred_idx.size();
        result.per_case[c] = acc.metric(kind, classes);
    }
    return result;
}

} // namespace pw
