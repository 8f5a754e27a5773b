#ifndef PROMPTWISE_METRICS_HPP
#define PROMPTWISE_METRICS_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "promptwise/simulator.hpp"
#include "promptwise/transformer.hpp"

namespace pw {

/// Fraction of exact matches.
double accuracy(const std::vector<std::size_t>& preds, const std::vector<std::size_t>& labels);

/// Unweighted mean over classes of per-class F1, with 0/0 defined as 0.
/// Each bit vector has length classes.
double f1_macro(const std::vector<std::vector<int>>& preds,
                const std::vector<std::vector<int>>& labels, std::size_t classes);

/// Exact pairwise Mann-Whitney form: P(score_pos > score_neg) plus half
/// credit for ties. Labels must contain both classes.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

enum class MetricKind {
    Accuracy,
    F1Macro,
    Auroc,
};

const char* metric_name(MetricKind kind);
MetricKind metric_from_name(const std::string& s);

struct EvalResult {
    double overall = 0.0;
    std::map<MissingCase, double> per_case;
    std::map<MissingCase, std::size_t> case_counts;
};

/// Tokenize + patchify + assemble one sample against the backbone's
/// embedding tables.
JointSequence encode_sample(const MultimodalSample& sample, const Vocab& vocab,
                            const Embedder& embedder);

/// Overall metric plus the metric restricted to each missing-case
/// subgroup present in the test set.
EvalResult evaluate(const BackboneParams& backbone, const PromptBank& bank, const Vocab& vocab,
                    const std::vector<MultimodalSample>& test_set, MetricKind kind);

} // namespace pw

#endif
