#ifndef PROMPTWISE_TRANSFORMER_HPP
#define PROMPTWISE_TRANSFORMER_HPP

#include <cstddef>
#include <vector>

#include "promptwise/embedding.hpp"
#include "promptwise/prompt_bank.hpp"
#include "promptwise/tensor.hpp"

namespace pw {

struct BackboneConfig {
    std::size_t depth = 6;  // N encoder layers
    std::size_t dim = 32;   // embedding width d
    std::size_t classes = 4;
    /// Extra hidden layer between pooler and classifier; 0 disables it.
    /// Used by the parameter-matched baseline control.
    std::size_t head_hidden = 0;

    std::size_t mlp_hidden() const { return 4 * dim; }
};

/// One pre-norm encoder block: norm -> single-head MSA -> residual ->
/// norm -> GELU MLP -> residual.
struct LayerParams {
    TensorPtr wq, wk, wv, wo;                          // d x d
    TensorPtr ln1_gain, ln1_bias, ln2_gain, ln2_bias;  // 1 x d
    TensorPtr mlp_w1, mlp_b1, mlp_w2, mlp_b2;          // d x 4d, 1 x 4d, 4d x d, 1 x d

    std::vector<TensorPtr> tensors() const;
};

/// The transformer f_theta plus the task head. Backbone tensors (layers
/// and embedding tables) are frozen after pretraining; only the pooler and
/// classifier stay trainable.
struct BackboneParams {
    BackboneConfig config;
    Embedder embedder;
    std::vector<LayerParams> layers;
    TensorPtr pooler_w;      // d x d, tanh-activated
    TensorPtr head_hidden_w; // d x H, only when config.head_hidden > 0
    TensorPtr head_hidden_b; // 1 x H
    TensorPtr classifier_w;  // d (or H) x C
    TensorPtr classifier_b;  // 1 x C

    static BackboneParams init(const BackboneConfig& config, const EmbedderConfig& embed_config,
                               std::mt19937_64& rng);

    std::vector<TensorPtr> backbone_tensors() const;  // frozen set
    std::vector<TensorPtr> head_tensors() const;      // pooler + classifier
    NamedTensors named_tensors() const;

    void set_backbone_trainable(bool trainable);
    void freeze_backbone() { set_backbone_trainable(false); }
};

struct ForwardTrace {
    /// Sequence length entering each layer, before any prompt attachment.
    std::vector<std::size_t> layer_input_lengths;
    std::size_t final_length = 0;
    TensorPtr text_feature;  // 1 x d, the text task token after the last layer
    TensorPtr logits;        // 1 x C
};

/// Plain pre-norm block on h (L x d).
TensorPtr msa_plain(const TensorPtr& h, const LayerParams& layer);

/// Same block with sub-prompts prepended to the key and value matrices.
/// Queries come only from h, so the output keeps h's length.
TensorPtr msa_attention_prompted(const TensorPtr& h, const TensorPtr& p_k, const TensorPtr& p_v,
                                 const LayerParams& layer);

/// Prepends prompt rows to the feature rows. Rows carried over from
/// earlier prompted layers are retained, so the sequence grows by L_p per
/// prompted layer.
TensorPtr attach_input_level(const TensorPtr& prompt, const TensorPtr& h);

/// Runs the encoder with the bank's prompts for (sample case, layer)
/// attached over the prompted range, pools the text task token and applies
/// the classifier.
ForwardTrace forward(const JointSequence& sample, const BackboneParams& backbone,
                     const PromptBank& bank);

struct ParamCounts {
    std::size_t trainable = 0;
    std::size_t frozen = 0;
    /// Prompt parameters over frozen backbone parameters; the task head is
    /// excluded from the numerator.
    double prompt_ratio = 0.0;
};

ParamCounts count_params(const BackboneParams& backbone, const PromptBank& bank);

} // namespace pw

#endif
