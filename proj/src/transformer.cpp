#include "promptwise/transformer.hpp"

#include <cmath>

namespace pw {

std::vector<TensorPtr> LayerParams::tensors() const {
    return {wq,       wk,       wv,       wo,     ln1_gain, ln1_bias,
            ln2_gain, ln2_bias, mlp_w1,   mlp_b1, mlp_w2,   mlp_b2};
}

BackboneParams BackboneParams::init(const BackboneConfig& config,
                                    const EmbedderConfig& embed_config, std::mt19937_64& rng) {
    if (embed_config.dim != config.dim) {
        throw ConfigError("backbone: embedder dim " + std::to_string(embed_config.dim) +
                          " does not match model dim " + std::to_string(config.dim));
    }
    const std::size_t d = config.dim;
    const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
    const double mlp_out_std = 1.0 / std::sqrt(static_cast<double>(config.mlp_hidden()));
    BackboneParams b;
    b.config = config;
    b.embedder = Embedder::init(embed_config, rng);
    b.layers.reserve(config.depth);
    for (std::size_t i = 0; i < config.depth; ++i) {
        LayerParams layer;
        layer.wq = gaussian(d, d, 0.0, proj_std, rng, true);
        layer.wk = gaussian(d, d, 0.0, proj_std, rng, true);
        layer.wv = gaussian(d, d, 0.0, proj_std, rng, true);
        layer.wo = gaussian(d, d, 0.0, proj_std, rng, true);
        layer.ln1_gain = full(1, d, 1.0, true);
        layer.ln1_bias = full(1, d, 0.0, true);
        layer.ln2_gain = full(1, d, 1.0, true);
        layer.ln2_bias = full(1, d, 0.0, true);
        layer.mlp_w1 = gaussian(d, config.mlp_hidden(), 0.0, proj_std, rng, true);
        layer.mlp_b1 = full(1, config.mlp_hidden(), 0.0, true);
        layer.mlp_w2 = gaussian(config.mlp_hidden(), d, 0.0, mlp_out_std, rng, true);
        layer.mlp_b2 = full(1, d, 0.0, true);
        b.layers.push_back(std::move(layer));
    }
    b.pooler_w = gaussian(d, d, 0.0, proj_std, rng, true);
    std::size_t classifier_in = d;
    if (config.head_hidden > 0) {
        b.head_hidden_w = gaussian(d, config.head_hidden, 0.0, proj_std, rng, true);
        b.head_hidden_b = full(1, config.head_hidden, 0.0, true);
        classifier_in = config.head_hidden;
    }
    b.classifier_w = gaussian(classifier_in, config.classes, 0.0,
                              1.0 / std::sqrt(static_cast<double>(classifier_in)), rng, true);
    b.classifier_b = full(1, config.classes, 0.0, true);
    return b;
}

std::vector<TensorPtr> BackboneParams::backbone_tensors() const {
    std::vector<TensorPtr> out;
    for (const auto& [name, t] : embedder.named_tensors("")) {
        out.push_back(t);
    }
    for (const auto& layer : layers) {
        for (const auto& t : layer.tensors()) {
            out.push_back(t);
        }
    }
    return out;
}

std::vector<TensorPtr> BackboneParams::head_tensors() const {
    std::vector<TensorPtr> out{pooler_w};
    if (head_hidden_w) {
        out.push_back(head_hidden_w);
        out.push_back(head_hidden_b);
    }
    out.push_back(classifier_w);
    out.push_back(classifier_b);
    return out;
}

NamedTensors BackboneParams::named_tensors() const {
    NamedTensors out = embedder.named_tensors("backbone/embed/");
    static const char* kMatrixNames[] = {"wq",       "wk",       "wv",     "wo",
                                         "ln1_gain", "ln1_bias", "ln2_gain", "ln2_bias",
                                         "mlp_w1",   "mlp_b1",   "mlp_w2", "mlp_b2"};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto tensors = layers[i].tensors();
        for (std::size_t j = 0; j < tensors.size(); ++j) {
            out.emplace_back("backbone/layer" + std::to_string(i) + "/" + kMatrixNames[j],
                             tensors[j]);
        }
    }
    out.emplace_back("head/pooler", pooler_w);
    if (head_hidden_w) {
        out.emplace_back("head/hidden_w", head_hidden_w);
        out.emplace_back("head/hidden_b", head_hidden_b);
    }
    out.emplace_back("head/classifier", classifier_w);
    out.emplace_back("head/classifier_bias", classifier_b);
    return out;
}

void BackboneParams::set_backbone_trainable(bool trainable) {
    for (auto& t : backbone_tensors()) {
        t->requires_grad = trainable;
        if (!trainable) {
            t->grad.clear();
        }
    }
}

namespace {

TensorPtr encoder_block(const TensorPtr& h, const LayerParams& layer, const TensorPtr& p_k,
                        const TensorPtr& p_v) {
    const std::size_t d = h->cols;
    if (layer.wq->rows != d) {
        throw ShapeError("encoder block: input width " + std::to_string(d) +
                         " does not match weights " + layer.wq->shape_str());
    }
    auto normed = layer_norm(h, layer.ln1_gain, layer.ln1_bias);
    auto q = matmul(normed, layer.wq);
    auto k = matmul(normed, layer.wk);
    auto v = matmul(normed, layer.wv);
    if (p_k) {
        if (p_k->rows != p_v->rows || p_k->cols != p_v->cols) {
            throw ShapeError("encoder block: sub-prompt shapes disagree, " + p_k->shape_str() +
                             " vs " + p_v->shape_str());
        }
        k = concat_rows(p_k, k);
        v = concat_rows(p_v, v);
    }
    auto scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d)));
    auto attn = matmul(softmax_rows(scores), v);
    auto h1 = add(h, matmul(attn, layer.wo));
    auto normed2 = layer_norm(h1, layer.ln2_gain, layer.ln2_bias);
    auto hidden = gelu(add_row(matmul(normed2, layer.mlp_w1), layer.mlp_b1));
    auto mlp = add_row(matmul(hidden, layer.mlp_w2), layer.mlp_b2);
    return add(h1, mlp);
}

} // namespace

TensorPtr msa_plain(const TensorPtr& h, const LayerParams& layer) {
    return encoder_block(h, layer, nullptr, nullptr);
}

TensorPtr msa_attention_prompted(const TensorPtr& h, const TensorPtr& p_k, const TensorPtr& p_v,
                                 const LayerParams& layer) {
    if (!p_k || !p_v) {
        throw ArgumentError("msa_attention_prompted: sub-prompts are required");
    }
    return encoder_block(h, layer, p_k, p_v);
}

TensorPtr attach_input_level(const TensorPtr& prompt, const TensorPtr& h) {
    if (prompt->rows < 1) {
        throw ConfigError("attach_input_level: prompt must have at least one row");
    }
    if (prompt->cols != h->cols) {
        throw ShapeError("attach_input_level: width mismatch, " + prompt->shape_str() + " vs " +
                         h->shape_str());
    }
    return concat_rows(prompt, h);
}

ForwardTrace forward(const JointSequence& sample, const BackboneParams& backbone,
                     const PromptBank& bank) {
    bank.validate_for_depth(backbone.config.depth);
    if (sample.tokens->cols != backbone.config.dim) {
        throw ShapeError("forward: sample width " + std::to_string(sample.tokens->cols) +
                         " does not match model dim " + std::to_string(backbone.config.dim));
    }

    ForwardTrace trace;
    TensorPtr h = sample.tokens;
    std::size_t task_index = sample.text_task_index;
    for (std::size_t i = 0; i < backbone.config.depth; ++i) {
        trace.layer_input_lengths.push_back(h->rows);
        const LayerParams& layer = backbone.layers[i];
        if (bank.covers_layer(i)) {
            const TensorPtr& prompt = bank.select(sample.missing_case, i);
            if (bank.config().mode == PromptMode::InputLevel) {
                h = attach_input_level(prompt, h);
                task_index += prompt->rows;
                h = msa_plain(h, layer);
            } else {
                auto [p_k, p_v] = split_kv(prompt);
                h = msa_attention_prompted(h, p_k, p_v, layer);
            }
        } else {
            h = msa_plain(h, layer);
        }
    }
    trace.final_length = h->rows;

    trace.text_feature = slice_rows(h, task_index, task_index + 1);
    auto pooled = tanh_op(matmul(trace.text_feature, backbone.pooler_w));
    if (backbone.head_hidden_w) {
        pooled = tanh_op(add_row(matmul(pooled, backbone.head_hidden_w), backbone.head_hidden_b));
    }
    trace.logits = add_row(matmul(pooled, backbone.classifier_w), backbone.classifier_b);
    return trace;
}

ParamCounts count_params(const BackboneParams& backbone, const PromptBank& bank) {
    ParamCounts counts;
    for (const auto& t : backbone.backbone_tensors()) {
        counts.frozen += t->size();
    }
    std::size_t head = 0;
    for (const auto& t : backbone.head_tensors()) {
        head += t->size();
    }
    const std::size_t prompts = bank.parameter_count();
    counts.trainable = prompts + head;
    counts.prompt_ratio =
        counts.frozen == 0 ? 0.0
                           : static_cast<double>(prompts) / static_cast<double>(counts.frozen);
    return counts;
}

} // namespace pw
