#ifndef PROMPTWISE_EMBEDDING_HPP
#define PROMPTWISE_EMBEDDING_HPP

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "promptwise/checkpoint.hpp"
#include "promptwise/missing_case.hpp"
#include "promptwise/tensor.hpp"

namespace pw {

struct TextInput {
    std::string content;
    std::size_t max_len = 16;  // cap on content tokens, before the task prefix
};

/// Pixels stored height-major, then width, then channel.
struct ImageInput {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::size_t patch_size = 4;
    std::vector<double> pixels;

    double& at(std::size_t h, std::size_t w, std::size_t c) {
        return pixels[(h * width + w) * channels + c];
    }
    double at(std::size_t h, std::size_t w, std::size_t c) const {
        return pixels[(h * width + w) * channels + c];
    }
    std::size_t num_patches() const {
        return (height / patch_size) * (width / patch_size);
    }
    std::size_t patch_dim() const { return patch_size * patch_size * channels; }
};

/// Dummy substitute for a missing text modality: the empty string.
TextInput dummy_text(std::size_t max_len);
/// Dummy substitute for a missing image: every pixel equal to one.
ImageInput dummy_image(std::size_t height, std::size_t width, std::size_t channels,
                       std::size_t patch_size);

/// Fixed word table; line number = id. Ids 0 and 1 are reserved for the
/// unknown token and the text task token.
class Vocab {
  public:
    static constexpr std::size_t kUnknownId = 0;
    static constexpr std::size_t kTextTaskId = 1;

    explicit Vocab(std::vector<std::string> words);

    std::size_t size() const { return words_.size(); }
    const std::string& word(std::size_t id) const { return words_[id]; }
    /// Id of the word, or kUnknownId when absent.
    std::size_t lookup(const std::string& word) const;

    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

  private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Lowercases, splits on any non-alphanumeric character, maps through the
/// vocab with unknown fallback, truncates content to max_len tokens and
/// prefixes the text task token id.
std::vector<std::size_t> tokenize_text(const TextInput& input, const Vocab& vocab);

/// Row p holds the flattened pixels (height-major, then width, then
/// channel) of the p-th patch in row-major patch order.
TensorPtr patchify_image(const ImageInput& input);

struct EmbedderConfig {
    std::size_t vocab_size = 256;
    std::size_t dim = 32;
    std::size_t max_text_len = 16;
    std::size_t image_height = 8;
    std::size_t image_width = 8;
    std::size_t channels = 1;
    std::size_t patch_size = 4;

    std::size_t num_patches() const {
        return (image_height / patch_size) * (image_width / patch_size);
    }
    std::size_t patch_dim() const { return patch_size * patch_size * channels; }
    /// Total sequence length: text task + content + image task + patches.
    std::size_t sequence_length(std::size_t content_tokens) const {
        return 1 + content_tokens + 1 + num_patches();
    }
};

/// The modality-specific embedding tables producing h^1. Position
/// embeddings are indexed within each modality region, so the image rows
/// never depend on the text length.
struct Embedder {
    EmbedderConfig config;
    TensorPtr token_table;  // vocab_size x d
    TensorPtr patch_proj;   // patch_dim x d
    TensorPtr text_pos;     // (1 + max_text_len) x d
    TensorPtr image_pos;    // (1 + num_patches) x d
    TensorPtr type_table;   // 2 x d: row 0 text, row 1 image
    TensorPtr task_tokens;  // 2 x d: row 0 text task, row 1 image task

    static Embedder init(const EmbedderConfig& config, std::mt19937_64& rng);
    NamedTensors named_tensors(const std::string& prefix) const;
    void set_trainable(bool trainable);
};

/// The joint token sequence h^1 for one sample.
struct JointSequence {
    TensorPtr tokens;  // L x d
    std::size_t text_begin = 0;
    std::size_t text_end = 0;  // text span [begin, end), leading row is the text task token
    std::size_t image_begin = 0;
    std::size_t image_end = 0;
    std::size_t text_task_index = 0;
    MissingCase missing_case = MissingCase::Complete;

    std::size_t length() const { return tokens->rows; }
};

/// Builds [text region | image region]: token/patch embeddings plus
/// additive per-region position and modality-type embeddings, each region
/// led by its task token.
JointSequence assemble_sequence(const std::vector<std::size_t>& text_ids,
                                const TensorPtr& patches, const Embedder& embedder,
                                MissingCase missing_case);

} // namespace pw

#endif
