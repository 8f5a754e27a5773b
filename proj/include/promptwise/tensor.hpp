#ifndef PROMPTWISE_TENSOR_HPP
#define PROMPTWISE_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "promptwise/error.hpp"

namespace pw {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense 2-D tensor of doubles with an optional gradient slot.
///
/// Every op below records its inputs and a pull-back closure on the produced
/// tensor, so calling backward() on a scalar result replays the tape in
/// reverse topological order. Gradients accumulate additively; callers zero
/// them explicitly between optimizer steps.
struct Tensor : std::enable_shared_from_this<Tensor> {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries
    std::vector<double> grad;  // empty = no gradient; else same size as data
    bool requires_grad = false;

    // Tape edges; empty for leaves. backward_fn pulls this->grad into parents.
    std::vector<TensorPtr> parents;
    std::function<void(Tensor&)> backward_fn;

    Tensor(std::size_t r, std::size_t c, std::vector<double> d, bool rg);
    Tensor(const Tensor&) = delete;
    Tensor& operator=(const Tensor&) = delete;

    std::size_t size() const { return rows * cols; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool has_grad() const { return !grad.empty(); }
    double item() const;

    /// Allocates a zero gradient if absent. No-op on frozen tensors.
    void zero_grad();
    void accumulate_grad(const std::vector<double>& g);

    /// Reverse-mode pass from a 1x1 result, seeding with d(out)/d(out) = 1.
    void backward();

    std::string shape_str() const;
};

TensorPtr make_tensor(std::size_t rows, std::size_t cols, bool requires_grad = false);
TensorPtr make_tensor(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad = false);
TensorPtr full(std::size_t rows, std::size_t cols, double value, bool requires_grad = false);
TensorPtr gaussian(std::size_t rows, std::size_t cols, double mean, double stddev,
                   std::mt19937_64& rng, bool requires_grad = false);

// ---- differentiable ops ----

TensorPtr add(const TensorPtr& a, const TensorPtr& b);
/// a (LxD) plus a 1xD row replicated over every row of a.
TensorPtr add_row(const TensorPtr& a, const TensorPtr& row);
TensorPtr scale(const TensorPtr& a, double c);
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(const TensorPtr& a);
/// Row-wise softmax, stabilized by per-row max subtraction.
TensorPtr softmax_rows(const TensorPtr& a);
/// Per-row standardization followed by elementwise gain/bias (both 1 x a.cols).
TensorPtr layer_norm(const TensorPtr& a, const TensorPtr& gain, const TensorPtr& bias);
TensorPtr gelu(const TensorPtr& a);
TensorPtr tanh_op(const TensorPtr& a);
/// Stacks a on top of b (same column count).
TensorPtr concat_rows(const TensorPtr& a, const TensorPtr& b);
/// Rows [begin, end) of a; gradient scatters back into the slice.
TensorPtr slice_rows(const TensorPtr& a, std::size_t begin, std::size_t end);
/// Row lookup: out row i = table row indices[i]; gradient scatters into table rows.
TensorPtr gather_rows(const TensorPtr& table, const std::vector<std::size_t>& indices);
TensorPtr sum_all(const TensorPtr& a);

/// -log softmax(logits)[target]; logits must be 1xC. Backward is the
/// analytic softmax-minus-onehot form.
TensorPtr cross_entropy_logits(const TensorPtr& logits, std::size_t target);
/// Mean over classes of binary cross-entropy on sigmoid(logit); targets in {0,1}.
TensorPtr bce_with_logits(const TensorPtr& logits, const std::vector<double>& targets);

/// Variance epsilon used by layer_norm.
inline constexpr double kLayerNormEps = 1e-8;

/// Compares the reverse-mode gradient of f against central finite
/// differences at step h, for every entry of every tensor in params.
/// Returns the maximum relative error, with denominator
/// max(|analytic|, |numeric|, 1e-8). f must return a 1x1 tensor.
double grad_check(const std::function<TensorPtr()>& f, const std::vector<TensorPtr>& params,
                  double h);

} // namespace pw

#endif
