#ifndef PROMPTWISE_OPTIM_HPP
#define PROMPTWISE_OPTIM_HPP

#include <cstddef>
#include <vector>

#include "promptwise/tensor.hpp"

namespace pw {

/// Linear warmup from 0 to base_lr over the first warmup_fraction of
/// total_steps, then linear decay to 0 at total_steps.
double lr_at_step(std::size_t step, std::size_t total_steps, double base_lr,
                  double warmup_fraction);

struct AdamWOptions {
    double base_lr = 1e-2;
    double weight_decay = 2e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// AdamW with decoupled weight decay: parameters shrink by
/// (1 - lr * weight_decay) independently of the moment update. Frozen
/// tensors (requires_grad == false) are never touched.
class AdamW {
  public:
    using Options = AdamWOptions;

    explicit AdamW(std::vector<TensorPtr> params, Options opts = Options());

    /// One update over all trainable registered parameters using their
    /// accumulated gradients. Throws InvariantError if a trainable
    /// parameter has no gradient.
    void step(double lr_now);

    void zero_grad();

    std::size_t step_count() const { return step_count_; }
    const Options& options() const { return opts_; }
    const std::vector<TensorPtr>& params() const { return params_; }

  private:
    std::vector<TensorPtr> params_;  // trainable only
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t step_count_ = 0;
    Options opts_;
};

} // namespace pw

#endif
