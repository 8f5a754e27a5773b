#include "promptwise/optim.hpp"

#include <cmath>

namespace pw {

double lr_at_step(std::size_t step, std::size_t total_steps, double base_lr,
                  double warmup_fraction) {
    if (step > total_steps) {
        throw RangeError("lr_at_step: step " + std::to_string(step) + " exceeds total " +
                         std::to_string(total_steps));
    }
    if (warmup_fraction <= 0.0 || warmup_fraction >= 1.0) {
        throw ConfigError("lr_at_step: warmup_fraction must lie in (0, 1)");
    }
    const double warmup_steps =
        std::max(1.0, std::round(warmup_fraction * static_cast<double>(total_steps)));
    const double s = static_cast<double>(step);
    const double t = static_cast<double>(total_steps);
    if (s <= warmup_steps) {
        return base_lr * s / warmup_steps;
    }
    return base_lr * (t - s) / (t - warmup_steps);
}

AdamW::AdamW(std::vector<TensorPtr> params, Options opts) : opts_(opts) {
    for (auto& p : params) {
        if (p->requires_grad) {
            params_.push_back(std::move(p));
        }
    }
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i]->size(), 0.0);
        v_[i].assign(params_[i]->size(), 0.0);
    }
}

void AdamW::zero_grad() {
    for (auto& p : params_) {
        p->zero_grad();
    }
}

void AdamW::step(double lr_now) {
    if (lr_now < 0.0) {
        throw ArgumentError("AdamW::step: negative learning rate");
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = *params_[i];
        if (!p.has_grad()) {
            throw InvariantError("AdamW::step: trainable parameter has no gradient");
        }
        const double decay = 1.0 - lr_now * opts_.weight_decay;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double g = p.grad[j];
            m_[i][j] = opts_.beta1 * m_[i][j] + (1.0 - opts_.beta1) * g;
            v_[i][j] = opts_.beta2 * v_[i][j] + (1.0 - opts_.beta2) * g * g;
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            p.data[j] = p.data[j] * decay - lr_now * mhat / (std::sqrt(vhat) + opts_.epsilon);
        }
    }
}

} // namespace pw
