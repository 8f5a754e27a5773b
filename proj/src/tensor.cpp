#include "promptwise/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace pw {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
}

} // namespace

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> d, bool rg)
    : rows(r), cols(c), data(std::move(d)), requires_grad(rg) {
    if (data.size() != rows * cols) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str());
    }
}

std::string Tensor::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

double Tensor::item() const {
    if (size() != 1) {
        throw ArgumentError("item() requires a 1x1 tensor, got " + shape_str());
    }
    return data[0];
}

void Tensor::zero_grad() {
    if (!requires_grad) {
        return;
    }
    grad.assign(data.size(), 0.0);
}

void Tensor::accumulate_grad(const std::vector<double>& g) {
    if (!requires_grad) {
        return;
    }
    if (g.size() != data.size()) {
        throw ShapeError("gradient length " + std::to_string(g.size()) +
                         " does not match tensor " + shape_str());
    }
    if (grad.empty()) {
        grad.assign(data.size(), 0.0);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        grad[i] += g[i];
    }
}

void Tensor::backward() {
    if (size() != 1) {
        throw ArgumentError("backward() requires a 1x1 tensor, got " + shape_str());
    }
    if (!requires_grad) {
        throw ArgumentError("backward() called on a tensor that does not require grad");
    }

    // Post-order DFS, pruned at frozen subgraphs.
    std::vector<Tensor*> order;
    std::unordered_set<const Tensor*> visited;
    struct Frame {
        Tensor* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({this, 0});
    visited.insert(this);
    while (!stack.empty()) {
        Frame& top = stack.back();
        if (top.next_parent < top.node->parents.size()) {
            Tensor* parent = top.node->parents[top.next_parent++].get();
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.push_back({parent, 0});
            }
        } else {
            order.push_back(top.node);
            stack.pop_back();
        }
    }

    accumulate_grad({1.0});
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (node->backward_fn && node->has_grad()) {
            node->backward_fn(*node);
        }
    }
}

TensorPtr make_tensor(std::size_t rows, std::size_t cols, bool requires_grad) {
    return std::make_shared<Tensor>(rows, cols, std::vector<double>(rows * cols, 0.0),
                                    requires_grad);
}

TensorPtr make_tensor(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad) {
    return std::make_shared<Tensor>(rows, cols, std::move(data), requires_grad);
}

TensorPtr full(std::size_t rows, std::size_t cols, double value, bool requires_grad) {
    return std::make_shared<Tensor>(rows, cols, std::vector<double>(rows * cols, value),
                                    requires_grad);
}

TensorPtr gaussian(std::size_t rows, std::size_t cols, double mean, double stddev,
                   std::mt19937_64& rng, bool requires_grad) {
    std::normal_distribution<double> dist(mean, stddev);
    std::vector<double> d(rows * cols);
    for (auto& v : d) {
        v = dist(rng);
    }
    return make_tensor(rows, cols, std::move(d), requires_grad);
}

namespace {

TensorPtr make_result(std::size_t rows, std::size_t cols, std::vector<double> data,
                      std::vector<TensorPtr> parents, std::function<void(Tensor&)> back) {
    bool rg = false;
    for (const auto& p : parents) {
        rg = rg || p->requires_grad;
    }
    auto out = make_tensor(rows, cols, std::move(data), rg);
    if (rg) {
        out->parents = std::move(parents);
        out->backward_fn = std::move(back);
    }
    return out;
}

} // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(*a, *b, "add");
    std::vector<double> d(a->size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = a->data[i] + b->data[i];
    }
    return make_result(a->rows, a->cols, std::move(d), {a, b}, [a, b](Tensor& out) {
        if (a->requires_grad) {
            a->accumulate_grad(out.grad);
        }
        if (b->requires_grad) {
            b->accumulate_grad(out.grad);
        }
    });
}

TensorPtr add_row(const TensorPtr& a, const TensorPtr& row) {
    if (row->rows != 1 || row->cols != a->cols) {
        throw ShapeError("add_row: row must be 1x" + std::to_string(a->cols) + ", got " +
                         row->shape_str());
    }
    std::vector<double> d(a->size());
    for (std::size_t i = 0; i < a->rows; ++i) {
        for (std::size_t j = 0; j < a->cols; ++j) {
            d[i * a->cols + j] = a->data[i * a->cols + j] + row->data[j];
        }
    }
    return make_result(a->rows, a->cols, std::move(d), {a, row}, [a, row](Tensor& out) {
        if (a->requires_grad) {
            a->accumulate_grad(out.grad);
        }
        if (row->requires_grad) {
            std::vector<double> g(row->size(), 0.0);
            for (std::size_t i = 0; i < out.rows; ++i) {
                for (std::size_t j = 0; j < out.cols; ++j) {
                    g[j] += out.grad[i * out.cols + j];
                }
            }
            row->accumulate_grad(g);
        }
    });
}

TensorPtr scale(const TensorPtr& a, double c) {
    std::vector<double> d(a->size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = a->data[i] * c;
    }
    return make_result(a->rows, a->cols, std::move(d), {a}, [a, c](Tensor& out) {
        std::vector<double> g(out.grad.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = c * out.grad[i];
        }
        a->accumulate_grad(g);
    });
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->cols != b->rows) {
        throw ShapeError("matmul: inner dimensions disagree, " + a->shape_str() + " vs " +
                         b->shape_str());
    }
    const std::size_t m = a->rows;
    const std::size_t n = a->cols;
    const std::size_t p = b->cols;
    std::vector<double> d(m * p, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double av = a->data[i * n + k];
            const double* brow = &b->data[k * p];
            double* drow = &d[i * p];
            for (std::size_t j = 0; j < p; ++j) {
                drow[j] += av * brow[j];
            }
        }
    }
    return make_result(m, p, std::move(d), {a, b}, [a, b, m, n, p](Tensor& out) {
        if (a->requires_grad) {
            // dA = dOut * B^T
            std::vector<double> ga(m * n, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = &out.grad[i * p];
                for (std::size_t k = 0; k < n; ++k) {
                    const double* brow = &b->data[k * p];
                    double s = 0.0;
                    for (std::size_t j = 0; j < p; ++j) {
                        s += grow[j] * brow[j];
                    }
                    ga[i * n + k] = s;
                }
            }
            a->accumulate_grad(ga);
        }
        if (b->requires_grad) {
            // dB = A^T * dOut
            std::vector<double> gb(n * p, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = &out.grad[i * p];
                for (std::size_t k = 0; k < n; ++k) {
                    const double av = a->data[i * n + k];
                    double* gbrow = &gb[k * p];
                    for (std::size_t j = 0; j < p; ++j) {
                        gbrow[j] += av * grow[j];
                    }
                }
            }
            b->accumulate_grad(gb);
        }
    });
}

TensorPtr transpose(const TensorPtr& a) {
    const std::size_t m = a->rows;
    const std::size_t n = a->cols;
    std::vector<double> d(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            d[j * m + i] = a->data[i * n + j];
        }
    }
    return make_result(n, m, std::move(d), {a}, [a, m, n](Tensor& out) {
        std::vector<double> g(m * n);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                g[i * n + j] = out.grad[j * m + i];
            }
        }
        a->accumulate_grad(g);
    });
}

TensorPtr softmax_rows(const TensorPtr& a) {
    if (a->size() == 0) {
        throw ArgumentError("softmax_rows: empty tensor");
    }
    const std::size_t m = a->rows;
    const std::size_t n = a->cols;
    std::vector<double> d(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* x = &a->data[i * n];
        double mx = x[0];
        for (std::size_t j = 1; j < n; ++j) {
            mx = std::max(mx, x[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            d[i * n + j] = std::exp(x[j] - mx);
            sum += d[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            d[i * n + j] /= sum;
        }
    }
    return make_result(m, n, std::move(d), {a}, [a, m, n](Tensor& out) {
        // dX = P .* (dY - rowsum(dY .* P))
        std::vector<double> g(m * n);
        for (std::size_t i = 0; i < m; ++i) {
            const double* p = &out.data[i * n];
            const double* dy = &out.grad[i * n];
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                dot += dy[j] * p[j];
            }
            for (std::size_t j = 0; j < n; ++j) {
                g[i * n + j] = p[j] * (dy[j] - dot);
            }
        }
        a->accumulate_grad(g);
    });
}

TensorPtr layer_norm(const TensorPtr& a, const TensorPtr& gain, const TensorPtr& bias) {
    const std::size_t n = a->cols;
    if (gain->rows != 1 || gain->cols != n || bias->rows != 1 || bias->cols != n) {
        throw ShapeError("layer_norm: gain/bias must be 1x" + std::to_string(n) + ", got " +
                         gain->shape_str() + " and " + bias->shape_str());
    }
    const std::size_t m = a->rows;
    std::vector<double> d(m * n);
    std::vector<double> xhat(m * n);
    std::vector<double> inv_std(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* x = &a->data[i * n];
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            mean += x[j];
        }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = x[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std[i] = inv;
        for (std::size_t j = 0; j < n; ++j) {
            const double xh = (x[j] - mean) * inv;
            xhat[i * n + j] = xh;
            d[i * n + j] = xh * gain->data[j] + bias->data[j];
        }
    }
    return make_result(
        m, n, std::move(d), {a, gain, bias},
        [a, gain, bias, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tensor& out) {
            if (gain->requires_grad || bias->requires_grad) {
                std::vector<double> dgain(n, 0.0);
                std::vector<double> dbias(n, 0.0);
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        dgain[j] += out.grad[i * n + j] * xhat[i * n + j];
                        dbias[j] += out.grad[i * n + j];
                    }
                }
                gain->accumulate_grad(dgain);
                bias->accumulate_grad(dbias);
            }
            if (a->requires_grad) {
                std::vector<double> g(m * n);
                for (std::size_t i = 0; i < m; ++i) {
                    double mean_dxh = 0.0;
                    double mean_dxh_xh = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = out.grad[i * n + j] * gain->data[j];
                        mean_dxh += dxh;
                        mean_dxh_xh += dxh * xhat[i * n + j];
                    }
                    mean_dxh /= static_cast<double>(n);
                    mean_dxh_xh /= static_cast<double>(n);
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = out.grad[i * n + j] * gain->data[j];
                        g[i * n + j] =
                            inv_std[i] * (dxh - mean_dxh - xhat[i * n + j] * mean_dxh_xh);
                    }
                }
                a->accumulate_grad(g);
            }
        });
}

TensorPtr gelu(const TensorPtr& a) {
    std::vector<double> d(a->size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = a->data[i];
        d[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    }
    return make_result(a->rows, a->cols, std::move(d), {a}, [a](Tensor& out) {
        std::vector<double> g(out.grad.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = a->data[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            g[i] = (cdf + x * pdf) * out.grad[i];
        }
        a->accumulate_grad(g);
    });
}

TensorPtr tanh_op(const TensorPtr& a) {
    std::vector<double> d(a->size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = std::tanh(a->data[i]);
    }
    return make_result(a->rows, a->cols, std::move(d), {a}, [a](Tensor& out) {
        std::vector<double> g(out.grad.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = (1.0 - out.data[i] * out.data[i]) * out.grad[i];
        }
        a->accumulate_grad(g);
    });
}

TensorPtr concat_rows(const TensorPtr& a, const TensorPtr& b) {
    if (a->cols != b->cols) {
        throw ShapeError("concat_rows: column counts disagree, " + a->shape_str() + " vs " +
                         b->shape_str());
    }
    std::vector<double> d;
    d.reserve(a->size() + b->size());
    d.insert(d.end(), a->data.begin(), a->data.end());
    d.insert(d.end(), b->data.begin(), b->data.end());
    const std::size_t arows = a->rows;
    return make_result(a->rows + b->rows, a->cols, std::move(d), {a, b}, [a, b, arows](Tensor& out) {
        if (a->requires_grad) {
            std::vector<double> g(out.grad.begin(), out.grad.begin() + arows * out.cols);
            a->accumulate_grad(g);
        }
        if (b->requires_grad) {
            std::vector<double> g(out.grad.begin() + arows * out.cols, out.grad.end());
            b->accumulate_grad(g);
        }
    });
}

TensorPtr slice_rows(const TensorPtr& a, std::size_t begin, std::size_t end) {
    if (begin > end || end > a->rows) {
        throw RangeError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") invalid for " + a->shape_str());
    }
    const std::size_t n = a->cols;
    std::vector<double> d(a->data.begin() + begin * n, a->data.begin() + end * n);
    return make_result(end - begin, n, std::move(d), {a}, [a, begin, n](Tensor& out) {
        std::vector<double> g(a->size(), 0.0);
        std::copy(out.grad.begin(), out.grad.end(), g.begin() + begin * n);
        a->accumulate_grad(g);
    });
}

TensorPtr gather_rows(const TensorPtr& table, const std::vector<std::size_t>& indices) {
    const std::size_t n = table->cols;
    for (std::size_t idx : indices) {
        if (idx >= table->rows) {
            throw RangeError("gather_rows: index " + std::to_string(idx) + " out of range for " +
                             table->shape_str());
        }
    }
    std::vector<double> d(indices.size() * n);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::copy(table->data.begin() + indices[i] * n, table->data.begin() + (indices[i] + 1) * n,
                  d.begin() + i * n);
    }
    return make_result(indices.size(), n, std::move(d), {table}, [table, indices, n](Tensor& out) {
        std::vector<double> g(table->size(), 0.0);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                g[indices[i] * n + j] += out.grad[i * n + j];
            }
        }
        table->accumulate_grad(g);
    });
}

TensorPtr sum_all(const TensorPtr& a) {
    double s = 0.0;
    for (double v : a->data) {
        s += v;
    }
    return make_result(1, 1, {s}, {a}, [a](Tensor& out) {
        std::vector<double> g(a->size(), out.grad[0]);
        a->accumulate_grad(g);
    });
}

TensorPtr cross_entropy_logits(const TensorPtr& logits, std::size_t target) {
    if (logits->rows != 1) {
        throw ShapeError("cross_entropy_logits: logits must be 1xC, got " + logits->shape_str());
    }
    const std::size_t c = logits->cols;
    if (target >= c) {
        throw RangeError("cross_entropy_logits: target " + std::to_string(target) +
                         " out of range for " + std::to_string(c) + " classes");
    }
    double mx = logits->data[0];
    for (std::size_t j = 1; j < c; ++j) {
        mx = std::max(mx, logits->data[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
        sum += std::exp(logits->data[j] - mx);
    }
    const double lse = mx + std::log(sum);
    const double loss = lse - logits->data[target];
    return make_result(1, 1, {loss}, {logits}, [logits, target, mx, sum, c](Tensor& out) {
        std::vector<double> g(c);
        for (std::size_t j = 0; j < c; ++j) {
            const double p = std::exp(logits->data[j] - mx) / sum;
            g[j] = (p - (j == target ? 1.0 : 0.0)) * out.grad[0];
        }
        logits->accumulate_grad(g);
    });
}

TensorPtr bce_with_logits(const TensorPtr& logits, const std::vector<double>& targets) {
    if (logits->rows != 1) {
        throw ShapeError("bce_with_logits: logits must be 1xC, got " + logits->shape_str());
    }
    const std::size_t c = logits->cols;
    if (targets.size() != c) {
        throw ArgumentError("bce_with_logits: " + std::to_string(targets.size()) +
                            " targets for " + std::to_string(c) + " logits");
    }
    double loss = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
        const double z = logits->data[j];
        // max(z,0) - y*z + log(1 + exp(-|z|))
        loss += std::max(z, 0.0) - targets[j] * z + std::log1p(std::exp(-std::abs(z)));
    }
    loss /= static_cast<double>(c);
    return make_result(1, 1, {loss}, {logits}, [logits, targets, c](Tensor& out) {
        std::vector<double> g(c);
        for (std::size_t j = 0; j < c; ++j) {
            const double z = logits->data[j];
            const double sig = 1.0 / (1.0 + std::exp(-z));
            g[j] = (sig - targets[j]) / static_cast<double>(c) * out.grad[0];
        }
        logits->accumulate_grad(g);
    });
}

double grad_check(const std::function<TensorPtr()>& f, const std::vector<TensorPtr>& params,
                  double h) {
    if (h <= 0.0) {
        throw ArgumentError("grad_check: h must be positive");
    }
    auto eval = [&f]() {
        auto out = f();
        const double v = out->item();
        if (!std::isfinite(v)) {
            throw NumericError("grad_check: f produced a non-finite value");
        }
        return v;
    };

    for (const auto& p : params) {
        p->zero_grad();
    }
    auto out = f();
    if (!std::isfinite(out->item())) {
        throw NumericError("grad_check: f produced a non-finite value");
    }
    out->backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) {
        analytic.push_back(p->has_grad() ? p->grad : std::vector<double>(p->size(), 0.0));
    }

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double orig = p.data[i];
            p.data[i] = orig + h;
            const double fp = eval();
            p.data[i] = orig - h;
            const double fm = eval();
            p.data[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[pi][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
        }
    }
    return max_rel;
}

} // namespace pw
