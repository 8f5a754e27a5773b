#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "promptwise/tensor.hpp"

using namespace pw;

namespace {

// Independent triple-loop product for small matrices.
std::vector<double> matmul_oracle(const std::vector<double>& a, std::size_t m, std::size_t n,
                                  const std::vector<double>& b, std::size_t p) {
    std::vector<double> out(m * p, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                out[i * p + j] += a[i * n + k] * b[k * p + j];
            }
        }
    }
    return out;
}

} // namespace

TEST(Matmul, IdentityLeavesInputUnchanged) {
    auto eye = make_tensor(2, 2, {1, 0, 0, 1});
    auto a = make_tensor(2, 2, {1, 2, 3, 4});
    auto out = matmul(eye, a);
    EXPECT_EQ(out->data, (std::vector<double>{1, 2, 3, 4}));
}

TEST(Matmul, ZeroAnnihilates) {
    auto a = make_tensor(2, 2, {1, 2, 3, 4});
    auto zero = make_tensor(2, 2, {0, 0, 0, 0});
    auto out = matmul(a, zero);
    EXPECT_EQ(out->data, (std::vector<double>{0, 0, 0, 0}));
}

TEST(Matmul, MatchesTripleLoopOracle) {
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{5, 6, 7, 8};
    auto out = matmul(make_tensor(2, 2, a), make_tensor(2, 2, b));
    EXPECT_EQ(out->data, matmul_oracle(a, 2, 2, b, 2));
    EXPECT_EQ(out->data, (std::vector<double>{19, 22, 43, 50}));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng() % 5;
        const std::size_t n = 1 + rng() % 5;
        const std::size_t p = 1 + rng() % 5;
        std::vector<double> av(m * n), bv(n * p);
        for (auto& v : av) v = dist(rng);
        for (auto& v : bv) v = dist(rng);
        auto got = matmul(make_tensor(m, n, av), make_tensor(n, p, bv));
        const auto want = matmul_oracle(av, m, n, bv, p);
        for (std::size_t i = 0; i < want.size(); ++i) {
            EXPECT_NEAR(got->data[i], want[i], 1e-12);
        }
    }
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
    auto a = make_tensor(2, 3);
    auto b = make_tensor(2, 2);
    try {
        matmul(a, b);
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("2x3"), std::string::npos);
        EXPECT_NE(msg.find("2x2"), std::string::npos);
    }
}

TEST(SoftmaxRows, SymmetryAndStability) {
    auto sym = softmax_rows(make_tensor(1, 2, {0, 0}));
    EXPECT_DOUBLE_EQ(sym->data[0], 0.5);
    EXPECT_DOUBLE_EQ(sym->data[1], 0.5);

    auto big = softmax_rows(make_tensor(1, 2, {1000, 0}));
    EXPECT_TRUE(std::isfinite(big->data[0]));
    EXPECT_NEAR(big->data[0], 1.0, 1e-12);
    EXPECT_NEAR(big->data[1], 0.0, 1e-12);
}

TEST(SoftmaxRows, MatchesScalarOracle) {
    auto out = softmax_rows(make_tensor(1, 3, {1, 2, 3}));
    // exp(k) / (e + e^2 + e^3), computed independently
    const double denom = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    EXPECT_NEAR(out->data[0], std::exp(1.0) / denom, 1e-12);
    EXPECT_NEAR(out->data[1], std::exp(2.0) / denom, 1e-12);
    EXPECT_NEAR(out->data[2], std::exp(3.0) / denom, 1e-12);
    EXPECT_NEAR(out->data[0], 0.09003, 1e-5);
    EXPECT_NEAR(out->data[1], 0.24473, 1e-5);
    EXPECT_NEAR(out->data[2], 0.66524, 1e-5);
}

TEST(SoftmaxRows, RowsSumToOneAndShiftInvariant) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> dist(0.0, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t rows = 1 + rng() % 4;
        const std::size_t cols = 2 + rng() % 8;
        std::vector<double> v(rows * cols);
        for (auto& x : v) x = dist(rng);
        auto base = softmax_rows(make_tensor(rows, cols, v));
        for (std::size_t i = 0; i < rows; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < cols; ++j) sum += base->at(i, j);
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
        std::vector<double> shifted = v;
        const double c = dist(rng);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) shifted[i * cols + j] += c;
        }
        auto moved = softmax_rows(make_tensor(rows, cols, shifted));
        for (std::size_t i = 0; i < base->size(); ++i) {
            EXPECT_NEAR(base->data[i], moved->data[i], 1e-12);
        }
    }
}

TEST(LayerNorm, ConstantRowMapsToBias) {
    auto gain = full(1, 4, 1.0);
    auto bias = full(1, 4, 0.0);
    auto out = layer_norm(make_tensor(1, 4, {5, 5, 5, 5}), gain, bias);
    for (double v : out->data) {
        EXPECT_NEAR(v, 0.0, 1e-12);
    }
}

TEST(LayerNorm, SymmetricPairAlreadyNormalized) {
    auto out = layer_norm(make_tensor(1, 2, {1, -1}), full(1, 2, 1.0), full(1, 2, 0.0));
    EXPECT_NEAR(out->data[0], 1.0, 1e-7);
    EXPECT_NEAR(out->data[1], -1.0, 1e-7);
}

TEST(LayerNorm, MatchesDirectFormulaOracle) {
    auto out = layer_norm(make_tensor(1, 3, {1, 2, 3}), full(1, 3, 2.0), full(1, 3, 1.0));
    // direct per-entry formula with the module's epsilon
    const double mean = 2.0;
    const double var = 2.0 / 3.0;
    for (std::size_t j = 0; j < 3; ++j) {
        const double want =
            2.0 * ((static_cast<double>(j) + 1.0 - mean) / std::sqrt(var + kLayerNormEps)) + 1.0;
        EXPECT_NEAR(out->data[j], want, 1e-6);
    }
}

TEST(LayerNorm, NormalizedRowsHaveZeroMeanUnitVariance) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(1.5, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t cols = 4 + rng() % 12;
        std::vector<double> v(2 * cols);
        for (auto& x : v) x = dist(rng);
        auto out = layer_norm(make_tensor(2, cols, v), full(1, cols, 1.0), full(1, cols, 0.0));
        for (std::size_t i = 0; i < 2; ++i) {
            double mean = 0.0;
            for (std::size_t j = 0; j < cols; ++j) mean += out->at(i, j);
            mean /= static_cast<double>(cols);
            double var = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                var += (out->at(i, j) - mean) * (out->at(i, j) - mean);
            }
            var /= static_cast<double>(cols);
            EXPECT_NEAR(mean, 0.0, 1e-6);
            EXPECT_NEAR(var, 1.0, 1e-6);
        }
    }
}

TEST(LayerNorm, GainShapeMismatch) {
    EXPECT_THROW(layer_norm(make_tensor(2, 4), full(1, 3, 1.0), full(1, 4, 0.0)), ShapeError);
}

TEST(GradCheck, SumHasConstantGradient) {
    auto x = make_tensor(2, 3, {1, -2, 3, 0.5, 4, -1}, true);
    const double err = grad_check([&]() { return sum_all(x); }, {x}, 1e-4);
    EXPECT_LT(err, 1e-9);
}

TEST(GradCheck, SumOfSquares) {
    auto x = make_tensor(1, 2, {1, 2}, true);
    // f(x) = x . x, a 1x1 result
    auto f = [&]() { return matmul(x, transpose(x)); };
    x->zero_grad();
    auto out = f();
    out->backward();
    EXPECT_NEAR(x->grad[0], 2.0, 1e-12);
    EXPECT_NEAR(x->grad[1], 4.0, 1e-12);
    const double err = grad_check(f, {x}, 1e-4);
    EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, RejectsBadStepAndNonFinite) {
    auto x = make_tensor(1, 1, {1.0}, true);
    EXPECT_THROW(grad_check([&]() { return sum_all(x); }, {x}, 0.0), ArgumentError);
    EXPECT_THROW(grad_check([&]() { return full(1, 1, std::nan(""), true); }, {x}, 1e-4),
                 NumericError);
}

TEST(Backward, RequiresScalarOutput) {
    auto x = make_tensor(2, 2, {1, 2, 3, 4}, true);
    EXPECT_THROW(x->backward(), ArgumentError);
}

TEST(Backward, GradientAccumulatesAcrossUses) {
    auto x = make_tensor(1, 2, {1, 2}, true);
    x->zero_grad();
    auto out = sum_all(add(x, x));
    out->backward();
    EXPECT_DOUBLE_EQ(x->grad[0], 2.0);
    EXPECT_DOUBLE_EQ(x->grad[1], 2.0);
}

TEST(Backward, FrozenTensorNeverAccumulates) {
    auto x = make_tensor(1, 2, {1, 2}, true);
    auto w = make_tensor(2, 2, {1, 0, 0, 1}, false);
    x->zero_grad();
    auto out = sum_all(matmul(x, w));
    out->backward();
    EXPECT_FALSE(w->has_grad());
    EXPECT_TRUE(x->has_grad());
}

// Every differentiable op, checked against central finite differences on
// random small tensors across seeds.
TEST(GradCheck, AllOpsFiniteDifference) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t rows = 2 + rng() % 3;
        const std::size_t cols = 3 + rng() % 6;  // <= 16 everywhere
        auto a = gaussian(rows, cols, 0.0, 1.0, rng, true);
        auto b = gaussian(rows, cols, 0.0, 1.0, rng, true);
        auto w = gaussian(cols, cols, 0.0, 1.0, rng, true);
        auto gain = gaussian(1, cols, 1.0, 0.2, rng, true);
        auto bias = gaussian(1, cols, 0.0, 0.2, rng, true);

        auto f = [&]() {
            auto h = concat_rows(a, b);
            h = layer_norm(h, gain, bias);
            h = matmul(h, w);
            h = add_row(gelu(h), bias);
            auto attn = softmax_rows(scale(matmul(h, transpose(h)), 0.3));
            h = matmul(attn, h);
            h = tanh_op(slice_rows(h, 0, rows));
            h = gather_rows(h, {0, rows - 1, 0});
            return sum_all(h);
        };
        const double err = grad_check(f, {a, b, w, gain, bias}, 1e-5);
        EXPECT_LT(err, 1e-4) << "seed " << seed;
    }
}

TEST(GradCheck, LossesFiniteDifference) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        auto z = gaussian(1, 4, 0.0, 2.0, rng, true);
        const std::size_t target = rng() % 4;
        const double ce_err =
            grad_check([&]() { return cross_entropy_logits(z, target); }, {z}, 1e-5);
        EXPECT_LT(ce_err, 1e-4) << "seed " << seed;

        std::vector<double> targets{1, 0, 0, 1};
        const double bce_err =
            grad_check([&]() { return bce_with_logits(z, targets); }, {z}, 1e-5);
        EXPECT_LT(bce_err, 1e-4) << "seed " << seed;
    }
}

TEST(GatherRows, OutOfRangeIndex) {
    auto t = make_tensor(3, 2);
    EXPECT_THROW(gather_rows(t, {3}), RangeError);
}

TEST(SliceRows, InvalidRange) {
    auto t = make_tensor(3, 2);
    EXPECT_THROW(slice_rows(t, 2, 1), RangeError);
    EXPECT_THROW(slice_rows(t, 0, 4), RangeError);
}
