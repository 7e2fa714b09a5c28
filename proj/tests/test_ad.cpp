#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "dilar/ad.hpp"

namespace ad = dilar::ad;
using ad::Tape;
using ad::Value;

namespace {

// Test expressions are written once, templated over the scalar, so the tape
// gradient can be checked against central differences of the double path.

template <class T>
T expr_poly(std::span<const T> x) {
    return x[0] * x[0] * x[1] + x[1] * x[2] - x[2] / x[0];
}

template <class T>
T expr_trig(std::span<const T> x) {
    using std::cos;
    using std::sin;
    using std::tanh;
    return sin(x[0] * x[1]) + cos(x[2]) * tanh(x[1] - x[2]);
}

template <class T>
T expr_nn_like(std::span<const T> x) {
    using std::tanh;
    using dilar::relu;
    using dilar::softplus;
    T h = tanh(T(0.3) * x[0] + T(-0.7) * x[1] + T(0.2));
    T k = softplus(T(1.1) * h + T(0.4) * x[2]);
    return k * k * x[2] + relu(x[0] - x[1]);
}

template <class T>
T expr_compound(std::span<const T> x) {
    T acc = T(0.0);
    for (int i = 0; i < 5; ++i) {
        T term = x[0];
        term *= x[1];
        term += x[2] / T(1.0 + i);
        term -= x[0] * T(0.1);
        acc += term * term;
    }
    return acc / T(5.0);
}

using DoubleFn = std::function<double(std::span<const double>)>;

double fd_partial(const DoubleFn& f, std::vector<double> x, std::size_t i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    return (f(xp) - f(xm)) / (2.0 * h);
}

template <class Fn>
void check_against_fd(Fn fn_t, const DoubleFn& fn_d,
                      const std::vector<double>& x0) {
    Tape::active().clear();
    std::vector<Value> leaves;
    for (double v : x0) leaves.push_back(Value::leaf(v));
    const Value loss = fn_t(std::span<const Value>(leaves));
    EXPECT_DOUBLE_EQ(loss.v, fn_d(x0));

    const auto g = ad::gradient(loss, leaves);
    for (std::size_t i = 0; i < x0.size(); ++i) {
        const double fd = fd_partial(fn_d, x0, i);
        const double scale = std::max({1.0, std::abs(fd), std::abs(g[i])});
        EXPECT_NEAR(g[i], fd, 2e-6 * scale)
            << "partial " << i << " at x0[" << i << "]=" << x0[i];
    }
}

}  // namespace

TEST(Ad, SquareGradient) {
    Tape::active().clear();
    Value p = Value::leaf(3.0);
    Value loss = p * p;
    const auto g = ad::gradient(loss, std::span<const Value>(&p, 1));
    EXPECT_DOUBLE_EQ(loss.v, 9.0);
    EXPECT_DOUBLE_EQ(g[0], 6.0);
}

TEST(Ad, SoftplusAtZero) {
    Tape::active().clear();
    Value x = Value::leaf(0.0);
    Value y = softplus(x);
    EXPECT_DOUBLE_EQ(y.v, std::log(2.0));
    const auto g = ad::gradient(y, std::span<const Value>(&x, 1));
    EXPECT_DOUBLE_EQ(g[0], 0.5);
}

TEST(Ad, SoftplusLargeArgsStayFinite) {
    EXPECT_TRUE(std::isfinite(dilar::softplus(800.0)));
    EXPECT_NEAR(dilar::softplus(800.0), 800.0, 1e-12);
    EXPECT_NEAR(dilar::softplus(-800.0), 0.0, 1e-12);
    Tape::active().clear();
    Value x = Value::leaf(800.0);
    Value y = softplus(x);
    const auto g = ad::gradient(y, std::span<const Value>(&x, 1));
    EXPECT_DOUBLE_EQ(g[0], 1.0);
}

TEST(Ad, MatchesFiniteDifferences) {
    check_against_fd([](std::span<const Value> v) { return expr_poly(v); },
                     [](std::span<const double> v) { return expr_poly(v); },
                     {1.3, -0.4, 2.1});
    check_against_fd([](std::span<const Value> v) { return expr_trig(v); },
                     [](std::span<const double> v) { return expr_trig(v); },
                     {0.7, 1.9, -0.6});
    check_against_fd([](std::span<const Value> v) { return expr_nn_like(v); },
                     [](std::span<const double> v) { return expr_nn_like(v); },
                     {0.9, 0.2, -1.4});
    check_against_fd([](std::span<const Value> v) { return expr_compound(v); },
                     [](std::span<const double> v) { return expr_compound(v); },
                     {-0.8, 0.55, 1.7});
}

TEST(Ad, ConstantsAreFolded) {
    Tape::active().clear();
    const std::size_t before = Tape::active().size();
    Value c = Value(2.0) + Value(3.0) * Value(4.0);
    EXPECT_DOUBLE_EQ(c.v, 14.0);
    EXPECT_LT(c.i, 0);
    EXPECT_EQ(Tape::active().size(), before);  // nothing recorded
}

TEST(Ad, MixedConstantLeafOps) {
    Tape::active().clear();
    Value x = Value::leaf(2.0);
    Value y = 3.0 * x + 1.0;      // implicit conversion on both sides
    Value z = y / 2.0 - x;
    const auto g = ad::gradient(z, std::span<const Value>(&x, 1));
    EXPECT_DOUBLE_EQ(z.v, 1.5);
    EXPECT_DOUBLE_EQ(g[0], 0.5);  // d/dx (3x+1)/2 - x
}

TEST(Ad, GradientOfConstantThrows) {
    Tape::active().clear();
    Value c(5.0);
    Value leaf = Value::leaf(1.0);
    EXPECT_THROW(ad::gradient(c, std::span<const Value>(&leaf, 1)),
                 dilar::unsupported_operation_error);
}

TEST(Ad, GradientWrtConstantThrows) {
    Tape::active().clear();
    Value x = Value::leaf(1.0);
    Value c(2.0);
    Value loss = x * x;
    EXPECT_THROW(ad::gradient(loss, std::span<const Value>(&c, 1)),
                 dilar::unsupported_operation_error);
}

TEST(Ad, TapeReuseAfterClear) {
    for (int round = 0; round < 3; ++round) {
        Tape::active().clear();
        Value p = Value::leaf(3.0);
        Value q = Value::leaf(-2.0);
        std::vector<Value> leaves{p, q};
        Value loss = sin(p * q) + p / q;
        const auto g = ad::gradient(loss, leaves);
        EXPECT_DOUBLE_EQ(loss.v, std::sin(-6.0) - 1.5);
        EXPECT_NEAR(g[0], std::cos(-6.0) * -2.0 + 1.0 / -2.0, 1e-12);
        EXPECT_NEAR(g[1], std::cos(-6.0) * 3.0 - 3.0 / 4.0, 1e-12);
    }
}

TEST(Ad, LongChainStress) {
    Tape::active().clear();
    Value x = Value::leaf(0.01);
    Value acc = x;
    for (int i = 0; i < 20000; ++i) acc = acc + x * 1e-4;
    // acc = x * (1 + 20000e-4) = 3x
    const auto g = ad::gradient(acc, std::span<const Value>(&x, 1));
    EXPECT_NEAR(acc.v, 0.03, 1e-12);
    EXPECT_NEAR(g[0], 3.0, 1e-10);
}

TEST(Ad, ReluSubgradientAtKink) {
    Tape::active().clear();
    Value x = Value::leaf(0.0);
    Value y = relu(x);
    const auto g = ad::gradient(y, std::span<const Value>(&x, 1));
    EXPECT_DOUBLE_EQ(y.v, 0.0);
    EXPECT_DOUBLE_EQ(g[0], 0.0);  // convention: relu'(0) = 0
}

TEST(Ad, WorkspaceReuseMatchesFreshGradient) {
    ad::GradWorkspace ws;
    std::vector<double> out(2);
    for (int round = 0; round < 2; ++round) {
        Tape::active().clear();
        Value a = Value::leaf(1.1);
        Value b = Value::leaf(-0.3);
        std::vector<Value> leaves{a, b};
        Value loss = tanh(a) * softplus(b) + a * b;
        ad::gradient(loss, leaves, out, ws);
        const auto fresh = ad::gradient(loss, leaves);
        EXPECT_DOUBLE_EQ(out[0], fresh[0]);
        EXPECT_DOUBLE_EQ(out[1], fresh[1]);
    }
}
