#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "posef/core/adam.hpp"
#include "posef/core/autodiff.hpp"
#include "posef/core/checkpoint.hpp"
#include "posef/core/gradcheck.hpp"
#include "posef/core/rng.hpp"

using namespace posef;
using namespace posef::ad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v));
}

// Keeps values away from kinks (relu/abs/clamp at 0) so central differences are valid.
Tensor away_from_zero(Shape shape, Rng& rng) {
    Tensor t = random_tensor(std::move(shape), rng, 0.1, 1.0);
    for (double& x : t.values())
        if (rng.uniform() < 0.5) x = -x;
    return t;
}

}  // namespace

TEST(Tensor, RejectsNonFiniteAndMismatchedShape) {
    EXPECT_THROW(Tensor({2}, {1.0, NAN}), std::invalid_argument);
    EXPECT_THROW(Tensor({2}, {1.0, INFINITY}), std::invalid_argument);
    EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
    EXPECT_THROW(Tensor::zeros({0, 3}), std::invalid_argument);
}

TEST(Primitives, TanhAtOriginIsZero) {
    Tape t;
    Var x = t.constant(Tensor::scalar(0.0));
    EXPECT_EQ(ad::tanh(x).value()[0], 0.0);
}

TEST(Primitives, IdentityMatmulReturnsOperand) {
    Tape t;
    Rng rng(3);
    Tensor a = random_tensor({2, 5}, rng);
    Var eye = t.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
    EXPECT_EQ(matmul(eye, t.constant(a)).value(), a);
}

TEST(Primitives, SigmoidHandValue) {
    Tape t;
    // 1 / (1 + e^-0.5) = 0.622459331...
    EXPECT_NEAR(ad::sigmoid(t.constant(Tensor::scalar(0.5))).value()[0], 0.62246, 5e-6);
}

TEST(Primitives, ShapeMismatchNamesPrimitiveAndShapes) {
    Tape t;
    Var a = t.constant(Tensor::zeros({2, 3}));
    Var b = t.constant(Tensor::zeros({2, 3}));
    try {
        matmul(a, b);
        FAIL() << "expected throw";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("matmul"), std::string::npos);
        EXPECT_NE(msg.find("[2x3]"), std::string::npos);
    }
    EXPECT_THROW(add(a, t.constant(Tensor::zeros({3, 2}))), std::invalid_argument);
    EXPECT_THROW(ad::log(t.constant(Tensor::scalar(0.0))), std::invalid_argument);
}

TEST(Backward, AnalyticScalarDerivatives) {
    {
        Tape t;
        Var x = t.variable(Tensor::scalar(3.0));
        Var y = sum(square(x));
        EXPECT_DOUBLE_EQ(t.backward(y).wrt(x)[0], 6.0);
    }
    {
        Tape t;
        Var x = t.variable(Tensor::scalar(0.0));
        Var y = sum(ad::tanh(x));
        EXPECT_DOUBLE_EQ(t.backward(y).wrt(x)[0], 1.0);
    }
}

TEST(Backward, NonScalarOutputFails) {
    Tape t;
    Var x = t.variable(Tensor::zeros({2, 2}));
    EXPECT_THROW(t.backward(square(x)), std::invalid_argument);
}

TEST(Backward, UnreachableParameterGetsZero) {
    ParameterSet ps;
    ps.add("used", Tensor::filled({1, 2}, 2.0));
    ps.add("unused", Tensor::filled({3, 1}, 5.0));
    Tape t;
    Var y = sum(square(t.param(ps, "used")));
    auto g = t.backward(y).params(ps);
    EXPECT_EQ(g[0], Tensor::filled({1, 2}, 4.0));
    EXPECT_EQ(g[1], Tensor::zeros({3, 1}));
}

TEST(Backward, MatmulSumMatchesFiniteDifferences) {
    Rng rng(11);
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({4, 2}, rng);
    double err = gradient_check([&](Tape& t, Var x) { return sum(matmul(x, t.constant(b))); }, a, 1e-4);
    EXPECT_LT(err, 1e-4);
}

// Every primitive against central differences at 100 random points.
TEST(Backward, EveryPrimitivePassesGradientCheck) {
    using Fn = std::function<Var(Tape&, Var)>;
    Rng rng(2024);
    auto idx = std::make_shared<const std::vector<std::int64_t>>(std::vector<std::int64_t>{5, -1, 0, 0, 3, 2});
    const Tensor w = random_tensor({3, 3}, rng);
    const Tensor other = random_tensor({2, 3}, rng);
    const Tensor left = random_tensor({4, 2}, rng);
    struct Case {
        const char* name;
        Fn f;
        bool positive;
    };
    std::vector<Case> cases = {
        {"matmul", [&](Tape& t, Var x) { return sum(matmul(x, t.constant(w))); }, false},
        {"matmul-rhs", [&](Tape& t, Var x) { return sum(square(matmul(t.constant(left), matmul(x, t.constant(w))))); }, false},
        {"add", [&](Tape& t, Var x) { return sum(square(x + t.constant(other))); }, false},
        {"add-row", [&](Tape& t, Var x) { return sum(square(t.constant(other) + slice(x, 0, 0, 1))); }, false},
        {"sub", [&](Tape& t, Var x) { return sum(square(t.constant(other) - x)); }, false},
        {"mul", [&](Tape& t, Var x) { return sum(x * x * t.constant(other)); }, false},
        {"mul-row", [&](Tape& t, Var x) { return sum(square(t.constant(other) * slice(x, 0, 1, 2))); }, false},
        {"scale", [&](Tape&, Var x) { return sum(square(scale(x, -2.5))); }, false},
        {"concat0", [&](Tape& t, Var x) { return sum(square(concat({x, t.constant(other), x}, 0))); }, false},
        {"concat1", [&](Tape& t, Var x) { return sum(ad::tanh(concat({t.constant(other), x}, 1))); }, false},
        {"slice", [&](Tape&, Var x) { return sum(square(slice(x, 1, 1, 3))); }, false},
        {"tanh", [&](Tape&, Var x) { return sum(ad::tanh(x) * x); }, false},
        {"sigmoid", [&](Tape&, Var x) { return sum(ad::sigmoid(x) * x); }, false},
        {"relu", [&](Tape&, Var x) { return sum(relu(x) * x); }, false},
        {"leaky-relu", [&](Tape&, Var x) { return sum(leaky_relu(x) * x); }, false},
        {"exp", [&](Tape&, Var x) { return sum(ad::exp(x)); }, false},
        {"log", [&](Tape&, Var x) { return sum(ad::log(x)); }, true},
        {"square", [&](Tape&, Var x) { return sum(square(x)); }, false},
        {"reduce-sum", [&](Tape&, Var x) { return square(sum(x)); }, false},
        {"reduce-mean", [&](Tape&, Var x) { return square(mean(x)); }, false},
        {"l1-abs", [&](Tape&, Var x) { return sum(ad::abs(x) * x); }, false},
        {"clamp", [&](Tape&, Var x) { return sum(square(clamp(x, -0.5, 0.5))); }, false},
        {"reshape", [&](Tape& t, Var x) { return sum(matmul(reshape(x, {3, 2}), t.constant(other))); }, false},
        {"gather", [&](Tape&, Var x) { return sum(square(gather(x, idx, {2, 3}))); }, false},
        {"scatter-add", [&](Tape&, Var x) { return sum(square(scatter_add(x, idx, {6}))); }, false},
    };
    for (const auto& c : cases) {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            Tensor p = c.positive ? random_tensor({2, 3}, rng, 0.2, 2.0) : away_from_zero({2, 3}, rng);
            if (std::string(c.name) == "clamp")
                for (double& v : p.values())
                    if (std::fabs(std::fabs(v) - 0.5) < 0.05) v *= 1.3;
            worst = std::max(worst, gradient_check(c.f, p, 1e-4));
        }
        EXPECT_LT(worst, 1e-4) << c.name;
    }
}

TEST(Backward, IsLinearInTheOutput) {
    Rng rng(5);
    Tensor p = random_tensor({2, 3}, rng);
    auto f = [](Var x) { return sum(ad::tanh(x) * x); };
    auto g = [](Var x) { return sum(ad::exp(x)); };
    const double a = 0.7, b = -1.3;
    Tape t1, t2, t3;
    Var x1 = t1.variable(p), x2 = t2.variable(p), x3 = t3.variable(p);
    Tensor gf = t1.backward(f(x1)).wrt(x1);
    Tensor gg = t2.backward(g(x2)).wrt(x2);
    Tensor gc = t3.backward(scale(f(x3), a) + scale(g(x3), b)).wrt(x3);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(gc[i], a * gf[i] + b * gg[i], 1e-12);
}

TEST(Backward, ReplayIsBitwiseIdentical) {
    Rng rng(8);
    Tensor a = random_tensor({4, 4}, rng);
    Tape t;
    Var x = t.variable(a);
    Var y = sum(ad::sigmoid(matmul(x, x)) * x);
    Tensor g1 = t.backward(y).wrt(x);
    Tensor g2 = t.backward(y).wrt(x);
    EXPECT_EQ(g1, g2);
}

TEST(GradientCheck, SquareAtThree) {
    double err = gradient_check([](Tape&, Var x) { return sum(x * x); }, Tensor::scalar(3.0), 1e-4);
    EXPECT_LT(err, 1e-6);
    EXPECT_THROW(gradient_check([](Tape&, Var x) { return sum(x); }, Tensor::scalar(1.0), 0.0), std::invalid_argument);
}

TEST(Adam, ZeroGradientIsIdentity) {
    Rng rng(1);
    Tensor p = random_tensor({3, 2}, rng);
    const Tensor orig = p;
    AdamState s = AdamState::like(p);
    for (int i = 0; i < 25; ++i) adam_step(p, Tensor::zeros({3, 2}), s);
    EXPECT_EQ(p, orig);
    EXPECT_EQ(s.step_count, 25);
}

TEST(Adam, FirstStepHandValue) {
    Tensor p = Tensor::scalar(0.0);
    AdamState s = AdamState::like(p, 0.001, 0.9, 0.999, 1e-8);
    adam_step(p, Tensor::scalar(1.0), s);
    // m_hat = v_hat = 1, so the step is lr / (1 + eps).
    EXPECT_NEAR(p[0], -0.001, 1e-10);
    EXPECT_DOUBLE_EQ(p[0], -0.001 / (1.0 + 1e-8));
    EXPECT_EQ(s.step_count, 1);
}

TEST(Adam, DeterministicAcrossRuns) {
    auto run = [] {
        Tensor p = Tensor::scalar(0.0);
        AdamState s = AdamState::like(p);
        adam_step(p, Tensor::scalar(1.0), s);
        adam_step(p, Tensor::scalar(1.0), s);
        return p[0];
    };
    EXPECT_EQ(run(), run());
}

TEST(Adam, RejectsShapeMismatchAndBadHyperparameters) {
    Tensor p = Tensor::zeros({2});
    AdamState s = AdamState::like(p);
    EXPECT_THROW(adam_step(p, Tensor::zeros({3}), s), std::invalid_argument);
    EXPECT_THROW(AdamState::like(p, -1.0), std::invalid_argument);
    EXPECT_THROW(AdamState::like(p, 0.001, 1.0), std::invalid_argument);
}

TEST(Adam, GlobalNormClipping) {
    ParameterSet ps;
    ps.add("w", Tensor::zeros({2}));
    Adam opt(ps, {.learning_rate = 0.1, .clip_norm = 5.0});
    std::vector<Tensor> g{Tensor({2}, {30.0, 40.0})};
    EXPECT_DOUBLE_EQ(global_norm(g), 50.0);
    opt.step(ps, g);
    // Clipping rescales uniformly, so the Adam direction is unchanged.
    EXPECT_NEAR(ps[0][0], -0.1, 1e-6);
    EXPECT_NEAR(ps[0][1], -0.1, 1e-6);
}

TEST(Checkpoint, RoundTripAndByteLayout) {
    ParameterSet ps;
    ps.add("a", Tensor::matrix(1, 2, {1.5, -2.0}));
    ps.add("bias", Tensor::scalar(0.25));
    std::stringstream ss;
    write_checkpoint(ss, ps);
    const std::string bytes = ss.str();
    EXPECT_EQ(bytes.substr(0, 5), "PFCK1");
    // name length 1 (LE), "a", rank 2, extents 1 and 2, two f64.
    EXPECT_EQ(bytes.size(), 5u + (4 + 1 + 4 + 8 + 16) + (4 + 4 + 4 + 4 + 8));
    EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 1u);
    EXPECT_EQ(bytes[9], 'a');
    ParameterSet back = read_checkpoint(ss);
    EXPECT_EQ(back, ps);

    std::stringstream bad("PFCK0");
    EXPECT_THROW(read_checkpoint(bad), std::runtime_error);
}
