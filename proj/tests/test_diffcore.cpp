#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "xdef/diffcore.hpp"
#include "xdef/rng.hpp"

using xdef::Rng;
using xdef::diff::Tape;
using xdef::diff::Value;

namespace {

// gradient of a scalar-producing expression w.r.t. a single vector input,
// compared against central finite differences
double grad_vs_findiff(const std::function<Tape::Var(Tape&, Tape::Var)>& build,
                       const std::vector<double>& x0, double h = 1e-5) {
    Tape t;
    Tape::Var x = t.input(Value::vec(x0));
    Tape::Var root = build(t, x);
    std::vector<Value> g = t.gradient(root, {x});

    auto f = [&](const std::vector<double>& x) {
        Tape t2;
        Tape::Var xv = t2.input(Value::vec(x));
        return t2.scalar_value(build(t2, xv));
    };
    return testutil::max_rel_err(g[0].data, testutil::fin_diff(f, x0, h));
}

}  // namespace

TEST_CASE("elementwise primitives evaluate by definition") {
    Tape t;
    Tape::Var a = t.input(Value::vec({1, 2}));
    Tape::Var b = t.input(Value::vec({3, 4}));
    CHECK(t.value(t.add(a, b)).data == std::vector<double>{4, 6});
    CHECK(t.value(t.sub(b, a)).data == std::vector<double>{2, 2});
    CHECK(t.value(t.mul(a, b)).data == std::vector<double>{3, 8});
    CHECK(t.scalar_value(t.sigmoid(t.input(Value::scalar(0)))) == 0.5);
}

TEST_CASE("matmul with the identity is the identity") {
    Tape t;
    Tape::Var eye = t.input(Value({2, 2}, {1, 0, 0, 1}));
    Tape::Var x = t.input(Value::vec({-1.5, 7.25}));
    CHECK(t.value(t.matmul(eye, x)).data == std::vector<double>{-1.5, 7.25});
}

TEST_CASE("shape mismatch is rejected with the primitive named") {
    Tape t;
    Tape::Var a = t.input(Value::vec({1, 2}));
    Tape::Var b = t.input(Value::vec({1, 2, 3}));
    CHECK_THROWS_WITH_AS(t.add(a, b), doctest::Contains("add"), std::invalid_argument);
    CHECK_THROWS_AS(t.matmul(a, b), std::invalid_argument);
}

TEST_CASE("basic analytic gradients") {
    Tape t;
    Tape::Var x = t.input(Value::scalar(3));
    Tape::Var y = t.mul(x, x);
    std::vector<Value> g = t.gradient(y, {x});
    CHECK(g[0].data[0] == doctest::Approx(6).epsilon(1e-15));

    // constants do not receive gradient
    Tape t2;
    Tape::Var c = t2.input(Value::scalar(5));
    Tape::Var z = t2.input(Value::scalar(2));
    std::vector<Value> g2 = t2.gradient(t2.mul(z, z), {c});
    CHECK(g2[0].data[0] == 0.0);
}

TEST_CASE("non-scalar gradient root is rejected") {
    Tape t;
    Tape::Var x = t.input(Value::vec({1, 2}));
    CHECK_THROWS_AS(t.gradient(x, {x}), std::invalid_argument);
}

TEST_CASE("finite differences agree on every primitive (rel err <= 1e-6)") {
    const std::vector<double> x0 = {0.3, -0.7, 1.2, 0.05};
    const double tol = 1e-6;

    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.sum(t.add(x, x)); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.sum(t.sub(x, t.mul(x, x))); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.sum(t.mul(x, x)); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.mean(x); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.sum(t.sigmoid(x)); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.sum(t.tanh_(x)); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.sum(t.relu(x)); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) {
        return t.sum(t.index_select(t.softmax(x), {0, 2}));
    }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) {
        return t.sum(t.log_(t.add(t.mul(x, x), t.constant(Value::vec({1, 1, 1, 1})))));
    }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.sum(t.exp_(x)); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.sum(t.abs_(x)); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.l1_norm(x); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.l2_norm_sq(x); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) {
        return t.dot(x, t.constant(Value::vec({0.5, -1, 2, 0.1})));
    }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) {
        return t.sum(t.concat({x, t.mul(x, x)}));
    }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) {
        return t.sum(t.scale(x, t.mean(x)));
    }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) { return t.sum(t.cmul(x, -2.5)); }, x0) <= tol);
    CHECK(grad_vs_findiff([](Tape& t, Tape::Var x) {
        Tape::Var w = t.constant(Value({2, 4}, {0.1, -0.2, 0.3, 0.4, 0.5, 0.6, -0.7, 0.8}));
        return t.sum(t.matmul(w, x));
    }, x0) <= tol);
}

TEST_CASE("abs uses subgradient 0 at 0") {
    Tape t;
    Tape::Var x = t.input(Value::vec({0.0, -2.0, 3.0}));
    std::vector<Value> g = t.gradient(t.sum(t.abs_(x)), {x});
    CHECK(g[0].data == std::vector<double>{0, -1, 1});
}

TEST_CASE("random 5-layer composition matches finite differences") {
    Rng rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> x0(6);
        for (double& v : x0) v = rng.uniform(-1.0, 1.0);
        std::vector<double> w1(36), w2(36);
        for (double& v : w1) v = rng.uniform(-0.5, 0.5);
        for (double& v : w2) v = rng.uniform(-0.5, 0.5);

        auto build = [&](Tape& t, Tape::Var x) {
            Tape::Var m1 = t.constant(Value({6, 6}, w1));
            Tape::Var m2 = t.constant(Value({6, 6}, w2));
            Tape::Var h1 = t.tanh_(t.matmul(m1, x));
            Tape::Var h2 = t.sigmoid(t.matmul(m2, h1));
            Tape::Var h3 = t.softmax(t.add(h2, x));
            Tape::Var h4 = t.mul(h3, t.exp_(t.cmul(h1, 0.3)));
            return t.l2_norm_sq(h4);
        };
        CHECK(grad_vs_findiff(build, x0) <= 1e-6);
    }
}

TEST_CASE("gradient is linear in the root") {
    Rng rng(7);
    std::vector<double> x0(5);
    for (double& v : x0) v = rng.uniform(-1.0, 1.0);
    const double a = 2.5, b = -1.25;

    auto run = [&](const std::function<Tape::Var(Tape&, Tape::Var)>& build) {
        Tape t;
        Tape::Var x = t.input(Value::vec(x0));
        return t.gradient(build(t, x), {x})[0].data;
    };
    auto f = [](Tape& t, Tape::Var x) { return t.sum(t.tanh_(x)); };
    auto g = [](Tape& t, Tape::Var x) { return t.l2_norm_sq(x); };

    std::vector<double> gf = run(f), gg = run(g);
    std::vector<double> combo = run([&](Tape& t, Tape::Var x) {
        return t.add(t.cmul(f(t, x), a), t.cmul(g(t, x), b));
    });
    for (std::size_t i = 0; i < combo.size(); ++i)
        CHECK(combo[i] == doctest::Approx(a * gf[i] + b * gg[i]).epsilon(1e-12));
}

TEST_CASE("identical expressions are bit-identical across tapes") {
    auto run = [] {
        Tape t;
        Tape::Var x = t.input(Value::vec({0.11, -0.22, 0.33}));
        Tape::Var y = t.l2_norm_sq(t.softmax(t.tanh_(t.cmul(x, 1.7))));
        std::vector<Value> g = t.gradient(y, {x});
        std::vector<double> out = g[0].data;
        out.push_back(t.scalar_value(y));
        return out;
    };
    CHECK(run() == run());  // exact bitwise equality
}

TEST_CASE("unused inputs get zero gradients of their own shape") {
    Tape t;
    Tape::Var used = t.input(Value::scalar(2));
    Tape::Var unused = t.input(Value::vec({1, 2, 3}));
    std::vector<Value> g = t.gradient(t.mul(used, used), {used, unused});
    CHECK(g[1].shape == std::vector<int>{3});
    CHECK(g[1].data == std::vector<double>{0, 0, 0});
}
