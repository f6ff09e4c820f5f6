#include <catch2/catch_amalgamated.hpp>

#include "abmnn/core.hpp"
#include "abmnn/params.hpp"
#include "abmnn/tape.hpp"
#include "support.hpp"

using namespace abmnn;
using testutil::ad_grad;
using testutil::fd_grad;
using testutil::max_rel_err;

TEST_CASE("forward op examples") {
    Tape t;
    SECTION("matmul shape rule") {
        Var a = t.constant(Tensor(2, 3, {1, 2, 3, 4, 5, 6}));
        Var b = t.constant(Tensor(3, 1, {1, 0, -1}));
        Var c = matmul(a, b);
        REQUIRE(t.val(c).rows == 2);
        REQUIRE(t.val(c).cols == 1);
        REQUIRE(t.val(c).data[0] == Catch::Approx(-2.0));
        REQUIRE(t.val(c).data[1] == Catch::Approx(-2.0));
    }
    SECTION("matmul shape mismatch throws") {
        Var a = t.constant(Tensor(2, 3));
        Var b = t.constant(Tensor(2, 1));
        REQUIRE_THROWS_AS(matmul(a, b), ShapeError);
    }
    SECTION("relu definition") {
        Var x = t.constant(Tensor(2, 1, {-1.0, 2.0}));
        Var y = relu(x);
        REQUIRE(t.val(y).data[0] == 0.0);
        REQUIRE(t.val(y).data[1] == 2.0);
    }
    SECTION("tanh is odd") {
        Var x = t.constant(Tensor::scalar(0.0));
        REQUIRE(t.val(tanh(x)).data[0] == 0.0);
    }
    SECTION("non-finite output detected") {
        Var x = t.constant(Tensor::scalar(1e308));
        REQUIRE_THROWS_AS(exp(x), NumericError);
    }
}

TEST_CASE("backward examples") {
    SECTION("d/dx x^2 at 3 is 6") {
        Params P;
        int x = P.create(Tensor::scalar(3.0));
        Tensor g = ad_grad(P, x, [&](Tape& t, Params& p) { return sum(pow_const(p.var(x), 2.0)); });
        REQUIRE(g.data[0] == Catch::Approx(6.0));
    }
    SECTION("product rule") {
        Params P;
        int x = P.create(Tensor::scalar(2.0));
        int y = P.create(Tensor::scalar(5.0));
        auto f = [&](Tape& t, Params& p) { return sum(mul(p.var(x), p.var(y))); };
        REQUIRE(ad_grad(P, x, f).data[0] == Catch::Approx(5.0));
        REQUIRE(ad_grad(P, y, f).data[0] == Catch::Approx(2.0));
    }
    SECTION("non-scalar output rejected") {
        Tape t;
        Var x = t.leaf(Tensor(2, 1, {1, 2}), true);
        REQUIRE_THROWS_AS(t.backward(x), ShapeError);
    }
}

TEST_CASE("two-layer MLP gradients match finite differences") {
    // hand-rolled MLP from raw ops; oracle is central differences (h=1e-5)
    Rng rng(42);
    Params P;
    auto rand_tensor = [&](int r, int c) {
        Tensor t(r, c);
        for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
        return t;
    };
    int w1 = P.create(rand_tensor(3, 8));
    int b1 = P.create(rand_tensor(1, 8));
    int w2 = P.create(rand_tensor(8, 1));
    int b2 = P.create(rand_tensor(1, 1));
    Tensor input = rand_tensor(4, 3);

    auto f = [&](Tape& t, Params& p) {
        Var x = t.constant(input);
        Var h = tanh(add_rowvec(matmul(x, p.var(w1)), p.var(b1)));
        Var out = add_rowvec(matmul(h, p.var(w2)), p.var(b2));
        return sum(out);
    };
    for (int prm : {w1, b1, w2, b2}) {
        Tensor ga = ad_grad(P, prm, f);
        Tensor gf = fd_grad(P, prm, f);
        REQUIRE(max_rel_err(ga, gf) < 1e-5);
    }
}

TEST_CASE("every op kind matches finite differences (property)") {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        Params P;
        Tensor xv(4, 3), yv(4, 3);
        // random inputs in [-2,2]; kinked ops resample away from the kink
        for (auto& v : xv.data) {
            do {
                v = rng.uniform(-2.0, 2.0);
            } while (std::abs(v) < 1e-3);
        }
        for (auto& v : yv.data) v = rng.uniform(-2.0, 2.0);
        int x = P.create(xv);
        int y = P.create(yv);
        int beta = P.create(Tensor::scalar(rng.uniform(0.2, 0.8)));
        int rv = P.create(Tensor(1, 3, {0.2, -0.3, 0.7}));

        std::vector<std::pair<const char*, testutil::BuildFn>> cases = {
            {"add", [=](Tape& t, Params& p) { return sum(add(p.var(x), p.var(y))); }},
            {"sub", [=](Tape& t, Params& p) { return sum(sub(p.var(x), p.var(y))); }},
            {"mul", [=](Tape& t, Params& p) { return sum(mul(p.var(x), p.var(y))); }},
            {"matmul", [=](Tape& t, Params& p) {
                 Var w = t.constant(Tensor(3, 2, {0.3, -0.7, 1.1, 0.2, -0.4, 0.9}));
                 return sum(pow_const(matmul(p.var(x), w), 2.0));
             }},
            {"sum", [=](Tape& t, Params& p) { return sum(p.var(x)); }},
            {"mean", [=](Tape& t, Params& p) { return mean(pow_const(p.var(x), 2.0)); }},
            {"colsum", [=](Tape& t, Params& p) {
                 return sum(mul(colsum(p.var(x)), t.constant(Tensor(1, 3, {1.0, -2.0, 0.5}))));
             }},
            {"scalar_mul", [=](Tape& t, Params& p) { return sum(smul(p.var(x), -1.7)); }},
            {"scalar_add", [=](Tape& t, Params& p) { return sum(pow_const(sadd(p.var(x), 0.9), 2.0)); }},
            {"pow_const", [=](Tape& t, Params& p) { return sum(pow_const(p.var(x), 3.0)); }},
            {"pow_learn", [=](Tape& t, Params& p) {
                 // strictly positive base: |x| + 0.1
                 return sum(pow_learn(sadd(abs(p.var(x)), 0.1), p.var(beta)));
             }},
            {"exp", [=](Tape& t, Params& p) { return sum(exp(p.var(x))); }},
            {"tanh", [=](Tape& t, Params& p) { return sum(tanh(p.var(x))); }},
            {"relu", [=](Tape& t, Params& p) { return sum(relu(p.var(x))); }},
            {"leaky_relu", [=](Tape& t, Params& p) { return sum(leaky_relu(p.var(x))); }},
            {"clamp_min0", [=](Tape& t, Params& p) { return sum(clamp_min0(p.var(x))); }},
            {"abs", [=](Tape& t, Params& p) { return sum(abs(p.var(x))); }},
            {"concat_cols", [=](Tape& t, Params& p) {
                 return sum(pow_const(concat_cols(p.var(x), p.var(y)), 2.0));
             }},
            {"slice_cols", [=](Tape& t, Params& p) { return sum(pow_const(slice_cols(p.var(x), 1, 3), 2.0)); }},
            {"gather_rows", [=](Tape& t, Params& p) {
                 return sum(pow_const(gather_rows(p.var(x), {2, 0, 2, 1}), 2.0));
             }},
            {"scatter_rows", [=](Tape& t, Params& p) {
                 Var s = scatter_rows(p.var(x), {1, 0, 1, 4}, 5, {0.5, 2.0, 1.0, -1.5});
                 return sum(pow_const(s, 2.0));
             }},
            {"add_rowvec", [=](Tape& t, Params& p) {
                 return sum(pow_const(add_rowvec(p.var(x), p.var(rv)), 2.0));
             }},
        };
        for (auto& [name, f] : cases) {
            INFO("op " << name << " trial " << trial);
            for (int prm : {x, y, beta, rv}) {
                Tensor ga = ad_grad(P, prm, f);
                Tensor gf = fd_grad(P, prm, f);
                REQUIRE(max_rel_err(ga, gf) < 1e-5);
            }
        }
    }
}

TEST_CASE("clamp_min0 gradient at exactly 0 is 0") {
    Params P;
    int x = P.create(Tensor(3, 1, {-1.0, 0.0, 1.0}));
    Tensor g = ad_grad(P, x, [&](Tape& t, Params& p) { return sum(clamp_min0(p.var(x))); });
    REQUIRE(g.data[0] == 0.0);
    REQUIRE(g.data[1] == 0.0);  // subgradient choice at the kink
    REQUIRE(g.data[2] == 1.0);
}

TEST_CASE("tape replay is bit-identical") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        Tape t;
        Tensor xv(5, 4);
        for (auto& v : xv.data) v = rng.uniform(-2.0, 2.0);
        Var x = t.leaf(xv, true);
        Var w = t.constant(Tensor::full(4, 4, 0.25));
        Var h = tanh(matmul(x, w));
        Var out = sum(mul(h, h));
        auto grads = t.backward(out);
        std::vector<double> r = {t.val(out).data[0]};
        const Tensor& g = grads.at(x.id);
        r.insert(r.end(), g.data.begin(), g.data.end());
        return r;
    };
    auto a = run(99), b = run(99);
    REQUIRE(a == b);  // exact, not approximate
    auto c = run(100);
    REQUIRE(a != c);
}

TEST_CASE("gradients of constants are not materialized") {
    Tape t;
    Var c = t.constant(Tensor(2, 2, {1, 2, 3, 4}));
    Var x = t.leaf(Tensor(2, 2, {1, 1, 1, 1}), true);
    Var out = sum(mul(c, x));
    auto grads = t.backward(out);
    REQUIRE(grads.count(x.id) == 1);
    REQUIRE(grads.count(c.id) == 0);
}

TEST_CASE("pow_learn rejects non-positive base") {
    Tape t;
    Var x = t.constant(Tensor(2, 1, {1.0, -0.5}));
    Var b = t.constant(Tensor::scalar(0.3));
    REQUIRE_THROWS_AS(pow_learn(x, b), NumericError);
}
