#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "abmnn/params.hpp"
#include "abmnn/tape.hpp"
#include "abmnn/tensor.hpp"

namespace testutil {

// Builds a scalar loss from bound parameters on the given tape.
using BuildFn = std::function<abmnn::Var(abmnn::Tape&, abmnn::Params&)>;

inline double eval_scalar(abmnn::Params& P, const BuildFn& f) {
    abmnn::Tape tape;
    P.bind(tape);
    abmnn::Var out = f(tape, P);
    return tape.val(out).data[0];
}

// Independent finite-difference oracle. Re-evaluates the forward function
// on a fresh tape for every probe, so it shares nothing with the reverse
// sweep it checks.
inline abmnn::Tensor fd_grad(abmnn::Params& P, int p, const BuildFn& f, double h = 1e-5) {
    abmnn::Tensor g(P.value(p).rows, P.value(p).cols);
    for (size_t k = 0; k < g.size(); ++k) {
        const double orig = P.value(p).data[k];
        P.value(p).data[k] = orig + h;
        const double fp = eval_scalar(P, f);
        P.value(p).data[k] = orig - h;
        const double fm = eval_scalar(P, f);
        P.value(p).data[k] = orig;
        g.data[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Reverse-mode gradient of f w.r.t. parameter p (fresh tape).
inline abmnn::Tensor ad_grad(abmnn::Params& P, int p, const BuildFn& f) {
    abmnn::Tape tape;
    P.bind(tape);
    abmnn::Var out = f(tape, P);
    auto grads = tape.backward(out);
    const abmnn::Tensor* g = P.grad_of(p, grads);
    if (g) return *g;
    return abmnn::Tensor(P.value(p).rows, P.value(p).cols);  // zeros
}

// max over components of |a-b| / max(|a|, |b|, floor)
inline double max_rel_err(const abmnn::Tensor& a, const abmnn::Tensor& b, double floor = 1e-3) {
    double worst = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
        const double den = std::max({std::abs(a.data[k]), std::abs(b.data[k]), floor});
        worst = std::max(worst, std::abs(a.data[k] - b.data[k]) / den);
    }
    return worst;
}

}  // namespace testutil
