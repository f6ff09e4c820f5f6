#pragma once

#include <string>
#include <vector>

#include "abmnn/core.hpp"
#include "abmnn/ode.hpp"
#include "abmnn/params.hpp"
#include "abmnn/tape.hpp"

namespace abmnn {

// Right-continuous step function: value[k] applies on [breaks[k-1], breaks[k]).
struct PiecewiseSchedule {
    std::vector<double> breaks;
    std::vector<double> values;  // breaks.size() + 1 entries

    double at(double t) const {
        size_t k = 0;
        while (k < breaks.size() && t >= breaks[k]) ++k;
        return values[k];
    }
};

// Generalized Lotka-Volterra system with exogenous forcing:
//   dX_i/dt = X_i (r_i S_i(t) + tau_i(t)) + X_i sum_j a_ij X_j
// S_i(t) is the Sophon physics-access factor (S_block before deterrence,
// 1 after); tau_i(t) is a piecewise-constant policy regime. The interaction
// matrix is fixed; negative diagonals act as carrying capacities.
struct GlvSystem {
    int n = 0;
    std::vector<std::string> factions;
    std::vector<double> r_truth;
    std::vector<double> s_block;
    double t_deterrence = 180.0;
    std::vector<PiecewiseSchedule> tau;
    Tensor interaction;  // [n,n], A[i][j] = effect of faction j on faction i
    std::vector<double> x0;

    double sophon_at(int i, double t) const { return t >= t_deterrence ? 1.0 : s_block[i]; }
};

// Five-faction scenario. Earth/Fleet schedules, the deterrence step, and the
// interaction entries follow the reference scenario; the remaining faction
// schedules, S_block values, truth rates, and initial capacities are
// scenario defaults (see README).
inline GlvSystem default_glv_system() {
    GlvSystem s;
    s.n = 5;
    s.factions = {"Earth", "Fleet", "Wallfacers", "ETO", "Escapists"};
    s.r_truth = {0.35, 0.50, 0.30, 0.40, 0.25};
    s.s_block = {0.35, 0.20, 0.70, 0.50, 0.55};
    s.t_deterrence = 180.0;
    s.tau = {
        {{20, 70, 180}, {-0.05, -0.15, +0.05, +0.02}},  // Earth
        {{20, 70, 180}, {+0.10, -0.05, +0.02, +0.15}},  // Fleet
        {{20, 70, 180}, {+0.02, -0.05, +0.03, +0.02}},  // Wallfacers
        {{20, 70, 180}, {-0.05, -0.10, -0.02, +0.10}},  // ETO
        {{20, 70, 180}, {-0.02, +0.10, -0.02, 0.00}},   // Escapists
    };
    s.interaction = Tensor(5, 5);
    for (int i = 0; i < 5; ++i) s.interaction(i, i) = -0.001;
    s.interaction(1, 0) = +0.004;   // Fleet benefits from Earth's economy
    s.interaction(0, 1) = -0.005;   // Earth drained by Fleet investment
    s.interaction(1, 3) = -0.010;   // ETO opposes the Fleet
    s.interaction(2, 3) = -0.015;   // ETO opposes the Wallfacers
    s.x0 = {1.0, 0.6, 0.4, 0.3, 0.2};
    return s;
}

// Ground truth trajectory at the system's true growth rates.
inline Trajectory glv_truth(const GlvSystem& sys, const Tensor& x0, const RolloutConfig& cfg) {
    for (double v : x0.data)
        if (v <= 0.0) throw ShapeError("glv_truth: initial capacities must be positive");
    const int n = sys.n;
    auto deriv = [&](const std::vector<double>& x, double t, std::vector<double>& dx) {
        for (int i = 0; i < n; ++i) {
            double inter = 0.0;
            for (int j = 0; j < n; ++j) inter += sys.interaction(i, j) * x[j];
            dx[i] = x[i] * (sys.r_truth[i] * sys.sophon_at(i, t) + sys.tau[i].at(t)) + x[i] * inter;
        }
    };
    return rk4_raw(deriv, x0, cfg);
}

// Learnable field: identical structure and forcing, but the growth rates
// are the only free parameters (the pairwise term x_i x_j has none).
struct GlvField : VectorField {
    const GlvSystem* sys = nullptr;
    Params* P = nullptr;
    int r = -1;  // [n,1]

    Var eval(Tape& t, Var w, double time, int) override {
        const int n = sys->n;
        Tensor s_vec(n, 1), tau_vec(n, 1);
        for (int i = 0; i < n; ++i) {
            s_vec(i, 0) = sys->sophon_at(i, time);
            tau_vec(i, 0) = sys->tau[i].at(time);
        }
        Var rate = add(mul(P->var(r), t.constant(s_vec)), t.constant(tau_vec));
        Var self = mul(w, rate);
        Var inter = mul(w, matmul(t.constant(sys->interaction), w));
        return add(self, inter);
    }
    void bind(Tape& t) override { P->bind(t); }
};

inline GlvField glv_learnable_field(Params& P, const GlvSystem& sys, const std::vector<double>& r_init) {
    if (static_cast<int>(r_init.size()) != sys.n) throw ShapeError("glv field: r_init size mismatch");
    GlvField f;
    f.sys = &sys;
    f.P = &P;
    f.r = P.create(Tensor::column(r_init));
    return f;
}

}  // namespace abmnn
