#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "abmnn/core.hpp"
#include "abmnn/params.hpp"
#include "abmnn/tape.hpp"
#include "abmnn/tensor.hpp"

namespace abmnn {

struct RolloutConfig {
    double dt = 0.1;
    double t_max = 30.0;
    int record_stride = 1;  // record t0 and every stride-th step after
    double t0 = 0.0;

    int n_steps() const {
        if (dt <= 0.0) throw ShapeError("rollout: dt must be > 0");
        if (t_max < dt) throw ShapeError("rollout: t_max must be >= dt");
        return static_cast<int>(std::llround(t_max / dt));
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Tensor> states;  // one [nodes, compartments] tensor per time
};

// Composed right-hand side. Stage is the RK4 stage index (0..3); fields that
// accumulate along the trajectory (e.g. conservation residuals) typically
// hook stage 0 only.
struct VectorField {
    virtual ~VectorField() = default;
    virtual Var eval(Tape& tape, Var w, double t, int stage) = 0;
    // re-register parameters on a fresh tape; fields without parameters
    // may leave this empty
    virtual void bind(Tape& tape) {}
};

// Adapter for analytic fields written as plain lambdas.
struct FnField : VectorField {
    std::function<Var(Tape&, Var, double)> fn;
    Params* params = nullptr;

    FnField() = default;
    explicit FnField(std::function<Var(Tape&, Var, double)> f, Params* p = nullptr)
        : fn(std::move(f)), params(p) {}
    Var eval(Tape& tape, Var w, double t, int) override { return fn(tape, w, t); }
    void bind(Tape& tape) override {
        if (params) params->bind(tape);
    }
};

// Tape-recorded trajectory; states are alive on the tape for loss building.
struct Rollout {
    std::vector<double> times;
    std::vector<Var> states;
};

namespace detail {
inline NumericError annotate_step(const NumericError& e, int step, double t) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "rk4 step %d (t=%.6g): ", step, t);
    return NumericError(std::string(buf) + e.what());
}

inline void check_state(const Tensor& w, int step, double t) {
    for (int r = 0; r < w.rows; ++r)
        for (int c = 0; c < w.cols; ++c)
            if (!std::isfinite(w(r, c))) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), "rk4 step %d (t=%.6g): non-finite state at node %d",
                              step, t, r);
                throw NumericError(buf);
            }
}
}  // namespace detail

// Classic fixed-step RK4 with every stage recorded on the tape. Forcing
// terms see the exact stage times t, t+dt/2, t+dt, so piecewise-constant
// schedules take effect mid-step without smoothing.
inline Rollout rk4_rollout(Tape& tape, VectorField& field, const Tensor& w0, const RolloutConfig& cfg) {
    detail::check_state(w0, 0, cfg.t0);
    Rollout out;
    Var w = tape.leaf(w0, false);
    out.times.push_back(cfg.t0);
    out.states.push_back(w);
    const int n = cfg.n_steps();
    const double dt = cfg.dt;
    for (int step = 0; step < n; ++step) {
        const double t = cfg.t0 + step * dt;
        try {
            Var k1 = field.eval(tape, w, t, 0);
            Var k2 = field.eval(tape, add(w, smul(k1, dt / 2)), t + dt / 2, 1);
            Var k3 = field.eval(tape, add(w, smul(k2, dt / 2)), t + dt / 2, 2);
            Var k4 = field.eval(tape, add(w, smul(k3, dt)), t + dt, 3);
            Var incr = add(add(k1, k4), smul(add(k2, k3), 2.0));
            w = add(w, smul(incr, dt / 6.0));
        } catch (const NumericError& e) {
            throw detail::annotate_step(e, step, t);
        }
        detail::check_state(tape.val(w), step, t);
        if ((step + 1) % cfg.record_stride == 0 || step + 1 == n) {
            out.times.push_back(cfg.t0 + (step + 1) * dt);
            out.states.push_back(w);
        }
    }
    return out;
}

inline Trajectory materialize(const Tape& tape, const Rollout& r) {
    Trajectory t;
    t.times = r.times;
    for (Var v : r.states) t.states.push_back(tape.val(v));
    return t;
}

// Inference rollout: a scratch tape is rebuilt every step, so memory stays
// flat regardless of horizon.
inline Trajectory rollout_nograd(VectorField& field, const Tensor& w0, const RolloutConfig& cfg) {
    Trajectory out;
    Tensor w = w0;
    detail::check_state(w, 0, cfg.t0);
    out.times.push_back(cfg.t0);
    out.states.push_back(w);
    const int n = cfg.n_steps();
    const double dt = cfg.dt;
    Tape tape;
    for (int step = 0; step < n; ++step) {
        const double t = cfg.t0 + step * dt;
        tape.clear();
        field.bind(tape);
        try {
            Var wv = tape.leaf(w, false);
            Var k1 = field.eval(tape, wv, t, 0);
            Var k2 = field.eval(tape, add(wv, smul(k1, dt / 2)), t + dt / 2, 1);
            Var k3 = field.eval(tape, add(wv, smul(k2, dt / 2)), t + dt / 2, 2);
            Var k4 = field.eval(tape, add(wv, smul(k3, dt)), t + dt, 3);
            Var incr = add(add(k1, k4), smul(add(k2, k3), 2.0));
            w = tape.val(add(wv, smul(incr, dt / 6.0)));
        } catch (const NumericError& e) {
            throw detail::annotate_step(e, step, t);
        }
        detail::check_state(w, step, t);
        if ((step + 1) % cfg.record_stride == 0 || step + 1 == n) {
            out.times.push_back(cfg.t0 + (step + 1) * dt);
            out.states.push_back(w);
        }
    }
    return out;
}

// Derivative of the field at one state (scratch tape, stage 0).
inline Tensor eval_field(VectorField& field, const Tensor& w, double t) {
    Tape tape;
    field.bind(tape);
    Var wv = tape.leaf(w, false);
    return tape.val(field.eval(tape, wv, t, 0));
}

// RK4 on plain arrays, for ground-truth generators that need no gradients.
inline Trajectory rk4_raw(const std::function<void(const std::vector<double>&, double, std::vector<double>&)>& deriv,
                          Tensor w0, const RolloutConfig& cfg) {
    Trajectory out;
    detail::check_state(w0, 0, cfg.t0);
    out.times.push_back(cfg.t0);
    out.states.push_back(w0);
    const int n = cfg.n_steps();
    const double dt = cfg.dt;
    const size_t m = w0.size();
    std::vector<double> w = w0.data, k1(m), k2(m), k3(m), k4(m), tmp(m);
    for (int step = 0; step < n; ++step) {
        const double t = cfg.t0 + step * dt;
        deriv(w, t, k1);
        for (size_t i = 0; i < m; ++i) tmp[i] = w[i] + 0.5 * dt * k1[i];
        deriv(tmp, t + dt / 2, k2);
        for (size_t i = 0; i < m; ++i) tmp[i] = w[i] + 0.5 * dt * k2[i];
        deriv(tmp, t + dt / 2, k3);
        for (size_t i = 0; i < m; ++i) tmp[i] = w[i] + dt * k3[i];
        deriv(tmp, t + dt, k4);
        for (size_t i = 0; i < m; ++i)
            w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        Tensor snap(w0.rows, w0.cols, w);
        detail::check_state(snap, step, t);
        if ((step + 1) % cfg.record_stride == 0 || step + 1 == n) {
            out.times.push_back(cfg.t0 + (step + 1) * dt);
            out.states.push_back(std::move(snap));
        }
    }
    return out;
}

// --- trajectory export ----------------------------------------------------

inline void export_trajectory_csv(const Trajectory& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("export_trajectory_csv: cannot open " + path);
    out << "time,node,compartment,value\n";
    char buf[96];
    for (size_t k = 0; k < tr.times.size(); ++k) {
        const Tensor& s = tr.states[k];
        for (int node = 0; node < s.rows; ++node)
            for (int c = 0; c < s.cols; ++c) {
                std::snprintf(buf, sizeof(buf), "%.17g,%d,%d,%.17g\n", tr.times[k], node, c, s(node, c));
                out << buf;
            }
    }
}

inline void export_aggregate_csv(const Trajectory& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("export_aggregate_csv: cannot open " + path);
    out << "time,compartment,sum\n";
    char buf[96];
    for (size_t k = 0; k < tr.times.size(); ++k) {
        const Tensor& s = tr.states[k];
        for (int c = 0; c < s.cols; ++c) {
            double total = 0.0;
            for (int node = 0; node < s.rows; ++node) total += s(node, c);
            std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g\n", tr.times[k], c, total);
            out << buf;
        }
    }
}

// Aggregate (per-compartment column sums) as a dense matrix, one row per
// recorded time.
inline Tensor aggregate_series(const Trajectory& tr) {
    if (tr.states.empty()) return Tensor();
    const int cols = tr.states[0].cols;
    Tensor agg(static_cast<int>(tr.times.size()), cols);
    for (size_t k = 0; k < tr.times.size(); ++k)
        for (int node = 0; node < tr.states[k].rows; ++node)
            for (int c = 0; c < cols; ++c) agg(static_cast<int>(k), c) += tr.states[k](node, c);
    return agg;
}

}  // namespace abmnn
