#pragma once

#include <cmath>
#include <limits>
#include <unordered_map>
#include <vector>

#include "abmnn/core.hpp"
#include "abmnn/models/sir.hpp"
#include "abmnn/ode.hpp"
#include "abmnn/params.hpp"
#include "abmnn/tape.hpp"

namespace abmnn {

// --- path losses -----------------------------------------------------------

struct PathLoss {
    int p = 1;                      // the experiments use the L1 norm only
    bool macro_aggregated = false;  // sum compartments across nodes first
};

// Value-side loss between two trajectories on identical grids:
// sum_t dt * ||w(t) - w_hat(t)||_p.
inline double path_loss_value(const Trajectory& pred, const Trajectory& truth, const PathLoss& spec) {
    if (pred.times.size() != truth.times.size()) throw ShapeError("path_loss: grid size mismatch");
    double total = 0.0;
    for (size_t k = 1; k < pred.times.size(); ++k) {
        if (std::abs(pred.times[k] - truth.times[k]) > 1e-9) throw ShapeError("path_loss: grid mismatch");
        const double dt = pred.times[k] - pred.times[k - 1];
        const Tensor& a = pred.states[k];
        const Tensor& b = truth.states[k];
        if (!a.same_shape(b)) throw ShapeError("path_loss: state shape mismatch");
        double norm = 0.0;
        if (spec.macro_aggregated) {
            for (int c = 0; c < a.cols; ++c) {
                double sa = 0.0, sb = 0.0;
                for (int r = 0; r < a.rows; ++r) {
                    sa += a(r, c);
                    sb += b(r, c);
                }
                norm += spec.p == 1 ? std::abs(sa - sb) : (sa - sb) * (sa - sb);
            }
        } else {
            for (size_t i = 0; i < a.size(); ++i) {
                const double d = a.data[i] - b.data[i];
                norm += spec.p == 1 ? std::abs(d) : d * d;
            }
        }
        if (spec.p == 2) norm = std::sqrt(norm);
        total += dt * norm;
    }
    return total;
}

// Tape-side node-level L1 path loss against a constant truth trajectory;
// includes recorded points 1..k_max.
inline Var path_loss_node(Tape& t, const Rollout& pred, const Trajectory& truth, int k_max = -1) {
    const size_t K = k_max < 0 ? pred.states.size() - 1 : static_cast<size_t>(k_max);
    if (truth.states.size() <= K) throw ShapeError("path_loss: truth trajectory too short");
    Var loss = t.constant(0.0);
    for (size_t k = 1; k <= K; ++k) {
        if (std::abs(pred.times[k] - truth.times[k]) > 1e-9) throw ShapeError("path_loss: grid mismatch");
        const double dt = pred.times[k] - pred.times[k - 1];
        Var term = sum(abs(sub(pred.states[k], t.constant(truth.states[k]))));
        loss = add(loss, smul(term, dt));
    }
    return loss;
}

// Tape-side aggregated L1 path loss; truth_agg holds one row of compartment
// sums per recorded time.
inline Var path_loss_aggregate(Tape& t, const Rollout& pred, const Tensor& truth_agg, int k_max = -1) {
    const size_t K = k_max < 0 ? pred.states.size() - 1 : static_cast<size_t>(k_max);
    if (static_cast<size_t>(truth_agg.rows) <= K) throw ShapeError("path_loss: truth grid too short");
    Var loss = t.constant(0.0);
    for (size_t k = 1; k <= K; ++k) {
        const double dt = pred.times[k] - pred.times[k - 1];
        Tensor row(1, truth_agg.cols);
        for (int c = 0; c < truth_agg.cols; ++c) row.data[c] = truth_agg(static_cast<int>(k), c);
        Var term = sum(abs(sub(colsum(pred.states[k]), t.constant(row))));
        loss = add(loss, smul(term, dt));
    }
    return loss;
}

// Relative-error loss |pred - truth| / (|truth| + eps); at truth = 0 this
// degenerates to |pred| / eps (absolute error scaled by 1/eps).
inline Var relative_error_term(Tape& t, Var pred, const Tensor& truth, double eps) {
    Tensor recip(truth.rows, truth.cols);
    for (size_t i = 0; i < truth.size(); ++i) recip.data[i] = 1.0 / (std::abs(truth.data[i]) + eps);
    return sum(mul(abs(sub(pred, t.constant(truth))), t.constant(recip)));
}

// --- regularizers ------------------------------------------------------------

struct RegSpec {
    double lambda_axis = 1.0;
    double lambda_origin = 1.0;
    int warmup_epochs = 100;
    int axis_samples = 64;  // Monte Carlo draws per evaluation
};

// Axis and origin penalties for the SIR laws:
//   R_axis   = E_{S~U[0,1]} |phi1(S, 0)|
//   R_origin = |phi2(0)|
// Zero before the warmup epoch. Fresh uniform samples each call.
inline Var sir_regularizers(Tape& t, const PairLaw& pair, const SelfLaw& recovery, int epoch,
                            const RegSpec& spec, Rng& rng) {
    if (epoch < spec.warmup_epochs) return t.constant(0.0);
    Tensor samples(spec.axis_samples, 2);
    for (int k = 0; k < spec.axis_samples; ++k) samples(k, 0) = rng.uniform();
    Var axis = mean(abs(pair(t, t.constant(samples))));
    Var origin = sum(abs(recovery(t, t.constant(Tensor(1, 1)))));
    return add(smul(axis, spec.lambda_axis), smul(origin, spec.lambda_origin));
}

// Generic dataset-expectation regularizer: mean |f(x) - y|.
template <typename Fn>
inline Var expectation_reg(Tape& t, Fn&& f, const Tensor& xs, const Tensor& ys) {
    return mean(abs(sub(f(t, t.constant(xs)), t.constant(ys))));
}

// L1 penalty on a matrix parameter (used for the learned interaction matrix).
inline Var matrix_l1(Tape& t, const Params& P, int handle, double lambda) {
    return smul(sum(abs(P.var(handle))), lambda);
}

// Conservation penalty over collected per-step residuals: lambda * sum_k dt |d_k|.
inline Var conservation_penalty(Tape& t, const std::vector<Var>& residuals, double dt, double lambda) {
    Var total = t.constant(0.0);
    for (Var r : residuals) total = add(total, sum(abs(r)));
    return smul(total, lambda * dt);
}

// --- optimizer -----------------------------------------------------------------

enum class Algo { Adam, AdamW };

struct Schedule {
    enum Kind { Constant, Cyclical, Triangular } kind = Constant;
    double max_lr = 0.0;
    int step = 0;
};

// Cyclical and triangular policies share the same shape: linear ramp from
// the base rate to max_lr over `step` epochs, back down over the next
// `step`, repeating.
inline double scheduled_lr(const Schedule& s, double base_lr, int epoch) {
    if (s.kind == Schedule::Constant || s.step <= 0) return base_lr;
    const int phase = epoch % (2 * s.step);
    const double frac = phase <= s.step ? static_cast<double>(phase) / s.step
                                        : 2.0 - static_cast<double>(phase) / s.step;
    return base_lr + (s.max_lr - base_lr) * frac;
}

struct OptimizerGroup {
    std::vector<int> params;
    Algo algo = Algo::Adam;
    double lr = 1e-3;
    double weight_decay = 0.0;
    Schedule schedule;
    double clip_norm = 0.0;  // 0 disables clipping
};

// Adam/AdamW with per-group learning rates, schedules, and global-norm
// clipping. A group whose gradients contain non-finite values skips its
// update for that epoch (counted).
class Optimizer {
public:
    std::vector<OptimizerGroup> groups;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    explicit Optimizer(std::vector<OptimizerGroup> g = {}) : groups(std::move(g)) {}

    int skipped_steps() const { return skipped_; }

    void step(Params& P, const GradMap& grads, int epoch) {
        for (auto& group : groups) step_group(P, grads, group, epoch);
    }

private:
    struct Moment {
        Tensor m, v;
    };
    std::unordered_map<int, Moment> state_;
    std::unordered_map<const OptimizerGroup*, long> t_;
    int skipped_ = 0;

    void step_group(Params& P, const GradMap& grads, OptimizerGroup& group, int epoch) {
        // gather grads (missing = zero), bail on non-finite
        std::vector<const Tensor*> gs(group.params.size(), nullptr);
        double norm_sq = 0.0;
        for (size_t k = 0; k < group.params.size(); ++k) {
            gs[k] = P.grad_of(group.params[k], grads);
            if (!gs[k]) continue;
            for (double v : gs[k]->data) {
                if (!std::isfinite(v)) {
                    ++skipped_;
                    return;
                }
                norm_sq += v * v;
            }
        }
        double scale = 1.0;
        if (group.clip_norm > 0.0) {
            const double norm = std::sqrt(norm_sq);
            if (norm > group.clip_norm) scale = group.clip_norm / norm;
        }
        const double lr = scheduled_lr(group.schedule, group.lr, epoch);
        const long t = ++t_[&group];
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (size_t k = 0; k < group.params.size(); ++k) {
            Tensor& p = P.value(group.params[k]);
            Moment& mom = moment_for(group.params[k], p);
            for (size_t i = 0; i < p.size(); ++i) {
                double g = gs[k] ? scale * gs[k]->data[i] : 0.0;
                if (group.weight_decay > 0.0 && group.algo == Algo::Adam)
                    g += group.weight_decay * p.data[i];  // classic L2-in-gradient
                mom.m.data[i] = beta1 * mom.m.data[i] + (1.0 - beta1) * g;
                mom.v.data[i] = beta2 * mom.v.data[i] + (1.0 - beta2) * g * g;
                const double mhat = mom.m.data[i] / bc1;
                const double vhat = mom.v.data[i] / bc2;
                double upd = mhat / (std::sqrt(vhat) + eps);
                if (group.weight_decay > 0.0 && group.algo == Algo::AdamW)
                    upd += group.weight_decay * p.data[i];  // decoupled decay
                p.data[i] -= lr * upd;
            }
        }
    }

    Moment& moment_for(int handle, const Tensor& shape) {
        auto it = state_.find(handle);
        if (it == state_.end())
            it = state_.emplace(handle, Moment{Tensor(shape.rows, shape.cols), Tensor(shape.rows, shape.cols)}).first;
        return it->second;
    }
};

// Clip a gradient set in place to a global norm bound (exposed for tests).
inline double clipped_norm(const std::vector<Tensor>& grads) {
    double s = 0.0;
    for (const Tensor& g : grads)
        for (double v : g.data) s += v * v;
    return std::sqrt(s);
}

// --- curriculum ------------------------------------------------------------------

struct Curriculum {
    double t_base = 1.0;
    double increment = 1.0;
    int epochs_per_increment = 50;
    double t_cap = 30.0;
    int stagnation = 0;  // epochs without a new best loss before forcing; 0 = off
};

class CurriculumState {
public:
    explicit CurriculumState(Curriculum cfg) : cfg_(cfg) {
        if (cfg_.t_base > cfg_.t_cap) throw ShapeError("curriculum: t_base must be <= t_cap");
        if (cfg_.increment <= 0.0) throw ShapeError("curriculum: increment must be > 0");
    }

    double horizon(int epoch) const {
        const int sched = epoch / cfg_.epochs_per_increment;
        return std::min(cfg_.t_base + cfg_.increment * (sched + forced_), cfg_.t_cap);
    }

    // Track the best training loss; long stagnation forces one increment.
    void observe(int epoch, double loss) {
        if (loss < best_) {
            best_ = loss;
            anchor_ = epoch;
        } else if (cfg_.stagnation > 0 && epoch - anchor_ >= cfg_.stagnation) {
            ++forced_;
            anchor_ = epoch;
            best_ = loss;  // the horizon changed; restart the race
        }
    }

    int forced_increments() const { return forced_; }

private:
    Curriculum cfg_;
    int forced_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
    int anchor_ = 0;
};

}  // namespace abmnn
