#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "abmnn/baselines.hpp"
#include "abmnn/metrics.hpp"
#include "abmnn/models/sir.hpp"
#include "abmnn/train.hpp"

namespace abmnn {

// Case study 2: learn the SIR right-hand side from a single macroscopic
// trajectory on one Erdos-Renyi graph.
struct SirRunConfig {
    int n = 100;
    double p_edge = 0.05;
    std::uint64_t graph_seed = 7;
    double beta = 0.4, gamma = 0.2;
    int init_infected = 50;
    std::uint64_t init_seed = 11;
    double dt = 0.1;
    double t_max = 30.0;

    int epochs = 1000;
    double lr = 1e-4;
    Schedule schedule{Schedule::Constant};
    double clip = 10.0;
    Curriculum curriculum{1.0, 1.0, 50, 30.0, 0};
    RegSpec regs;
    int hidden = 32, hidden_layers = 3;
    std::uint64_t net_seed = 3;

    // observational noise on the aggregate supervision (0 disables)
    double noise_sigma = 0.0;
    double noise_from_t = 3.0;
    std::uint64_t noise_seed = 5;
};

struct SirTrained {
    std::unique_ptr<Params> params;
    SirNets nets;
    Graph graph;
    Trajectory truth;       // clean node-level truth
    Tensor agg_clean;       // clean aggregate curves
    Tensor agg_supervised;  // what the learner saw (noisy when sigma > 0)
    std::vector<double> loss_curve;  // data term per epoch
    int skipped_steps = 0;
    double runtime_sec = 0.0;
};

inline Tensor add_aggregate_noise(const Tensor& agg, const std::vector<double>& times, double sigma,
                                  double from_t, std::uint64_t seed) {
    Tensor noisy = agg;
    Rng rng(seed);
    for (int k = 0; k < noisy.rows; ++k)
        for (int c = 0; c < noisy.cols; ++c) {
            const double eps = rng.normal();  // fixed draw order keeps runs reproducible
            if (times[k] >= from_t) noisy(k, c) = agg(k, c) + sigma * eps;
        }
    return noisy;
}

inline SirTrained run_case2(const SirRunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    SirTrained out;
    out.params = std::make_unique<Params>();
    Params& P = *out.params;

    out.graph = erdos_renyi(cfg.n, cfg.p_edge, cfg.graph_seed);
    out.truth = sir_truth(out.graph, cfg.beta, cfg.gamma, cfg.init_infected, cfg.init_seed,
                          {cfg.dt, cfg.t_max});
    out.agg_clean = aggregate_series(out.truth);
    out.agg_supervised = cfg.noise_sigma > 0.0
                             ? add_aggregate_noise(out.agg_clean, out.truth.times, cfg.noise_sigma,
                                                   cfg.noise_from_t, cfg.noise_seed)
                             : out.agg_clean;

    out.nets = make_sir_nets(P, cfg.net_seed, cfg.hidden, cfg.hidden_layers);
    SirAbmField field = sir_abm_field(P, out.nets, out.graph);
    const Tensor w0 = out.truth.states.front();

    std::vector<int> all_params;
    for (int h = 0; h < P.count(); ++h) all_params.push_back(h);
    OptimizerGroup group{all_params, Algo::Adam, cfg.lr};
    group.schedule = cfg.schedule;
    group.clip_norm = cfg.clip;
    Optimizer opt({group});

    CurriculumState cur(cfg.curriculum);
    Rng reg_rng(cfg.net_seed ^ 0xabcdef);
    Tape tape;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double horizon = std::min(cur.horizon(epoch), cfg.t_max);
        tape.clear();
        field.bind(tape);
        Rollout ro = rk4_rollout(tape, field, w0, {cfg.dt, horizon});
        Var data = path_loss_aggregate(tape, ro, out.agg_supervised);
        Var loss = add(data, sir_regularizers(tape, field.pair, field.recovery, epoch, cfg.regs, reg_rng));
        out.loss_curve.push_back(tape.val(data).data[0]);
        auto grads = tape.backward(loss);
        opt.step(P, grads, epoch);
        cur.observe(epoch, tape.val(loss).data[0]);
    }
    out.skipped_steps = opt.skipped_steps();
    out.runtime_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

inline nlohmann::json sir_save_nets(const Params& P, const SirNets& nets) {
    return nlohmann::json{{"format_version", 1},
                          {"phi1", mlp_to_json(P, nets.phi1)},
                          {"phi2", mlp_to_json(P, nets.phi2)}};
}

inline SirNets sir_load_nets(Params& P, const nlohmann::json& j) {
    return SirNets{mlp_from_json(P, j.at("phi1")), mlp_from_json(P, j.at("phi2"))};
}

// --- out-of-sample evaluation ------------------------------------------------

struct SirOosResult {
    Trajectory truth;
    Trajectory pred;
    double mape = 0.0;
    int mape_skipped = 0;
};

using SirPredictor = std::function<Trajectory(const Graph&, const Tensor& w0, const RolloutConfig&,
                                              const LinkMask*)>;

inline SirPredictor abm_predictor(Params& P, const SirNets& nets) {
    return [&P, nets](const Graph& g, const Tensor& w0, const RolloutConfig& cfg, const LinkMask* mask) {
        SirAbmField f = sir_abm_field(P, nets, g, mask);
        return rollout_nograd(f, w0, cfg);
    };
}

inline SirPredictor baseline_predictor(const BaselineField& trained) {
    return [trained](const Graph& g, const Tensor& w0, const RolloutConfig& cfg, const LinkMask* mask) {
        if (mask) throw ShapeError("baseline predictor: link masks unsupported");
        BaselineField f = trained.with_graph(g);
        return rollout_nograd(f, w0, cfg);
    };
}

// Fresh graph + initial condition; truth and prediction start from the same
// state and the same (possibly masked) edges.
inline SirOosResult evaluate_sir_oos(const SirPredictor& predict, int n, double p_edge,
                                     std::uint64_t graph_seed, double beta, double gamma,
                                     int init_infected, std::uint64_t init_seed,
                                     const RolloutConfig& cfg, const LinkMask* mask = nullptr) {
    Graph g = erdos_renyi(n, p_edge, graph_seed);
    SirOosResult out;
    out.truth = sir_truth(g, beta, gamma, init_infected, init_seed, cfg, mask);
    out.pred = predict(g, out.truth.states.front(), cfg, mask);
    MapeResult m = mape_aggregate(out.pred, out.truth);
    out.mape = m.value;
    out.mape_skipped = m.skipped;
    return out;
}

// --- baseline training ---------------------------------------------------------

struct BaselineTrained {
    std::unique_ptr<Params> params;
    BaselineField field;
    std::vector<double> loss_curve;
    double runtime_sec = 0.0;
};

// Fair-comparison contract: identical truth data, optimizer settings, and
// curriculum as run_case2; only the field differs (and there is nothing to
// regularize).
inline BaselineTrained run_baseline(const SirRunConfig& cfg, BaselineKind kind) {
    const auto t_start = std::chrono::steady_clock::now();
    BaselineTrained out;
    out.params = std::make_unique<Params>();
    Params& P = *out.params;

    Graph g = erdos_renyi(cfg.n, cfg.p_edge, cfg.graph_seed);
    Trajectory truth = sir_truth(g, cfg.beta, cfg.gamma, cfg.init_infected, cfg.init_seed,
                                 {cfg.dt, cfg.t_max});
    Tensor agg = aggregate_series(truth);
    if (cfg.noise_sigma > 0.0)
        agg = add_aggregate_noise(agg, truth.times, cfg.noise_sigma, cfg.noise_from_t, cfg.noise_seed);

    out.field = make_baseline_field(P, kind, g, cfg.net_seed);
    const Tensor w0 = truth.states.front();

    OptimizerGroup group{baseline_params(out.field), Algo::Adam, cfg.lr};
    group.schedule = cfg.schedule;
    group.clip_norm = cfg.clip;
    Optimizer opt({group});
    CurriculumState cur(cfg.curriculum);

    Tape tape;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double horizon = std::min(cur.horizon(epoch), cfg.t_max);
        tape.clear();
        out.field.bind(tape);
        Rollout ro = rk4_rollout(tape, out.field, w0, {cfg.dt, horizon});
        Var loss = path_loss_aggregate(tape, ro, agg);
        out.loss_curve.push_back(tape.val(loss).data[0]);
        auto grads = tape.backward(loss);
        opt.step(P, grads, epoch);
        cur.observe(epoch, out.loss_curve.back());
    }
    out.runtime_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

// --- functional-learning variant ------------------------------------------------

struct SirFunctionalConfig {
    SirRunConfig base;  // graph/truth settings shared with run_case2
    int epochs = 700;
    Curriculum curriculum{1.0, 1.0, 10, 30.0, 0};
    double lr_nets = 0.01;
    double lr_coeffs = 0.1;
    double clip = 10.0;
    double lambda_conservation = kConservationPenaltyWeight;
    Tensor cg_init = Tensor(2, 1, {0.5, 0.0});
    Tensor ch_init = Tensor(2, 1, {0.0, 0.5});
};

struct SirFunctionalTrained {
    std::unique_ptr<Params> params;
    SirNets nets;
    Graph graph;
    Trajectory truth;
    Tensor agg_clean;
    Tensor c_f, c_g, c_h;
    std::vector<double> loss_curve;
    double runtime_sec = 0.0;
};

// Conservation path integral sum_k dt * sum_i |(F+G+H)_i| along a recorded
// trajectory, evaluated on scratch tapes.
inline double conservation_path_integral(SirFunctionalField& f, const Trajectory& tr) {
    double total = 0.0;
    Tape tape;
    for (size_t k = 0; k + 1 < tr.states.size(); ++k) {
        tape.clear();
        f.bind(tape);
        f.eval(tape, tape.leaf(tr.states[k], false), tr.times[k], 0);
        const Tensor& resid = tape.val(f.residuals.back());
        double s = 0.0;
        for (double v : resid.data) s += std::abs(v);
        total += s * (tr.times[k + 1] - tr.times[k]);
    }
    return total;
}

inline SirFunctionalTrained run_case2_functional(const SirFunctionalConfig& cfg,
                                                 SirFunctionalField* trained_field = nullptr) {
    const auto t_start = std::chrono::steady_clock::now();
    SirFunctionalTrained out;
    out.params = std::make_unique<Params>();
    Params& P = *out.params;

    const SirRunConfig& b = cfg.base;
    out.graph = erdos_renyi(b.n, b.p_edge, b.graph_seed);
    out.truth = sir_truth(out.graph, b.beta, b.gamma, b.init_infected, b.init_seed, {b.dt, b.t_max});
    out.agg_clean = aggregate_series(out.truth);
    out.nets = make_sir_nets(P, b.net_seed, b.hidden, b.hidden_layers);
    SirFunctionalField field = sir_functional_field(P, out.nets, out.graph, cfg.cg_init, cfg.ch_init);
    const Tensor w0 = out.truth.states.front();

    // F is held fixed: its coefficient parameter joins no optimizer group.
    std::vector<int> net_params;
    for (const Mlp* net : {&out.nets.phi1, &out.nets.phi2}) {
        net_params.insert(net_params.end(), net->w.begin(), net->w.end());
        net_params.insert(net_params.end(), net->b.begin(), net->b.end());
    }
    OptimizerGroup nets_group{net_params, Algo::Adam, cfg.lr_nets};
    nets_group.clip_norm = cfg.clip;
    OptimizerGroup coeff_group{{field.c_g, field.c_h}, Algo::Adam, cfg.lr_coeffs};
    coeff_group.clip_norm = cfg.clip;
    Optimizer opt({nets_group, coeff_group});

    CurriculumState cur(cfg.curriculum);
    Rng reg_rng(b.net_seed ^ 0xabcdef);
    Tape tape;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double horizon = std::min(cur.horizon(epoch), b.t_max);
        tape.clear();
        field.bind(tape);  // also clears collected residuals
        Rollout ro = rk4_rollout(tape, field, w0, {b.dt, horizon});
        Var data = path_loss_aggregate(tape, ro, out.agg_clean);
        Var penalty = conservation_penalty(tape, field.residuals, b.dt, cfg.lambda_conservation);
        Var loss = add(add(data, penalty),
                       sir_regularizers(tape, field.pair, field.recovery, epoch, b.regs, reg_rng));
        out.loss_curve.push_back(tape.val(data).data[0]);
        auto grads = tape.backward(loss);
        opt.step(P, grads, epoch);
        cur.observe(epoch, tape.val(loss).data[0]);
    }
    out.c_f = P.value(field.c_f);
    out.c_g = P.value(field.c_g);
    out.c_h = P.value(field.c_h);
    if (trained_field) *trained_field = field;
    out.runtime_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

}  // namespace abmnn
