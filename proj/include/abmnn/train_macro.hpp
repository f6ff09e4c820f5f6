#pragma once

#include <chrono>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "abmnn/data.hpp"
#include "abmnn/models/macro.hpp"
#include "abmnn/train.hpp"

namespace abmnn {

// Case study 3: coupled GDP dynamics for the panel countries, trained on
// 1995..cutoff and evaluated through the panel's last year.
struct MacroRunConfig {
    std::string snapshot_path = "data/macro_snapshot.csv";
    int cutoff_year = 2022;
    KalmanConfig kalman;

    int pretrain_epochs = 500;
    int pretrain_batch = 256;
    double pretrain_lr = 1e-3;

    int epochs = 500;
    double base_lr = 5e-4;
    Schedule schedule{Schedule::Cyclical, 2e-3, 75};
    double weight_decay = 1e-4;
    double clip = 2.0;
    Curriculum curriculum{5.0, 4.0, 10, 27.0, 50};
    int interaction_warmup = 25;
    int interaction_ramp = 50;
    double lambda_A = 1e-5;
    double a_clamp = 0.6;
    double rel_eps = 1e-2;

    int d_e = 8, hidden = 8, hidden_layers = 2;
    double dt = 1.0;  // years per RK4 step
    bool row_gates = false;
    std::uint64_t seed = 1;
};

struct MacroTrained {
    std::unique_ptr<Params> params;
    MacroField field;  // handles into *params
    StandardizeStats stats;
    std::vector<std::string> countries;
    int year_start = 0, cutoff_year = 0, year_end = 0;
    std::vector<Tensor> truth_states;  // [N,7] per year, model units
    std::vector<double> pretrain_curve, loss_curve;
    double pretrain_rel_err = 0.0;  // in-sample rollout error after pretraining
    double final_rel_err = 0.0;     // same metric after the full training
    double learned_beta = 0.0;
    double runtime_sec = 0.0;
};

namespace detail {

// Per-year [N, 1+6] model-unit states from the standardized panel.
inline std::vector<Tensor> panel_states(const MacroPanel& z) {
    std::vector<Tensor> states;
    for (int y = z.year_start; y <= z.year_end; ++y) {
        Tensor w(z.n_countries(), 1 + kMacroChannels);
        for (int c = 0; c < z.n_countries(); ++c)
            for (int ind = 0; ind <= kMacroChannels; ++ind) w(c, ind) = z.at(c, ind, y);
        states.push_back(std::move(w));
    }
    return states;
}

// Mean relative GDP error of a rollout against truth over [y0, y1].
inline double gdp_rel_error(const std::vector<Tensor>& truth, const Trajectory& rollout, int year_start,
                            int y0, int y1, double eps) {
    double acc = 0.0;
    int used = 0;
    for (size_t k = 0; k < rollout.times.size(); ++k) {
        const int year = year_start + static_cast<int>(std::lround(rollout.times[k]));
        if (year < y0 || year > y1) continue;
        const Tensor& wt = truth[year - year_start];
        const Tensor& wp = rollout.states[k];
        for (int c = 0; c < wt.rows; ++c) {
            acc += std::abs(wp(c, 0) - wt(c, 0)) / (std::abs(wt(c, 0)) + eps);
            ++used;
        }
    }
    return used ? acc / used : 0.0;
}

// Central finite differences on the annual grid, one-sided at the ends.
inline std::vector<Tensor> fd_derivatives(const std::vector<Tensor>& states) {
    std::vector<Tensor> out(states.size(), Tensor(states[0].rows, states[0].cols));
    const int last = static_cast<int>(states.size()) - 1;
    for (int k = 0; k <= last; ++k)
        for (size_t i = 0; i < states[k].size(); ++i) {
            if (k == 0)
                out[k].data[i] = states[1].data[i] - states[0].data[i];
            else if (k == last)
                out[k].data[i] = states[last].data[i] - states[last - 1].data[i];
            else
                out[k].data[i] = 0.5 * (states[k + 1].data[i] - states[k - 1].data[i]);
        }
    return out;
}

}  // namespace detail

// Teacher-forcing pretraining: fit phi_x and phi_y to finite-difference
// derivative targets before any coupling.
inline void macro_pretrain(Params& P, MacroField& field, const std::vector<Tensor>& states,
                           const std::vector<Tensor>& targets, int train_years,
                           const MacroRunConfig& cfg, std::vector<double>& curve) {
    const int n = field.n;
    std::vector<std::pair<int, int>> samples;  // (year index, country)
    for (int k = 0; k < train_years; ++k)
        for (int c = 0; c < n; ++c) samples.emplace_back(k, c);

    std::vector<int> net_params;
    auto collect = [&](const Mlp& net) {
        net_params.insert(net_params.end(), net.w.begin(), net.w.end());
        net_params.insert(net_params.end(), net.b.begin(), net.b.end());
    };
    collect(field.net_x);
    collect(field.net_y);
    for (const auto& group : {field.film_x.wg, field.film_x.bg, field.film_x.wb, field.film_x.bb,
                              field.film_y.wg, field.film_y.bg, field.film_y.wb, field.film_y.bb})
        net_params.insert(net_params.end(), group.begin(), group.end());
    net_params.push_back(field.emb.handle);
    Optimizer opt({OptimizerGroup{net_params, Algo::Adam, cfg.pretrain_lr}});

    Rng rng(cfg.seed ^ 0x5eed);
    Tape tape;
    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        for (int k = static_cast<int>(samples.size()) - 1; k > 0; --k)
            std::swap(samples[k], samples[rng.uniform_int(k + 1)]);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < samples.size(); start += cfg.pretrain_batch) {
            const size_t stop = std::min(samples.size(), start + cfg.pretrain_batch);
            const int B = static_cast<int>(stop - start);
            Tensor in(B, 1 + kMacroChannels), target(B, 1 + kMacroChannels);
            std::vector<int> rows(B);
            for (int b = 0; b < B; ++b) {
                auto [yk, c] = samples[start + b];
                rows[b] = c;
                for (int ind = 0; ind <= kMacroChannels; ++ind) {
                    in(b, ind) = states[yk](c, ind);
                    target(b, ind) = targets[yk](c, ind);
                }
            }
            tape.clear();
            P.bind(tape);
            Var inv = tape.constant(in);
            Var e = gather_rows(P.var(field.emb.handle), rows);
            Var x = slice_cols(inv, 0, 1);
            Var y = slice_cols(inv, 1, 1 + kMacroChannels);
            Var gd = film_forward(P, field.net_x, field.film_x, concat_cols(x, y), e);
            Var dx = add(mul(x, slice_cols(gd, 0, 1)), slice_cols(gd, 1, 2));
            Var dy = film_forward(P, field.net_y, field.film_y, concat_cols(y, x), e);
            Var loss = mean(abs(sub(concat_cols(dx, dy), tape.constant(target))));
            epoch_loss += tape.val(loss).data[0];
            auto grads = tape.backward(loss);
            opt.step(P, grads, epoch);
        }
        curve.push_back(epoch_loss);
    }
}

inline MacroTrained run_case3(const MacroRunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    MacroTrained out;
    out.params = std::make_unique<Params>();
    Params& P = *out.params;

    MacroPanel raw = load_snapshot(cfg.snapshot_path);
    MacroPanel imputed = kalman_impute(raw, cfg.kalman);
    MacroPanel z = standardize(imputed, cfg.cutoff_year, out.stats);
    out.countries = z.countries;
    out.year_start = z.year_start;
    out.cutoff_year = cfg.cutoff_year;
    out.year_end = z.year_end;
    out.truth_states = detail::panel_states(z);
    const int train_years = cfg.cutoff_year - z.year_start + 1;

    out.field = make_macro_field(P, z.n_countries(), cfg.seed, cfg.d_e, cfg.hidden,
                                 cfg.hidden_layers, cfg.row_gates);
    out.field.P = &P;

    // stage 1: teacher forcing against finite differences
    auto targets = detail::fd_derivatives(out.truth_states);
    macro_pretrain(P, out.field, out.truth_states, targets, train_years, cfg, out.pretrain_curve);

    const Tensor w0 = out.truth_states.front();
    const double train_horizon_cap = static_cast<double>(train_years - 1);
    out.field.interaction_scale = curriculum_factor(0, cfg.interaction_warmup, cfg.interaction_ramp);
    out.pretrain_rel_err = detail::gdp_rel_error(
        out.truth_states, rollout_nograd(out.field, w0, {cfg.dt, train_horizon_cap}), z.year_start,
        z.year_start, cfg.cutoff_year, cfg.rel_eps);

    // stage 2: full differentiable rollouts with the interaction ramping in
    std::vector<int> all_params;
    for (int h = 0; h < P.count(); ++h) all_params.push_back(h);
    OptimizerGroup group{all_params, Algo::AdamW, cfg.base_lr};
    group.weight_decay = cfg.weight_decay;
    group.schedule = cfg.schedule;
    group.clip_norm = cfg.clip;
    Optimizer opt({group});

    Curriculum cur_cfg = cfg.curriculum;
    cur_cfg.t_cap = std::min(cur_cfg.t_cap, train_horizon_cap);
    CurriculumState cur(cur_cfg);
    Tape tape;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        out.field.interaction_scale =
            curriculum_factor(epoch, cfg.interaction_warmup, cfg.interaction_ramp);
        const double horizon = cur.horizon(epoch);
        tape.clear();
        out.field.bind(tape);
        Rollout ro = rk4_rollout(tape, out.field, w0, {cfg.dt, horizon});
        // relative error on the GDP channel (robust to the 1..20x dynamic
        // range); plain L1 on the z-scored latent channels
        Var loss = tape.constant(0.0);
        for (size_t k = 1; k < ro.states.size(); ++k) {
            const int year_idx = static_cast<int>(std::lround(ro.times[k]));
            const Tensor& wt = out.truth_states[year_idx];
            Tensor x_truth(wt.rows, 1), y_truth(wt.rows, kMacroChannels);
            for (int c = 0; c < wt.rows; ++c) {
                x_truth(c, 0) = wt(c, 0);
                for (int j = 0; j < kMacroChannels; ++j) y_truth(c, j) = wt(c, 1 + j);
            }
            Var x_term = relative_error_term(tape, slice_cols(ro.states[k], 0, 1), x_truth, cfg.rel_eps);
            Var y_term = sum(abs(sub(slice_cols(ro.states[k], 1, 1 + kMacroChannels), tape.constant(y_truth))));
            loss = add(loss, add(x_term, y_term));
        }
        loss = add(loss, matrix_l1(tape, P, out.field.A, cfg.lambda_A));
        out.loss_curve.push_back(tape.val(loss).data[0]);
        auto grads = tape.backward(loss);
        opt.step(P, grads, epoch);
        // projection: |A_ij| <= a_clamp
        for (auto& v : P.value(out.field.A).data)
            v = std::max(-cfg.a_clamp, std::min(cfg.a_clamp, v));
        cur.observe(epoch, out.loss_curve.back());
    }

    out.field.interaction_scale = 1.0;
    out.final_rel_err = detail::gdp_rel_error(
        out.truth_states, rollout_nograd(out.field, w0, {cfg.dt, train_horizon_cap}), z.year_start,
        z.year_start, cfg.cutoff_year, cfg.rel_eps);
    out.learned_beta = macro_beta(P, out.field);
    out.runtime_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

// --- trained-model bundle (for intervention runs on saved models) ----------

inline nlohmann::json macro_save_bundle(const MacroTrained& m) {
    const Params& P = *m.params;
    nlohmann::json j;
    j["format_version"] = 1;
    j["countries"] = m.countries;
    j["years"] = {m.year_start, m.cutoff_year, m.year_end};
    j["net_x"] = mlp_to_json(P, m.field.net_x);
    j["net_y"] = mlp_to_json(P, m.field.net_y);
    j["film_x"] = film_to_json(P, m.field.film_x);
    j["film_y"] = film_to_json(P, m.field.film_y);
    j["embeddings"] = tensor_to_json(P.value(m.field.emb.handle));
    j["A"] = tensor_to_json(P.value(m.field.A));
    j["raw_beta"] = tensor_to_json(P.value(m.field.raw_beta));
    j["use_row_gates"] = m.field.use_row_gates;
    if (m.field.use_row_gates) j["row_gate"] = tensor_to_json(P.value(m.field.row_gate));
    j["eps"] = m.field.eps;
    j["stats"] = {{"cutoff_year", m.stats.cutoff_year}, {"mean", m.stats.mean}, {"scale", m.stats.scale}};
    for (const Tensor& s : m.truth_states) j["truth_states"].push_back(tensor_to_json(s));
    return j;
}

inline MacroTrained macro_load_bundle(const nlohmann::json& j) {
    MacroTrained m;
    m.params = std::make_unique<Params>();
    Params& P = *m.params;
    m.countries = j.at("countries").get<std::vector<std::string>>();
    m.year_start = j.at("years")[0].get<int>();
    m.cutoff_year = j.at("years")[1].get<int>();
    m.year_end = j.at("years")[2].get<int>();
    MacroField& f = m.field;
    f.P = &P;
    f.n = static_cast<int>(m.countries.size());
    f.net_x = mlp_from_json(P, j.at("net_x"));
    f.net_y = mlp_from_json(P, j.at("net_y"));
    f.film_x = film_from_json(P, j.at("film_x"));
    f.film_y = film_from_json(P, j.at("film_y"));
    Tensor emb = tensor_from_json(j.at("embeddings"));
    f.emb = Embeddings{emb.rows, emb.cols, P.create(std::move(emb))};
    f.A = P.create(tensor_from_json(j.at("A")));
    f.raw_beta = P.create(tensor_from_json(j.at("raw_beta")));
    f.use_row_gates = j.value("use_row_gates", false);
    if (f.use_row_gates) f.row_gate = P.create(tensor_from_json(j.at("row_gate")));
    f.eps = j.value("eps", 1e-9);
    m.stats.cutoff_year = j.at("stats").at("cutoff_year").get<int>();
    m.stats.mean = j.at("stats").at("mean").get<std::vector<std::vector<double>>>();
    m.stats.scale = j.at("stats").at("scale").get<std::vector<std::vector<double>>>();
    for (const auto& s : j.at("truth_states")) m.truth_states.push_back(tensor_from_json(s));
    m.learned_beta = macro_beta(P, f);
    return m;
}

// Baseline forecast vs counterfactual rollout from a given year's true
// state, horizon in years.
struct InterventionRun {
    Trajectory baseline;
    Trajectory edited;
    int from_year = 0;
};

inline InterventionRun run_intervention(MacroTrained& model, const std::vector<InterventionEdit>& edits,
                                        int from_year, int horizon_years, double dt = 1.0) {
    if (from_year < model.year_start || from_year > model.year_end)
        throw ShapeError("intervention: from_year outside panel");
    InterventionRun out;
    out.from_year = from_year;
    const Tensor& w0 = model.truth_states[from_year - model.year_start];
    model.field.interaction_scale = 1.0;
    MacroField edited = apply_intervention(*model.params, model.field, edits);
    RolloutConfig cfg{dt, static_cast<double>(horizon_years)};
    out.baseline = rollout_nograd(model.field, w0, cfg);
    out.edited = rollout_nograd(edited, w0, cfg);
    return out;
}

}  // namespace abmnn
