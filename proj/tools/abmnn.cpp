// abmnn command-line interface: data generation, training, evaluation,
// intervention rollouts, and result emission for the three case studies.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"

#include "abmnn/baselines.hpp"
#include "abmnn/data.hpp"
#include "abmnn/data_fetch.hpp"
#include "abmnn/io.hpp"
#include "abmnn/metrics.hpp"
#include "abmnn/train_glv.hpp"
#include "abmnn/train_macro.hpp"
#include "abmnn/train_sir.hpp"

using namespace abmnn;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_dir;
    bool offline = false;
};

std::string default_out_dir(const std::string& subcommand, std::uint64_t seed, const std::string& hash) {
    const char* root = std::getenv("ABMNN_OUT_ROOT");
    std::string base = root ? root : "runs";
    return base + "/" + subcommand + "-" + std::to_string(seed) + "-" + hash.substr(0, 8);
}

json load_config_or_empty(const std::string& path) {
    if (path.empty()) return json::object();
    return load_json(path);
}

// json helpers: overlay config values onto defaults
template <typename T>
void get_to_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

Schedule schedule_from_json(const json& j, Schedule fallback) {
    Schedule s = fallback;
    if (j.contains("schedule")) {
        const json& sj = j.at("schedule");
        std::string kind = sj.value("kind", "constant");
        s.kind = kind == "cyclical"     ? Schedule::Cyclical
                 : kind == "triangular" ? Schedule::Triangular
                                        : Schedule::Constant;
        get_to_if(sj, "max_lr", s.max_lr);
        get_to_if(sj, "step", s.step);
    }
    return s;
}

void curriculum_from_json(const json& j, Curriculum& c) {
    if (!j.contains("curriculum")) return;
    const json& cj = j.at("curriculum");
    get_to_if(cj, "t_base", c.t_base);
    get_to_if(cj, "increment", c.increment);
    get_to_if(cj, "epochs_per_increment", c.epochs_per_increment);
    get_to_if(cj, "t_cap", c.t_cap);
    get_to_if(cj, "stagnation", c.stagnation);
}

SirRunConfig sir_config_from_json(const json& j, std::uint64_t seed) {
    SirRunConfig cfg;
    cfg.graph_seed = mix_seed(seed, 1);
    cfg.init_seed = mix_seed(seed, 2);
    cfg.net_seed = mix_seed(seed, 3);
    cfg.noise_seed = mix_seed(seed, 4);
    get_to_if(j, "n", cfg.n);
    get_to_if(j, "p_edge", cfg.p_edge);
    get_to_if(j, "beta", cfg.beta);
    get_to_if(j, "gamma", cfg.gamma);
    get_to_if(j, "init_infected", cfg.init_infected);
    get_to_if(j, "dt", cfg.dt);
    get_to_if(j, "t_max", cfg.t_max);
    get_to_if(j, "epochs", cfg.epochs);
    get_to_if(j, "lr", cfg.lr);
    get_to_if(j, "clip", cfg.clip);
    get_to_if(j, "hidden", cfg.hidden);
    get_to_if(j, "hidden_layers", cfg.hidden_layers);
    cfg.schedule = schedule_from_json(j, cfg.schedule);
    curriculum_from_json(j, cfg.curriculum);
    if (j.contains("regs")) {
        const json& rj = j.at("regs");
        get_to_if(rj, "lambda_axis", cfg.regs.lambda_axis);
        get_to_if(rj, "lambda_origin", cfg.regs.lambda_origin);
        get_to_if(rj, "warmup_epochs", cfg.regs.warmup_epochs);
        get_to_if(rj, "axis_samples", cfg.regs.axis_samples);
    }
    if (j.contains("noise")) {
        const json& nj = j.at("noise");
        get_to_if(nj, "sigma", cfg.noise_sigma);
        get_to_if(nj, "from_t", cfg.noise_from_t);
    }
    return cfg;
}

json sir_config_to_json(const SirRunConfig& c) {
    return json{{"n", c.n},
                {"p_edge", c.p_edge},
                {"beta", c.beta},
                {"gamma", c.gamma},
                {"init_infected", c.init_infected},
                {"dt", c.dt},
                {"t_max", c.t_max},
                {"epochs", c.epochs},
                {"lr", c.lr},
                {"clip", c.clip},
                {"hidden", c.hidden},
                {"hidden_layers", c.hidden_layers},
                {"noise", {{"sigma", c.noise_sigma}, {"from_t", c.noise_from_t}}},
                {"curriculum",
                 {{"t_base", c.curriculum.t_base},
                  {"increment", c.curriculum.increment},
                  {"epochs_per_increment", c.curriculum.epochs_per_increment},
                  {"t_cap", c.curriculum.t_cap}}}};
}

// aggregate CSV with an extra mask_active column (intervention markers)
void export_aggregate_with_mask(const Trajectory& tr, const LinkMask* mask, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out << "time,compartment,sum,mask_active\n";
    char buf[96];
    for (size_t k = 0; k < tr.times.size(); ++k) {
        const Tensor& s = tr.states[k];
        const int active = mask && tr.times[k] >= mask->t_start && tr.times[k] < mask->t_end ? 1 : 0;
        for (int c = 0; c < s.cols; ++c) {
            double total = 0.0;
            for (int node = 0; node < s.rows; ++node) total += s(node, c);
            std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g,%d\n", tr.times[k], c, total, active);
            out << buf;
        }
    }
}

json run_glv_train(const json& cfg_json, CommonArgs& args, std::vector<std::string>& outputs,
                   const std::string& out) {
    GlvRunConfig cfg;
    cfg.seed = args.seed;
    get_to_if(cfg_json, "dt", cfg.dt);
    get_to_if(cfg_json, "t_train", cfg.t_train);
    get_to_if(cfg_json, "t_eval", cfg.t_eval);
    get_to_if(cfg_json, "epochs", cfg.epochs);
    get_to_if(cfg_json, "base_lr", cfg.base_lr);
    get_to_if(cfg_json, "weight_decay", cfg.weight_decay);
    get_to_if(cfg_json, "clip", cfg.clip);
    cfg.schedule = schedule_from_json(cfg_json, cfg.schedule);
    curriculum_from_json(cfg_json, cfg.curriculum);
    if (cfg_json.contains("r_truth")) cfg.system.r_truth = cfg_json.at("r_truth").get<std::vector<double>>();
    if (cfg_json.contains("x0")) cfg.system.x0 = cfg_json.at("x0").get<std::vector<double>>();
    if (cfg_json.contains("s_block")) cfg.system.s_block = cfg_json.at("s_block").get<std::vector<double>>();

    GlvRunResult r = run_case1(cfg);
    export_trajectory_csv(r.truth_eval, out + "/truth.csv");
    export_trajectory_csv(r.learned_eval, out + "/learned.csv");
    write_json(json{{"format_version", 1}, {"r", r.r_learned}}, out + "/params.json");
    outputs = {"truth.csv", "learned.csv", "params.json"};
    return json{{"r_truth", r.r_truth},
                {"r_learned", r.r_learned},
                {"recovery_error", r.recovery},
                {"full_window_loss_initial", r.full_window_loss_initial},
                {"full_window_loss_final", r.full_window_loss_final},
                {"final_epoch_loss", r.loss_curve.back()},
                {"skipped_steps", r.skipped_steps},
                {"t_train", cfg.t_train},
                {"t_eval", cfg.t_eval}};
}

json run_sir_train(const json& cfg_json, CommonArgs& args, std::vector<std::string>& outputs,
                   const std::string& out, bool noise_defaults) {
    SirRunConfig cfg = sir_config_from_json(cfg_json, args.seed);
    if (noise_defaults) {
        if (!cfg_json.contains("noise")) cfg.noise_sigma = 1.0;
        if (!cfg_json.contains("schedule")) cfg.schedule = Schedule{Schedule::Triangular, 5e-4, 100};
    }
    SirTrained tr = run_case2(cfg);
    SirAbmField field = sir_abm_field(*tr.params, tr.nets, tr.graph);
    Trajectory pred = rollout_nograd(field, tr.truth.states.front(), {cfg.dt, cfg.t_max});

    save_graph(tr.graph, out + "/graph.json");
    export_aggregate_csv(tr.truth, out + "/truth_aggregate.csv");
    export_aggregate_csv(pred, out + "/pred_aggregate.csv");
    write_json(sir_save_nets(*tr.params, tr.nets), out + "/params.json");
    outputs = {"graph.json", "truth_aggregate.csv", "pred_aggregate.csv", "params.json"};

    json result{{"final_data_loss", tr.loss_curve.back()},
                {"initial_data_loss", tr.loss_curve.front()},
                {"in_sample_l1_path", path_loss_value(pred, tr.truth, {1, true})},
                {"conservation_max_dev", conservation_check(pred)},
                {"skipped_steps", tr.skipped_steps},
                {"params_path", "params.json"}};
    if (cfg.noise_sigma > 0.0) {
        // distances to the clean truth over the training window
        Trajectory noisy_obs = tr.truth;  // same grid; compare aggregates directly
        double noisy_l1 = 0.0, model_l1 = 0.0;
        Tensor clean = tr.agg_clean, noisy = tr.agg_supervised, pa = aggregate_series(pred);
        for (int k = 1; k < clean.rows; ++k)
            for (int c = 0; c < clean.cols; ++c) {
                noisy_l1 += cfg.dt * std::abs(noisy(k, c) - clean(k, c));
                model_l1 += cfg.dt * std::abs(pa(k, c) - clean(k, c));
            }
        std::ofstream noisy_csv(out + "/noisy_observations.csv");
        noisy_csv << "time,compartment,sum\n";
        char buf[96];
        for (size_t k = 0; k < tr.truth.times.size(); ++k)
            for (int c = 0; c < noisy.cols; ++c) {
                std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g\n", tr.truth.times[k], c,
                              noisy(static_cast<int>(k), c));
                noisy_csv << buf;
            }
        outputs.push_back("noisy_observations.csv");
        result["noise_sigma"] = cfg.noise_sigma;
        result["noisy_to_clean_l1"] = noisy_l1;
        result["model_to_clean_l1"] = model_l1;
    }
    return result;
}

json run_sir_eval_oos(const json& cfg_json, CommonArgs& args, std::vector<std::string>& outputs,
                      const std::string& out) {
    const std::string model_path = cfg_json.at("model").get<std::string>();
    Params P;
    SirNets nets = sir_load_nets(P, load_json(model_path));

    const int n = cfg_json.value("n", 150);
    const double p_edge = cfg_json.value("p_edge", 0.05);
    const double beta = cfg_json.value("beta", 0.4);
    const double gamma = cfg_json.value("gamma", 0.2);
    const double t_max = cfg_json.value("t_max", 30.0);
    const double dt = cfg_json.value("dt", 0.1);
    int init_infected = cfg_json.value("init_infected", 0);
    if (init_infected == 0)
        init_infected = std::max(1, static_cast<int>(std::lround(cfg_json.value("i0_frac", 0.1) * n)));

    std::optional<LinkMask> mask;
    if (cfg_json.contains("mask")) {
        const json& mj = cfg_json.at("mask");
        mask = LinkMask{mj.value("t_start", 1.5), mj.value("t_end", 10.0), mj.value("fraction", 0.9),
                        mix_seed(args.seed, 9)};
    }
    SirOosResult r = evaluate_sir_oos(abm_predictor(P, nets), n, p_edge, mix_seed(args.seed, 5), beta,
                                      gamma, init_infected, mix_seed(args.seed, 6), {dt, t_max},
                                      mask ? &*mask : nullptr);
    export_aggregate_with_mask(r.truth, mask ? &*mask : nullptr, out + "/truth_aggregate.csv");
    export_aggregate_with_mask(r.pred, mask ? &*mask : nullptr, out + "/pred_aggregate.csv");
    export_trajectory_csv(r.pred, out + "/pred_nodes.csv");
    outputs = {"truth_aggregate.csv", "pred_aggregate.csv", "pred_nodes.csv"};
    json result{{"mape", r.mape}, {"mape_skipped_points", r.mape_skipped}, {"n", n},
                {"init_infected", init_infected}};
    if (mask)
        result["mask"] = {{"t_start", mask->t_start}, {"t_end", mask->t_end}, {"fraction", mask->fraction}};
    return result;
}

json run_sir_functional(const json& cfg_json, CommonArgs& args, std::vector<std::string>& outputs,
                        const std::string& out) {
    SirFunctionalConfig cfg;
    cfg.base = sir_config_from_json(cfg_json, args.seed);
    get_to_if(cfg_json, "epochs", cfg.epochs);
    get_to_if(cfg_json, "lr_nets", cfg.lr_nets);
    get_to_if(cfg_json, "lr_coeffs", cfg.lr_coeffs);
    get_to_if(cfg_json, "lambda_conservation", cfg.lambda_conservation);
    curriculum_from_json(cfg_json, cfg.curriculum);

    SirFunctionalField field;
    SirFunctionalTrained tr = run_case2_functional(cfg, &field);
    Trajectory pred = rollout_nograd(field, tr.truth.states.front(), {cfg.base.dt, cfg.base.t_max});
    const double cons = conservation_path_integral(field, pred);

    export_aggregate_csv(tr.truth, out + "/truth_aggregate.csv");
    export_aggregate_csv(pred, out + "/pred_aggregate.csv");
    write_json(json{{"format_version", 1},
                    {"nets", sir_save_nets(*tr.params, tr.nets)},
                    {"c_f", tr.c_f.data},
                    {"c_g", tr.c_g.data},
                    {"c_h", tr.c_h.data}},
               out + "/params.json");
    outputs = {"truth_aggregate.csv", "pred_aggregate.csv", "params.json"};
    return json{{"c_f", tr.c_f.data},
                {"c_g", tr.c_g.data},
                {"c_h", tr.c_h.data},
                {"conservation_path_integral", cons},
                {"final_data_loss", tr.loss_curve.back()},
                {"aggregate_l1_path", path_loss_value(pred, tr.truth, {1, true})}};
}

json run_baseline_grid(const json& cfg_json, CommonArgs& args, std::vector<std::string>& outputs,
                       const std::string& out) {
    SirRunConfig train_cfg = sir_config_from_json(cfg_json.value("train", json::object()), args.seed);
    std::vector<int> sizes = {50, 100};
    std::vector<double> i0_fracs = {0.05, 0.10};
    int trials = 3;
    int jobs = 2;
    double eval_t_max = train_cfg.t_max;
    if (cfg_json.contains("grid")) {
        const json& gj = cfg_json.at("grid");
        get_to_if(gj, "sizes", sizes);
        get_to_if(gj, "i0_fracs", i0_fracs);
        get_to_if(gj, "trials", trials);
        get_to_if(gj, "t_max", eval_t_max);
    }
    get_to_if(cfg_json, "jobs", jobs);

    // one training run per architecture on the shared trajectory
    SirTrained abm = run_case2(train_cfg);
    BaselineTrained gcn = run_baseline(train_cfg, BaselineKind::Gcn);
    BaselineTrained sage = run_baseline(train_cfg, BaselineKind::Sage);

    std::vector<std::pair<std::string, SirPredictor>> models = {
        {"abm_nn", abm_predictor(*abm.params, abm.nets)},
        {"gcn", baseline_predictor(gcn.field)},
        {"sage", baseline_predictor(sage.field)},
    };

    struct Cell {
        int n;
        double frac;
        std::map<std::string, double> sums;
    };
    std::vector<Cell> cells;
    for (int n : sizes)
        for (double f : i0_fracs) cells.push_back({n, f, {}});

    // trials within a cell are independent; run them on a small worker pool
    std::vector<std::tuple<int, int, std::string, double>> results;  // cell, trial, model, mape
    std::mutex mu;
    std::atomic<size_t> next{0};
    std::vector<std::tuple<int, int>> tasks;
    for (size_t ci = 0; ci < cells.size(); ++ci)
        for (int t = 0; t < trials; ++t) tasks.emplace_back(static_cast<int>(ci), t);
    auto worker = [&]() {
        while (true) {
            const size_t k = next.fetch_add(1);
            if (k >= tasks.size()) return;
            auto [ci, trial] = tasks[k];
            const Cell& cell = cells[ci];
            const int infected = std::max(1, static_cast<int>(std::lround(cell.frac * cell.n)));
            const std::uint64_t gseed = mix_seed(args.seed, 100 + 17 * ci + trial);
            const std::uint64_t iseed = mix_seed(args.seed, 200 + 17 * ci + trial);
            for (auto& [name, predict] : models) {
                SirOosResult r = evaluate_sir_oos(predict, cell.n, train_cfg.p_edge, gseed,
                                                  train_cfg.beta, train_cfg.gamma, infected, iseed,
                                                  {train_cfg.dt, eval_t_max});
                std::lock_guard<std::mutex> lk(mu);
                results.emplace_back(ci, trial, name, r.mape);
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::max(1, jobs); ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    for (auto& [ci, trial, name, value] : results) cells[ci].sums[name] += value;

    std::vector<GridCell> grid;
    json per_model_means = json::object();
    std::map<std::string, double> model_total;
    for (const Cell& c : cells) {
        GridCell gc;
        gc.n = c.n;
        gc.i0_frac = c.frac;
        for (const auto& [name, total] : c.sums) {
            gc.model_mape[name] = total / trials;
            model_total[name] += total / trials;
        }
        grid.push_back(gc);
    }
    for (const auto& [name, total] : model_total) per_model_means[name] = total / grid.size();
    write_metric_grid(grid, {"abm_nn", "gcn", "sage", "graphgps"}, out + "/grid.csv");
    outputs = {"grid.csv"};
    return json{{"mean_mape", per_model_means},
                {"trials", trials},
                {"note", "graphgps column is n/a: attention baseline not implemented"}};
}

json run_macro_ingest(const json& cfg_json, CommonArgs& args, bool do_fetch,
                      std::vector<std::string>& outputs, const std::string& out) {
    std::string snapshot = cfg_json.value("snapshot", std::string("data/macro_snapshot.csv"));
    MacroPanel raw;
    if (do_fetch) {
        FetchOptions opt;
        opt.countries = cfg_json.value("countries", std::vector<std::string>{"USA", "CHN", "JPN", "DEU",
                                                                             "IND", "GBR", "FRA", "ITA",
                                                                             "BRA", "CAN"});
        opt.year_start = cfg_json.value("year_start", 1995);
        opt.year_end = cfg_json.value("year_end", 2024);
        opt.network_enabled = !args.offline;
        opt.snapshot_path = out + "/fetched_snapshot.csv";
        opt.metadata_path = out + "/fetched_snapshot_meta.json";
        raw = fetch_worldbank(opt);
        outputs.push_back("fetched_snapshot.csv");
        outputs.push_back("fetched_snapshot_meta.json");
    } else {
        raw = load_snapshot(snapshot);
    }
    KalmanConfig kalman;
    MacroPanel imputed = kalman_impute(raw, kalman);
    StandardizeStats stats;
    const int cutoff = cfg_json.value("cutoff_year", 2022);
    MacroPanel z = standardize(imputed, cutoff, stats);
    save_snapshot(imputed, out + "/imputed.csv");
    save_snapshot(z, out + "/standardized.csv");
    write_json(json{{"cutoff_year", stats.cutoff_year},
                    {"mean", stats.mean},
                    {"scale", stats.scale},
                    {"warnings", stats.warnings}},
               out + "/standardize_stats.json");
    outputs.push_back("imputed.csv");
    outputs.push_back("standardized.csv");
    outputs.push_back("standardize_stats.json");
    return json{{"countries", z.countries},
                {"years", {z.year_start, z.year_end}},
                {"cutoff_year", cutoff},
                {"warnings", stats.warnings}};
}

json run_macro_train(const json& cfg_json, CommonArgs& args, std::vector<std::string>& outputs,
                     const std::string& out) {
    MacroRunConfig cfg;
    cfg.seed = args.seed;
    get_to_if(cfg_json, "snapshot", cfg.snapshot_path);
    get_to_if(cfg_json, "cutoff_year", cfg.cutoff_year);
    get_to_if(cfg_json, "pretrain_epochs", cfg.pretrain_epochs);
    get_to_if(cfg_json, "epochs", cfg.epochs);
    get_to_if(cfg_json, "base_lr", cfg.base_lr);
    get_to_if(cfg_json, "weight_decay", cfg.weight_decay);
    get_to_if(cfg_json, "clip", cfg.clip);
    get_to_if(cfg_json, "lambda_A", cfg.lambda_A);
    get_to_if(cfg_json, "d_e", cfg.d_e);
    get_to_if(cfg_json, "hidden", cfg.hidden);
    get_to_if(cfg_json, "row_gates", cfg.row_gates);
    cfg.schedule = schedule_from_json(cfg_json, cfg.schedule);
    curriculum_from_json(cfg_json, cfg.curriculum);

    MacroTrained m = run_case3(cfg);
    write_json(macro_save_bundle(m), out + "/model_bundle.json");
    // learned interaction matrix
    {
        std::ofstream a_csv(out + "/A.csv");
        a_csv << "from_to";
        for (const auto& c : m.countries) a_csv << "," << c;
        a_csv << "\n";
        const Tensor& A = m.params->value(m.field.A);
        char buf[32];
        for (int i = 0; i < A.rows; ++i) {
            a_csv << m.countries[i];
            for (int j = 0; j < A.cols; ++j) {
                std::snprintf(buf, sizeof(buf), ",%.6f", A(i, j));
                a_csv << buf;
            }
            a_csv << "\n";
        }
    }
    m.field.interaction_scale = 1.0;
    Trajectory full = rollout_nograd(m.field, m.truth_states.front(),
                                     {cfg.dt, static_cast<double>(m.year_end - m.year_start)});
    export_trajectory_csv(full, out + "/rollout.csv");
    outputs = {"model_bundle.json", "A.csv", "rollout.csv"};
    return json{{"pretrain_rel_err", m.pretrain_rel_err},
                {"final_rel_err", m.final_rel_err},
                {"learned_beta", m.learned_beta},
                {"final_loss", m.loss_curve.back()},
                {"countries", m.countries},
                {"model_path", "model_bundle.json"}};
}

json run_macro_intervene(const json& cfg_json, CommonArgs& args,
                         const std::vector<std::string>& zero_pairs,
                         std::vector<std::string>& outputs, const std::string& out) {
    const std::string model_path = cfg_json.at("model").get<std::string>();
    MacroTrained m = macro_load_bundle(load_json(model_path));
    const int from_year = cfg_json.value("from_year", 2024);
    const int horizon = cfg_json.value("horizon_years", 4);

    std::vector<InterventionEdit> edits;
    auto add_pair = [&](const std::string& spec) {
        const auto comma = spec.find(',');
        if (comma == std::string::npos) throw IoError("--zero expects FROM,TO country codes: " + spec);
        const int i = m.field.n == 0 ? -1 : [&] {
            for (size_t k = 0; k < m.countries.size(); ++k)
                if (m.countries[k] == spec.substr(0, comma)) return static_cast<int>(k);
            throw IoError("unknown country in --zero: " + spec.substr(0, comma));
        }();
        const std::string to = spec.substr(comma + 1);
        int j = -1;
        for (size_t k = 0; k < m.countries.size(); ++k)
            if (m.countries[k] == to) j = static_cast<int>(k);
        if (j < 0) throw IoError("unknown country in --zero: " + to);
        edits.push_back({i, j, 0.0});
    };
    for (const auto& spec : zero_pairs) add_pair(spec);
    if (cfg_json.contains("edits"))
        for (const auto& e : cfg_json.at("edits"))
            edits.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});

    InterventionRun iv = run_intervention(m, edits, from_year, horizon);
    export_trajectory_csv(iv.baseline, out + "/baseline.csv");
    export_trajectory_csv(iv.edited, out + "/counterfactual.csv");
    outputs = {"baseline.csv", "counterfactual.csv"};

    json deltas = json::object();
    const Tensor& base = iv.baseline.states.back();
    const Tensor& edit = iv.edited.states.back();
    for (int c = 0; c < m.field.n; ++c) deltas[m.countries[c]] = edit(c, 0) - base(c, 0);
    return json{{"from_year", from_year},
                {"horizon_years", horizon},
                {"edits", edits.size()},
                {"final_gdp_delta_model_units", deltas}};
}

json run_export_traj(const json& cfg_json, CommonArgs& args, std::vector<std::string>& outputs,
                     const std::string& out) {
    const std::string kind = cfg_json.at("kind").get<std::string>();
    Trajectory tr;
    std::optional<LinkMask> mask;
    if (kind == "glv") {
        GlvSystem sys = default_glv_system();
        if (cfg_json.contains("r_truth")) sys.r_truth = cfg_json.at("r_truth").get<std::vector<double>>();
        if (cfg_json.contains("x0")) sys.x0 = cfg_json.at("x0").get<std::vector<double>>();
        tr = glv_truth(sys, Tensor::column(sys.x0),
                       {cfg_json.value("dt", 0.1), cfg_json.value("t_max", 250.0),
                        cfg_json.value("record_stride", 1)});
    } else if (kind == "sir") {
        Graph g = erdos_renyi(cfg_json.value("n", 100), cfg_json.value("p_edge", 0.05),
                              mix_seed(args.seed, 1));
        if (cfg_json.contains("mask")) {
            const json& mj = cfg_json.at("mask");
            mask = LinkMask{mj.value("t_start", 1.5), mj.value("t_end", 10.0), mj.value("fraction", 0.9),
                            mix_seed(args.seed, 9)};
        }
        tr = sir_truth(g, cfg_json.value("beta", 0.4), cfg_json.value("gamma", 0.2),
                       cfg_json.value("init_infected", 50), mix_seed(args.seed, 2),
                       {cfg_json.value("dt", 0.1), cfg_json.value("t_max", 30.0),
                        cfg_json.value("record_stride", 1)},
                       mask ? &*mask : nullptr);
    } else {
        throw IoError("export-traj: kind must be glv or sir");
    }
    export_trajectory_csv(tr, out + "/trajectory.csv");
    export_aggregate_csv(tr, out + "/aggregate.csv");
    outputs = {"trajectory.csv", "aggregate.csv"};
    return json{{"kind", kind}, {"points", tr.times.size()}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ABM-informed neural networks: training, evaluation, and interventions"};
    app.require_subcommand(1);

    CommonArgs args;
    std::vector<std::string> zero_pairs;
    bool do_fetch = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "JSON config; defaults reproduce the case studies");
        cmd->add_option("--seed", args.seed, "master seed; all randomness derives from it");
        cmd->add_option("--out", args.out_dir, "output directory (default under $ABMNN_OUT_ROOT or ./runs)");
        cmd->add_flag("--offline", args.offline, "refuse any network access");
    };

    CLI::App* glv = app.add_subcommand("glv-train", "case 1: recover GLV growth rates");
    CLI::App* sir = app.add_subcommand("sir-train", "case 2: train the SIR ABM-NN");
    CLI::App* sir_oos = app.add_subcommand("sir-eval-oos", "case 2: out-of-sample evaluation");
    CLI::App* sir_noise = app.add_subcommand("sir-noise", "case 2: noisy-supervision variant");
    CLI::App* sir_func = app.add_subcommand("sir-functional", "case 2: learned-functional variant");
    CLI::App* grid = app.add_subcommand("baseline-grid", "case 2: ABM-NN vs GCN/SAGE comparison grid");
    CLI::App* ingest = app.add_subcommand("macro-ingest", "case 3: load/impute/standardize the panel");
    CLI::App* mtrain = app.add_subcommand("macro-train", "case 3: train coupled GDP dynamics");
    CLI::App* mint = app.add_subcommand("macro-intervene", "case 3: counterfactual coupling edits");
    CLI::App* exp = app.add_subcommand("export-traj", "write ground-truth trajectories as CSV");
    for (CLI::App* cmd : {glv, sir, sir_oos, sir_noise, sir_func, grid, ingest, mtrain, mint, exp})
        add_common(cmd);
    ingest->add_flag("--fetch", do_fetch, "fetch fresh data from the World Bank API");
    mint->add_option("--zero", zero_pairs, "bilateral channel to zero, e.g. --zero USA,CHN")
        ->take_all();

    CLI11_PARSE(app, argc, argv);

    CLI::App* active = app.get_subcommands().front();
    const std::string name = active->get_name();
    const auto t0 = std::chrono::steady_clock::now();

    json cfg_json;
    RunManifest manifest;
    try {
        cfg_json = load_config_or_empty(args.config_path);
        json hashed = cfg_json;
        hashed["__seed"] = args.seed;
        hashed["__subcommand"] = name;
        const std::string out =
            args.out_dir.empty() ? default_out_dir(name, args.seed, config_hash(hashed)) : args.out_dir;
        manifest = open_manifest(name, args.config_path, args.seed, out, hashed);

        std::vector<std::string> outputs;
        json result;
        if (name == "glv-train") result = run_glv_train(cfg_json, args, outputs, out);
        else if (name == "sir-train") result = run_sir_train(cfg_json, args, outputs, out, false);
        else if (name == "sir-noise") result = run_sir_train(cfg_json, args, outputs, out, true);
        else if (name == "sir-eval-oos") result = run_sir_eval_oos(cfg_json, args, outputs, out);
        else if (name == "sir-functional") result = run_sir_functional(cfg_json, args, outputs, out);
        else if (name == "baseline-grid") result = run_baseline_grid(cfg_json, args, outputs, out);
        else if (name == "macro-ingest") result = run_macro_ingest(cfg_json, args, do_fetch, outputs, out);
        else if (name == "macro-train") result = run_macro_train(cfg_json, args, outputs, out);
        else if (name == "macro-intervene")
            result = run_macro_intervene(cfg_json, args, zero_pairs, outputs, out);
        else if (name == "export-traj") result = run_export_traj(cfg_json, args, outputs, out);

        result["config_hash"] = manifest.hash;
        result["seed"] = args.seed;
        result["manifest"] = "manifest.json";
        result["outputs"] = outputs;
        write_json(result, out + "/result.json");
        close_manifest(manifest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        std::cout << out << "\n";
        return 0;
    } catch (const std::exception& e) {
        if (!manifest.out_dir.empty()) manifest.write();  // stays status=failed
        json err{{"error", e.what()}, {"subcommand", name}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
