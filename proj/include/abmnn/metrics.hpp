#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "abmnn/core.hpp"
#include "abmnn/ode.hpp"

namespace abmnn {

struct MapeResult {
    double value = 0.0;  // percent
    int skipped = 0;     // points with |truth| < 1e-9
};

// 100 * mean(|pred-truth| / |truth|); near-zero truth entries are skipped
// and counted.
inline MapeResult mape(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size()) throw ShapeError("mape: length mismatch");
    double acc = 0.0;
    int used = 0, skipped = 0;
    for (size_t k = 0; k < pred.size(); ++k) {
        if (std::abs(truth[k]) < 1e-9) {
            ++skipped;
            continue;
        }
        acc += std::abs(pred[k] - truth[k]) / std::abs(truth[k]);
        ++used;
    }
    if (used == 0) throw ShapeError("mape: every point was skipped");
    return {100.0 * acc / used, skipped};
}

// MAPE over the aggregate compartment curves of two aligned trajectories.
inline MapeResult mape_aggregate(const Trajectory& pred, const Trajectory& truth) {
    Tensor pa = aggregate_series(pred), ta = aggregate_series(truth);
    if (!pa.same_shape(ta)) throw ShapeError("mape: trajectory grids differ");
    return mape(pa.data, ta.data);
}

// Max over nodes and times of |sum_c state_c(t) - sum_c state_c(0)|.
inline double conservation_check(const Trajectory& tr) {
    if (tr.states.empty() || tr.states[0].cols < 2)
        throw ShapeError("conservation_check: need at least 2 compartments");
    const Tensor& w0 = tr.states.front();
    std::vector<double> base(w0.rows, 0.0);
    for (int i = 0; i < w0.rows; ++i)
        for (int c = 0; c < w0.cols; ++c) base[i] += w0(i, c);
    double worst = 0.0;
    for (const Tensor& s : tr.states)
        for (int i = 0; i < s.rows; ++i) {
            double total = 0.0;
            for (int c = 0; c < s.cols; ++c) total += s(i, c);
            worst = std::max(worst, std::abs(total - base[i]));
        }
    return worst;
}

// Per-entry relative recovery error |r_hat - r| / |r|.
inline std::vector<double> recovery_error(const std::vector<double>& learned,
                                          const std::vector<double>& truth) {
    if (learned.size() != truth.size()) throw ShapeError("recovery_error: length mismatch");
    std::vector<double> out(truth.size());
    for (size_t k = 0; k < truth.size(); ++k) {
        if (truth[k] == 0.0) throw ShapeError("recovery_error: zero truth entry");
        out[k] = std::abs(learned[k] - truth[k]) / std::abs(truth[k]);
    }
    return out;
}

struct MetricReport {
    double mape = 0.0;
    int mape_skipped = 0;
    double l1_path = 0.0;
    double conservation_max_dev = 0.0;
    std::vector<double> recovery;
    double runtime_sec = 0.0;
};

// Comparison-grid cell keyed by (graph size, initial infected fraction).
struct GridCell {
    int n = 0;
    double i0_frac = 0.0;
    std::map<std::string, double> model_mape;  // model name -> mean MAPE
};

// CSV mirror of the out-of-sample comparison table: one row per (N, I0),
// one column per model. Models without an implementation carry "n/a".
inline void write_metric_grid(const std::vector<GridCell>& cells,
                              const std::vector<std::string>& model_columns,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_metric_grid: cannot open " + path);
    out << "n,i0_pct";
    for (const auto& m : model_columns) out << "," << m;
    out << "\n";
    char buf[64];
    for (const auto& cell : cells) {
        std::snprintf(buf, sizeof(buf), "%d,%g", cell.n, 100.0 * cell.i0_frac);
        out << buf;
        for (const auto& m : model_columns) {
            auto it = cell.model_mape.find(m);
            if (it == cell.model_mape.end()) {
                out << ",n/a";
            } else {
                std::snprintf(buf, sizeof(buf), ",%.4f", it->second);
                out << buf;
            }
        }
        out << "\n";
    }
}

}  // namespace abmnn
