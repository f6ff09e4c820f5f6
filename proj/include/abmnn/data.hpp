#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "abmnn/core.hpp"

namespace abmnn {

// Indicator order is fixed: gdp first, the six latent macro channels, then
// the exogenous oil index.
inline const std::vector<std::string>& macro_indicators() {
    static const std::vector<std::string> names = {
        "gdp",          "unemployment",      "lending_rate", "debt_pct_gdp",
        "working_age_share", "cpi_inflation", "current_account_pct", "oil_index"};
    return names;
}

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

// Country x year x indicator panel with explicit missing markers.
struct MacroPanel {
    std::vector<std::string> countries;  // ISO-3 codes
    int year_start = 0;
    int year_end = 0;  // inclusive
    // values[country][indicator][year - year_start]
    std::vector<std::vector<std::vector<double>>> values;

    int n_countries() const { return static_cast<int>(countries.size()); }
    int n_years() const { return year_end - year_start + 1; }

    double at(int c, int ind, int year) const { return values[c][ind][year - year_start]; }
    double& at(int c, int ind, int year) { return values[c][ind][year - year_start]; }

    int indicator_index(const std::string& name) const {
        const auto& names = macro_indicators();
        for (size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return static_cast<int>(k);
        throw IoError("unknown indicator: " + name);
    }

    int country_index(const std::string& iso3) const {
        for (size_t k = 0; k < countries.size(); ++k)
            if (countries[k] == iso3) return static_cast<int>(k);
        throw IoError("unknown country: " + iso3);
    }
};

// Snapshot CSV schema: header `country,year,indicator,value`, empty value
// means missing. The panel invariants (contiguous years, GDP observed at
// the first year of every country) are enforced here.
inline MacroPanel load_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_snapshot: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw IoError("load_snapshot: empty file");
    if (header != "country,year,indicator,value")
        throw IoError("load_snapshot: bad header (want country,year,indicator,value): " + header);

    struct Cell {
        std::string country;
        int year;
        int ind;
        double value;
    };
    std::vector<Cell> cells;
    std::vector<std::string> countries;
    int y_min = std::numeric_limits<int>::max(), y_max = std::numeric_limits<int>::min();
    const auto& names = macro_indicators();
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string country, year_s, indicator, value_s;
        std::getline(row, country, ',');
        std::getline(row, year_s, ',');
        std::getline(row, indicator, ',');
        std::getline(row, value_s);
        int ind = -1;
        for (size_t k = 0; k < names.size(); ++k)
            if (names[k] == indicator) ind = static_cast<int>(k);
        if (ind < 0)
            throw IoError("load_snapshot: unknown indicator column '" + indicator + "' at line " +
                          std::to_string(line_no));
        int year = 0;
        double value = kMissing;
        try {
            year = std::stoi(year_s);
            if (!value_s.empty()) {
                size_t used = 0;
                value = std::stod(value_s, &used);
                if (used != value_s.size()) throw std::invalid_argument(value_s);
            }
        } catch (const std::exception&) {
            throw IoError("load_snapshot: non-numeric cell at line " + std::to_string(line_no) + ": " + line);
        }
        if (std::find(countries.begin(), countries.end(), country) == countries.end())
            countries.push_back(country);
        y_min = std::min(y_min, year);
        y_max = std::max(y_max, year);
        cells.push_back({country, year, ind, value});
    }
    if (cells.empty()) throw IoError("load_snapshot: no data rows");

    MacroPanel p;
    p.countries = countries;
    p.year_start = y_min;
    p.year_end = y_max;
    p.values.assign(countries.size(),
                    std::vector<std::vector<double>>(names.size(), std::vector<double>(p.n_years(), kMissing)));
    for (const Cell& c : cells) p.at(p.country_index(c.country), c.ind, c.year) = c.value;

    for (int c = 0; c < p.n_countries(); ++c)
        if (is_missing(p.at(c, 0, p.year_start)))
            throw IoError("load_snapshot: gdp missing at anchor year " + std::to_string(p.year_start) +
                          " for " + p.countries[c]);
    return p;
}

inline void save_snapshot(const MacroPanel& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_snapshot: cannot open " + path);
    out << "country,year,indicator,value\n";
    char buf[64];
    const auto& names = macro_indicators();
    for (int c = 0; c < p.n_countries(); ++c)
        for (int y = p.year_start; y <= p.year_end; ++y)
            for (size_t ind = 0; ind < names.size(); ++ind) {
                const double v = p.at(c, static_cast<int>(ind), y);
                if (is_missing(v)) {
                    out << p.countries[c] << "," << y << "," << names[ind] << ",\n";
                } else {
                    std::snprintf(buf, sizeof(buf), "%.17g", v);
                    out << p.countries[c] << "," << y << "," << names[ind] << "," << buf << "\n";
                }
            }
}

// --- causal Kalman imputation ----------------------------------------------

// Constant-velocity filter (state: level, trend). Strictly causal: the
// filter sweeps forward once and each missing cell takes the one-step-ahead
// prediction from past observations only. Observed cells pass through
// untouched.
struct KalmanConfig {
    double process_level = 1e-3;
    double process_trend = 1e-4;
    double measurement = 1e-2;
    // per-indicator overrides (by indicator name)
    std::map<std::string, std::array<double, 3>> overrides;

    std::array<double, 3> for_indicator(const std::string& name) const {
        auto it = overrides.find(name);
        if (it != overrides.end()) return it->second;
        return {process_level, process_trend, measurement};
    }
};

inline std::vector<double> kalman_impute_series(const std::vector<double>& series, double q_level,
                                                double q_trend, double r) {
    if (q_level <= 0.0 || q_trend <= 0.0 || r <= 0.0)
        throw ShapeError("kalman: noise values must be > 0");
    bool any = false;
    for (double v : series) any = any || !is_missing(v);
    if (!any) throw ShapeError("kalman: fully-missing series");

    std::vector<double> out = series;
    // state (level, trend) and covariance; diffuse start at zero
    double l = 0.0, tr = 0.0;
    double p00 = 1e12, p01 = 0.0, p11 = 1e12;
    for (size_t t = 0; t < series.size(); ++t) {
        // predict
        const double lp = l + tr;
        const double trp = tr;
        const double q00 = p00 + p01 + p01 + p11 + q_level;
        const double q01 = p01 + p11;
        const double q11 = p11 + q_trend;
        if (is_missing(series[t])) {
            out[t] = lp;  // one-step-ahead prediction
            l = lp;
            tr = trp;
            p00 = q00;
            p01 = q01;
            p11 = q11;
        } else {
            const double s = q00 + r;
            const double k0 = q00 / s;
            const double k1 = q01 / s;
            const double innov = series[t] - lp;
            l = lp + k0 * innov;
            tr = trp + k1 * innov;
            p00 = (1.0 - k0) * q00;
            p01 = (1.0 - k0) * q01;
            p11 = q11 - k1 * q01;
        }
    }
    return out;
}

inline MacroPanel kalman_impute(const MacroPanel& panel, const KalmanConfig& cfg = {}) {
    MacroPanel out = panel;
    const auto& names = macro_indicators();
    for (int c = 0; c < panel.n_countries(); ++c)
        for (size_t ind = 0; ind < names.size(); ++ind) {
            const auto noise = cfg.for_indicator(names[ind]);
            out.values[c][ind] = kalman_impute_series(panel.values[c][ind], noise[0], noise[1], noise[2]);
        }
    return out;
}

// --- standardization ----------------------------------------------------------

// GDP is divided by its first-year value per country (the normalized state
// the dynamics evolve); every other channel is z-scored per country with
// statistics from training years only (<= cutoff). Zero-variance series are
// centered with scale 1.
struct StandardizeStats {
    int cutoff_year = 0;
    std::vector<std::vector<double>> mean;   // [country][indicator]
    std::vector<std::vector<double>> scale;  // [country][indicator]
    std::vector<std::string> warnings;

    double to_model(int c, int ind, double raw) const { return (raw - mean[c][ind]) / scale[c][ind]; }
    double to_raw(int c, int ind, double model) const { return model * scale[c][ind] + mean[c][ind]; }
};

inline MacroPanel standardize(const MacroPanel& imputed, int cutoff_year, StandardizeStats& stats) {
    if (cutoff_year < imputed.year_start || cutoff_year > imputed.year_end)
        throw ShapeError("standardize: cutoff outside panel years");
    const auto& names = macro_indicators();
    MacroPanel out = imputed;
    stats.cutoff_year = cutoff_year;
    stats.mean.assign(imputed.n_countries(), std::vector<double>(names.size(), 0.0));
    stats.scale.assign(imputed.n_countries(), std::vector<double>(names.size(), 1.0));
    const int n_train = cutoff_year - imputed.year_start + 1;
    for (int c = 0; c < imputed.n_countries(); ++c) {
        for (size_t ind = 0; ind < names.size(); ++ind) {
            if (names[ind] == "gdp") {
                const double anchor = imputed.at(c, static_cast<int>(ind), imputed.year_start);
                if (is_missing(anchor) || anchor == 0.0)
                    throw ShapeError("standardize: gdp anchor missing or zero for " + imputed.countries[c]);
                stats.mean[c][ind] = 0.0;
                stats.scale[c][ind] = anchor;
            } else {
                double m = 0.0;
                for (int y = imputed.year_start; y <= cutoff_year; ++y)
                    m += imputed.at(c, static_cast<int>(ind), y);
                m /= n_train;
                double var = 0.0;
                for (int y = imputed.year_start; y <= cutoff_year; ++y) {
                    const double d = imputed.at(c, static_cast<int>(ind), y) - m;
                    var += d * d;
                }
                var /= n_train;
                double sd = std::sqrt(var);
                if (sd == 0.0) {
                    sd = 1.0;
                    stats.warnings.push_back("zero variance: " + imputed.countries[c] + "/" + names[ind]);
                }
                stats.mean[c][ind] = m;
                stats.scale[c][ind] = sd;
            }
            for (int y = imputed.year_start; y <= imputed.year_end; ++y)
                out.at(c, static_cast<int>(ind), y) =
                    stats.to_model(c, static_cast<int>(ind), imputed.at(c, static_cast<int>(ind), y));
        }
    }
    return out;
}

// --- World Bank page parsing ---------------------------------------------------

struct WbObservation {
    std::string iso3;
    int year = 0;
    double value = kMissing;
};

struct WbPage {
    int page = 0;
    int pages = 0;
    std::vector<WbObservation> rows;
};

// One page of the World Bank v2 JSON API: [meta, [observations...]].
inline WbPage parse_worldbank_page(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const std::exception& e) {
        throw IoError(std::string("worldbank: malformed response: ") + e.what());
    }
    if (!j.is_array() || j.size() < 2 || !j[0].is_object() || !j[1].is_array())
        throw IoError("worldbank: unexpected payload shape");
    WbPage page;
    page.page = j[0].value("page", 0);
    page.pages = j[0].value("pages", 0);
    for (const auto& row : j[1]) {
        WbObservation obs;
        obs.iso3 = row.value("countryiso3code", "");
        try {
            obs.year = std::stoi(row.at("date").get<std::string>());
        } catch (const std::exception&) {
            throw IoError("worldbank: non-numeric date in row");
        }
        if (row.contains("value") && !row.at("value").is_null()) obs.value = row.at("value").get<double>();
        page.rows.push_back(obs);
    }
    return page;
}

// World Bank indicator codes behind each panel column (recorded in snapshot
// metadata; the oil index comes from FRED instead).
inline const std::map<std::string, std::string>& worldbank_codes() {
    static const std::map<std::string, std::string> codes = {
        {"gdp", "NY.GDP.MKTP.CD"},
        {"unemployment", "SL.UEM.TOTL.ZS"},
        {"lending_rate", "FR.INR.LEND"},
        {"debt_pct_gdp", "GC.DOD.TOTL.GD.ZS"},
        {"working_age_share", "SP.POP.1564.TO.ZS"},
        {"cpi_inflation", "FP.CPI.TOTL.ZG"},
        {"current_account_pct", "BN.CAB.XOKA.GD.ZS"},
    };
    return codes;
}

}  // namespace abmnn
