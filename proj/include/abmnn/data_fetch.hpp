#pragma once

// One-shot World Bank fetch (snapshot-first pipeline: tests never touch the
// network; this exists to refresh the bundled snapshot). Kept out of
// data.hpp so only the CLI pays for the HTTP client.

#include <ctime>
#include <map>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "abmnn/data.hpp"

namespace abmnn {

struct FetchOptions {
    std::vector<std::string> countries;  // ISO-3
    int year_start = 1995;
    int year_end = 2024;
    bool network_enabled = false;  // must be set explicitly (--fetch without --offline)
    std::string snapshot_path;
    std::string metadata_path;
};

inline std::string join_countries(const std::vector<std::string>& cs) {
    std::string s;
    for (size_t k = 0; k < cs.size(); ++k) {
        if (k) s += ";";
        s += cs[k];
    }
    return s;
}

// Pages through one indicator for all countries; throws IoError with the
// offending page index on malformed payloads.
inline void fetch_indicator(httplib::Client& client, const FetchOptions& opt, const std::string& code,
                            int indicator_index, MacroPanel& panel) {
    int page = 1, pages = 1;
    while (page <= pages) {
        char path[256];
        std::snprintf(path, sizeof(path), "/v2/country/%s/indicator/%s?format=json&per_page=1000&date=%d:%d&page=%d",
                      join_countries(opt.countries).c_str(), code.c_str(), opt.year_start, opt.year_end, page);
        auto res = client.Get(path);
        if (!res || res->status != 200)
            throw IoError("worldbank fetch failed for " + code + " page " + std::to_string(page) +
                          (res ? " (http " + std::to_string(res->status) + ")" : " (no response)"));
        WbPage parsed;
        try {
            parsed = parse_worldbank_page(res->body);
        } catch (const IoError& e) {
            throw IoError(std::string(e.what()) + " (page " + std::to_string(page) + ")");
        }
        pages = parsed.pages > 0 ? parsed.pages : 1;
        for (const auto& obs : parsed.rows) {
            if (obs.iso3.empty() || obs.year < opt.year_start || obs.year > opt.year_end) continue;
            auto it = std::find(panel.countries.begin(), panel.countries.end(), obs.iso3);
            if (it == panel.countries.end()) continue;
            const int c = static_cast<int>(it - panel.countries.begin());
            panel.at(c, indicator_index, obs.year) = obs.value;
        }
        ++page;
    }
}

// Fetches the seven World Bank indicators and writes snapshot + metadata.
// The FRED oil index needs TLS; without OpenSSL support the column is
// filled with a constant and flagged in the metadata.
inline MacroPanel fetch_worldbank(const FetchOptions& opt) {
    if (!opt.network_enabled)
        throw IoError("fetch refused: network access is disabled; pass --fetch without --offline, "
                      "or use the bundled snapshot via macro-ingest");
    MacroPanel panel;
    panel.countries = opt.countries;
    panel.year_start = opt.year_start;
    panel.year_end = opt.year_end;
    panel.values.assign(panel.countries.size(),
                        std::vector<std::vector<double>>(macro_indicators().size(),
                                                         std::vector<double>(panel.n_years(), kMissing)));
    httplib::Client client("http://api.worldbank.org");
    client.set_read_timeout(30, 0);
    nlohmann::json sources = nlohmann::json::object();
    for (const auto& [name, code] : worldbank_codes()) {
        const int ind = panel.indicator_index(name);
        fetch_indicator(client, opt, code, ind, panel);
        sources[name] = "http://api.worldbank.org/v2 indicator " + code;
    }

    const int oil = panel.indicator_index("oil_index");
    bool oil_fetched = false;
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
    try {
        httplib::SSLClient fred("fred.stlouisfed.org");
        fred.set_read_timeout(30, 0);
        auto res = fred.Get("/graph/fredgraph.csv?id=POILAPSPINDEXQ");
        if (res && res->status == 200) {
            // quarterly CSV date,value; average into years
            std::map<int, std::pair<double, int>> acc;
            std::istringstream body(res->body);
            std::string line;
            std::getline(body, line);  // header
            while (std::getline(body, line)) {
                if (line.size() < 11 || line[4] != '-') continue;
                const int year = std::stoi(line.substr(0, 4));
                const auto comma = line.find(',');
                if (comma == std::string::npos) continue;
                try {
                    const double v = std::stod(line.substr(comma + 1));
                    acc[year].first += v;
                    acc[year].second += 1;
                } catch (const std::exception&) {
                }
            }
            for (int c = 0; c < panel.n_countries(); ++c)
                for (int y = opt.year_start; y <= opt.year_end; ++y)
                    if (acc.count(y) && acc[y].second > 0)
                        panel.at(c, oil, y) = acc[y].first / acc[y].second;
            oil_fetched = true;
            sources["oil_index"] = "https://fred.stlouisfed.org POILAPSPINDEXQ";
        }
    } catch (const std::exception&) {
    }
#endif
    if (!oil_fetched) {
        for (int c = 0; c < panel.n_countries(); ++c)
            for (int y = opt.year_start; y <= opt.year_end; ++y) panel.at(c, oil, y) = 100.0;
        sources["oil_index"] = "unavailable without TLS; filled with constant 100";
    }

    if (!opt.snapshot_path.empty()) save_snapshot(panel, opt.snapshot_path);
    if (!opt.metadata_path.empty()) {
        nlohmann::json meta;
        std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        meta["fetch_date"] = stamp;
        meta["sources"] = sources;
        meta["countries"] = opt.countries;
        meta["years"] = {opt.year_start, opt.year_end};
        std::ofstream out(opt.metadata_path);
        out << meta.dump(2) << "\n";
    }
    return panel;
}

}  // namespace abmnn
