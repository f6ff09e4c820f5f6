#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "abmnn/core.hpp"
#include "abmnn/nn.hpp"
#include "abmnn/params.hpp"
#include "abmnn/tape.hpp"

namespace abmnn {

// Directed influence edge: A[dst][src] = w, i.e. src's state feeds dst's
// derivative. Undirected graphs store both directions explicitly.
struct Edge {
    int dst = 0;
    int src = 0;
    double w = 1.0;
};

struct Graph {
    int n = 0;
    bool directed = false;
    std::vector<Edge> edges;
};

inline void validate(const Graph& g) {
    std::vector<std::pair<int, int>> seen;
    seen.reserve(g.edges.size());
    for (const Edge& e : g.edges) {
        if (e.dst < 0 || e.dst >= g.n || e.src < 0 || e.src >= g.n)
            throw ShapeError("graph: edge endpoint out of range");
        if (!std::isfinite(e.w)) throw NumericError("graph: non-finite edge weight");
        seen.emplace_back(e.dst, e.src);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw ShapeError("graph: duplicate edge");
}

// Each unordered pair kept independently with probability p; both
// directions stored with weight 1.
inline Graph erdos_renyi(int n, double p, std::uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw ShapeError("erdos_renyi: p must be in [0,1]");
    Rng rng(seed);
    Graph g;
    g.n = n;
    g.directed = false;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < p) {
                g.edges.push_back({i, j, 1.0});
                g.edges.push_back({j, i, 1.0});
            }
    return g;
}

// Node set of a maximum-size connected component (edges treated as
// undirected); ties broken toward the component containing the smallest
// node id. Sorted ascending.
inline std::vector<int> largest_component(const Graph& g) {
    std::vector<std::vector<int>> adj(g.n);
    for (const Edge& e : g.edges) {
        adj[e.dst].push_back(e.src);
        adj[e.src].push_back(e.dst);
    }
    std::vector<int> comp(g.n, -1);
    int best = -1, best_size = 0;
    for (int s = 0; s < g.n; ++s) {
        if (comp[s] >= 0) continue;
        int size = 0;
        std::vector<int> stack = {s};
        comp[s] = s;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            ++size;
            for (int v : adj[u])
                if (comp[v] < 0) {
                    comp[v] = s;
                    stack.push_back(v);
                }
        }
        if (size > best_size) {  // strict: first (smallest-id) root wins ties
            best_size = size;
            best = s;
        }
    }
    std::vector<int> out;
    for (int v = 0; v < g.n; ++v)
        if (comp[v] == best) out.push_back(v);
    return out;
}

// Time-windowed link disabling: inside [t_start, t_end) a fixed random
// fraction of each node's incoming edges contributes zero. The subset is
// drawn once per (graph, seed), not per step, so rollouts stay
// deterministic.
struct LinkMask {
    double t_start = 0.0;
    double t_end = 0.0;
    double fraction = 0.0;  // in [0,1]
    std::uint64_t seed = 0;
};

inline std::vector<bool> masked_edges(const Graph& g, const LinkMask& m) {
    if (m.fraction < 0.0 || m.fraction > 1.0) throw ShapeError("link mask: fraction must be in [0,1]");
    std::vector<std::vector<int>> incoming(g.n);
    for (size_t e = 0; e < g.edges.size(); ++e) incoming[g.edges[e].dst].push_back(static_cast<int>(e));
    std::vector<bool> masked(g.edges.size(), false);
    for (int i = 0; i < g.n; ++i) {
        auto& in = incoming[i];
        Rng rng(m.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(i) + 1);
        // Fisher-Yates, then disable the first round(fraction*deg) entries
        for (int k = static_cast<int>(in.size()) - 1; k > 0; --k)
            std::swap(in[k], in[rng.uniform_int(k + 1)]);
        const int n_off = static_cast<int>(std::lround(m.fraction * static_cast<double>(in.size())));
        for (int k = 0; k < n_off; ++k) masked[in[k]] = true;
    }
    return masked;
}

// Precomputed gather/scatter plan for one graph (+ optional mask).
struct EdgeIndex {
    int n = 0;
    std::vector<int> dst, src;
    std::vector<double> w;         // base weights
    std::vector<double> w_masked;  // weights with the mask applied
    double t_start = 0.0, t_end = 0.0;
    bool has_mask = false;

    const std::vector<double>& weights_at(double t) const {
        return (has_mask && t >= t_start && t < t_end) ? w_masked : w;
    }
};

inline EdgeIndex build_edge_index(const Graph& g, const LinkMask* mask = nullptr) {
    EdgeIndex ix;
    ix.n = g.n;
    ix.dst.reserve(g.edges.size());
    for (const Edge& e : g.edges) {
        ix.dst.push_back(e.dst);
        ix.src.push_back(e.src);
        ix.w.push_back(e.w);
    }
    if (mask) {
        ix.has_mask = true;
        ix.t_start = mask->t_start;
        ix.t_end = mask->t_end;
        ix.w_masked = ix.w;
        auto off = masked_edges(g, *mask);
        for (size_t e = 0; e < off.size(); ++e)
            if (off[e]) ix.w_masked[e] = 0.0;
    }
    return ix;
}

// Restricted neighbor interaction (graph neural vector field):
//   out_i = sum over active edges (i<-j) of A_ij * pair(self_i, neigh_j).
// Node i's output depends only on its immediate neighborhood.
inline Var gnvf_eval(const Params& P, const Mlp& pair_net, const EdgeIndex& ix, Var state_self,
                     Var state_neigh, double t) {
    Tape& tape = *state_self.tape;
    if (tape.val(state_self).rows != ix.n || tape.val(state_neigh).rows != ix.n)
        throw ShapeError("gnvf: state rows must equal node count");
    const int cols = tape.val(state_self).cols + tape.val(state_neigh).cols;
    if (cols != pair_net.in_width()) throw ShapeError("gnvf: pair net input width mismatch");
    if (ix.dst.empty()) return tape.constant(Tensor(ix.n, pair_net.out_width()));
    Var in = concat_cols(gather_rows(state_self, ix.dst), gather_rows(state_neigh, ix.src));
    Var per_edge = mlp_forward(P, pair_net, in);
    return scatter_rows(per_edge, ix.dst, ix.n, ix.weights_at(t));
}

inline Var gnvf_apply(const Params& P, const Mlp& pair_net, const Graph& g, Var state_self,
                      Var state_neigh, const LinkMask* mask = nullptr, double t = 0.0) {
    return gnvf_eval(P, pair_net, build_edge_index(g, mask), state_self, state_neigh, t);
}

// --- baseline convolution layers ----------------------------------------

// Plan for GCNConv: self loops added, symmetric normalization
// 1/sqrt(d~_i d~_j) with d~ = degree + 1.
inline EdgeIndex build_gcn_index(const Graph& g) {
    std::vector<int> deg(g.n, 0);
    for (const Edge& e : g.edges) ++deg[e.dst];
    EdgeIndex ix;
    ix.n = g.n;
    for (const Edge& e : g.edges) {
        ix.dst.push_back(e.dst);
        ix.src.push_back(e.src);
        ix.w.push_back(1.0 / std::sqrt(static_cast<double>((deg[e.dst] + 1)) * (deg[e.src] + 1)));
    }
    for (int i = 0; i < g.n; ++i) {
        ix.dst.push_back(i);
        ix.src.push_back(i);
        ix.w.push_back(1.0 / static_cast<double>(deg[i] + 1));
    }
    return ix;
}

// Plan for SAGEConv mean aggregation: weight 1/indeg over incoming edges;
// nodes without neighbors aggregate to the zero vector.
inline EdgeIndex build_sage_index(const Graph& g) {
    std::vector<int> deg(g.n, 0);
    for (const Edge& e : g.edges) ++deg[e.dst];
    EdgeIndex ix;
    ix.n = g.n;
    for (const Edge& e : g.edges) {
        ix.dst.push_back(e.dst);
        ix.src.push_back(e.src);
        ix.w.push_back(1.0 / static_cast<double>(deg[e.dst]));
    }
    return ix;
}

// GCN layer pre-activation: (A_hat X) W + b
inline Var gcn_layer(const Params& P, const EdgeIndex& gcn_ix, int w_handle, int b_handle, Var feats) {
    Tape& t = *feats.tape;
    if (t.val(feats).cols != P.value(w_handle).rows) throw ShapeError("gcn_layer: feature width mismatch");
    Var agg = scatter_rows(gather_rows(feats, gcn_ix.src), gcn_ix.dst, gcn_ix.n, gcn_ix.w);
    return add_rowvec(matmul(agg, P.var(w_handle)), P.var(b_handle));
}

// SAGE layer pre-activation: concat(x, mean_neigh(x)) W + b
inline Var sage_layer(const Params& P, const EdgeIndex& sage_ix, int w_handle, int b_handle, Var feats) {
    Tape& t = *feats.tape;
    if (2 * t.val(feats).cols != P.value(w_handle).rows)
        throw ShapeError("sage_layer: feature width mismatch");
    Var mean_neigh;
    if (sage_ix.dst.empty())
        mean_neigh = t.constant(Tensor(sage_ix.n, t.val(feats).cols));
    else
        mean_neigh = scatter_rows(gather_rows(feats, sage_ix.src), sage_ix.dst, sage_ix.n, sage_ix.w);
    return add_rowvec(matmul(concat_cols(feats, mean_neigh), P.var(w_handle)), P.var(b_handle));
}

// --- file formats ---------------------------------------------------------

inline nlohmann::json graph_to_json(const Graph& g) {
    nlohmann::json edges = nlohmann::json::array();
    for (const Edge& e : g.edges) edges.push_back({e.dst, e.src, e.w});
    return nlohmann::json{{"n", g.n}, {"directed", g.directed}, {"edges", edges}};
}

inline Graph graph_from_json(const nlohmann::json& j) {
    Graph g;
    g.n = j.at("n").get<int>();
    g.directed = j.at("directed").get<bool>();
    for (const auto& e : j.at("edges"))
        g.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    validate(g);
    return g;
}

inline void save_graph(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_graph: cannot open " + path);
    out << graph_to_json(g).dump(2) << "\n";
}

// JSON by default; .csv edge lists (header i,j,w) are accepted with n
// inferred from the largest endpoint.
inline Graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_graph: cannot open " + path);
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
        Graph g;
        g.directed = true;
        std::string line;
        if (!std::getline(in, line)) throw IoError("load_graph: empty csv");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string i, j, w;
            if (!std::getline(row, i, ',') || !std::getline(row, j, ',') || !std::getline(row, w, ','))
                throw IoError("load_graph: malformed csv row: " + line);
            Edge e{std::stoi(i), std::stoi(j), std::stod(w)};
            g.n = std::max({g.n, e.dst + 1, e.src + 1});
            g.edges.push_back(e);
        }
        validate(g);
        return g;
    }
    nlohmann::json j;
    in >> j;
    return graph_from_json(j);
}

}  // namespace abmnn
