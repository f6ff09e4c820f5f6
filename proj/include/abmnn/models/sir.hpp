#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "abmnn/core.hpp"
#include "abmnn/graph.hpp"
#include "abmnn/nn.hpp"
#include "abmnn/ode.hpp"
#include "abmnn/params.hpp"

namespace abmnn {

// State layout: columns (S, I, R), one row per node.

// Initial condition: the requested number of infected nodes sampled without
// replacement from the largest connected component (capped at its size);
// everyone else susceptible, nobody recovered.
inline Tensor sir_initial_state(const Graph& g, int init_infected, std::uint64_t seed) {
    if (init_infected < 0 || init_infected > g.n)
        throw ShapeError("sir: init_infected must be in [0, n]");
    std::vector<int> pool = largest_component(g);
    Rng rng(seed);
    for (int k = static_cast<int>(pool.size()) - 1; k > 0; --k)
        std::swap(pool[k], pool[rng.uniform_int(k + 1)]);
    const int m = std::min<int>(init_infected, static_cast<int>(pool.size()));
    Tensor w0(g.n, 3);
    for (int i = 0; i < g.n; ++i) w0(i, 0) = 1.0;
    for (int k = 0; k < m; ++k) {
        w0(pool[k], 0) = 0.0;
        w0(pool[k], 1) = 1.0;
    }
    return w0;
}

// Ground-truth simulator:
//   dS_i = -sum_j beta A_ij S_i I_j,  dI_i = +... - gamma I_i,  dR_i = gamma I_i
// An optional link mask zeroes the masked edges inside its window, exactly
// as the learned field sees them.
inline Trajectory sir_truth(const Graph& g, double beta, double gamma, int init_infected,
                            std::uint64_t seed, const RolloutConfig& cfg,
                            const LinkMask* mask = nullptr) {
    if (beta < 0.0 || gamma < 0.0) throw ShapeError("sir_truth: rates must be non-negative");
    EdgeIndex ix = build_edge_index(g, mask);
    const int n = g.n;
    auto deriv = [&, n](const std::vector<double>& w, double t, std::vector<double>& dw) {
        const auto& wts = ix.weights_at(t);
        std::fill(dw.begin(), dw.end(), 0.0);
        for (size_t e = 0; e < ix.dst.size(); ++e) {
            const int i = ix.dst[e], j = ix.src[e];
            const double flow = beta * wts[e] * w[i * 3 + 0] * w[j * 3 + 1];
            dw[i * 3 + 0] -= flow;
            dw[i * 3 + 1] += flow;
        }
        for (int i = 0; i < n; ++i) {
            const double rec = gamma * w[i * 3 + 1];
            dw[i * 3 + 1] -= rec;
            dw[i * 3 + 2] += rec;
        }
    };
    return rk4_raw(deriv, sir_initial_state(g, init_infected, seed), cfg);
}

// Pairwise transmission and recovery laws. The generic wiring lets tests
// substitute exact closed forms for the MLPs.
using PairLaw = std::function<Var(Tape&, Var /*edge inputs [E,2]*/)>;
using SelfLaw = std::function<Var(Tape&, Var /*I column [N,1]*/)>;

struct SirNets {
    Mlp phi1;  // (S_i, I_j) -> transmission rate, relu output
    Mlp phi2;  // I_i -> recovery rate, relu output
};

// A relu-output net whose head is negative over the whole input range gets
// no gradient and can never recover, which silently kills the recovery law
// (and with it the pair law). Draws are rejected until the head is alive on
// the unit input range; the retry sequence is a pure function of the seed.
inline bool relu_head_alive(const Mlp& net, Params& P, const std::vector<Tensor>& probes) {
    Tape t;
    P.bind(t);
    for (const Tensor& probe : probes) {
        const Tensor& out = t.val(mlp_forward(P, net, t.constant(probe)));
        for (double v : out.data)
            if (v > 1e-6) return true;
    }
    return false;
}

inline Mlp make_alive_relu_mlp(Params& P, const std::vector<int>& widths, std::uint64_t seed,
                               const std::vector<Tensor>& probes) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Params scratch;
        Mlp candidate = make_mlp(scratch, widths, seed + 1000ULL * attempt, OutputAct::Relu);
        if (relu_head_alive(candidate, scratch, probes))
            return make_mlp(P, widths, seed + 1000ULL * attempt, OutputAct::Relu);
    }
    // give up on rejection; the last draw at least keeps shapes right
    return make_mlp(P, widths, seed, OutputAct::Relu);
}

inline SirNets make_sir_nets(Params& P, std::uint64_t seed, int hidden = 32, int hidden_layers = 3) {
    std::vector<int> w1 = {2}, w2 = {1};
    for (int l = 0; l < hidden_layers; ++l) {
        w1.push_back(hidden);
        w2.push_back(hidden);
    }
    w1.push_back(1);
    w2.push_back(1);
    Tensor pair_probe(25, 2);
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
            pair_probe(a * 5 + b, 0) = 0.25 * a;
            pair_probe(a * 5 + b, 1) = 0.25 * b;
        }
    Tensor rec_probe(11, 1);
    for (int k = 0; k <= 10; ++k) rec_probe(k, 0) = 0.1 * k;
    SirNets nets;
    nets.phi1 = make_alive_relu_mlp(P, w1, seed, {pair_probe});
    nets.phi2 = make_alive_relu_mlp(P, w2, seed + 1, {rec_probe});
    return nets;
}

// ABM-informed field with hard-wired functionals
//   F = -psi1, G = psi1 - phi2, H = phi2,
// so dS+dI+dR = 0 per node by construction (d(t) = 0 as a hard constraint).
struct SirAbmField : VectorField {
    Params* P = nullptr;
    EdgeIndex edges;
    PairLaw pair;
    SelfLaw recovery;

    Var eval(Tape& t, Var w, double time, int) override {
        Var psi = eval_psi(t, w, time);
        Var rec = recovery(t, slice_cols(w, 1, 2));
        Var dS = smul(psi, -1.0);
        Var dI = sub(psi, rec);
        return concat_cols(concat_cols(dS, dI), rec);
    }

    Var eval_psi(Tape& t, Var w, double time) {
        Var S = slice_cols(w, 0, 1);
        Var I = slice_cols(w, 1, 2);
        if (edges.dst.empty()) return t.constant(Tensor(edges.n, 1));
        Var in = concat_cols(gather_rows(S, edges.dst), gather_rows(I, edges.src));
        return scatter_rows(pair(t, in), edges.dst, edges.n, edges.weights_at(time));
    }

    void bind(Tape& t) override { P->bind(t); }
};

inline SirAbmField sir_abm_field(Params& P, const SirNets& nets, const Graph& g,
                                 const LinkMask* mask = nullptr) {
    SirAbmField f;
    f.P = &P;
    f.edges = build_edge_index(g, mask);
    f.pair = [&P, nets](Tape& t, Var in) { return mlp_forward(P, nets.phi1, in); };
    f.recovery = [&P, nets](Tape& t, Var I) { return mlp_forward(P, nets.phi2, I); };
    return f;
}

// Functional-learning variant: F stays fixed at -psi1 for interpretability
// (its coefficients exist but join no optimizer group), while G and H are
// learned linear combinations of [psi1, phi2]. The conservation residual
// d = F+G+H is collected at stage-0 evaluations so a soft penalty can drive
// d -> 0 along the rollout.
struct SirFunctionalField : VectorField {
    Params* P = nullptr;
    EdgeIndex edges;
    PairLaw pair;
    SelfLaw recovery;
    int c_f = -1;  // [2,1] coefficients on (psi1, phi2); fixed at (-1, 0)
    int c_g = -1;
    int c_h = -1;
    std::vector<Var> residuals;  // per accepted step, [N,1] on the tape

    Var eval(Tape& t, Var w, double time, int stage) override {
        Var S = slice_cols(w, 0, 1);
        Var I = slice_cols(w, 1, 2);
        Var psi;
        if (edges.dst.empty()) {
            psi = t.constant(Tensor(edges.n, 1));
        } else {
            Var in = concat_cols(gather_rows(S, edges.dst), gather_rows(I, edges.src));
            psi = scatter_rows(pair(t, in), edges.dst, edges.n, edges.weights_at(time));
        }
        Var rec = recovery(t, I);
        Var basis = concat_cols(psi, rec);  // [N,2]
        Var F = matmul(basis, P->var(c_f));
        Var G = matmul(basis, P->var(c_g));
        Var H = matmul(basis, P->var(c_h));
        if (stage == 0) residuals.push_back(add(add(F, G), H));
        return concat_cols(concat_cols(F, G), H);
    }

    void bind(Tape& t) override {
        P->bind(t);
        residuals.clear();
    }
};

inline SirFunctionalField sir_functional_field(Params& P, const SirNets& nets, const Graph& g,
                                               const Tensor& cg_init, const Tensor& ch_init,
                                               const LinkMask* mask = nullptr) {
    SirFunctionalField f;
    f.P = &P;
    f.edges = build_edge_index(g, mask);
    f.pair = [&P, nets](Tape& t, Var in) { return mlp_forward(P, nets.phi1, in); };
    f.recovery = [&P, nets](Tape& t, Var I) { return mlp_forward(P, nets.phi2, I); };
    f.c_f = P.create(Tensor(2, 1, {-1.0, 0.0}));
    f.c_g = P.create(cg_init);
    f.c_h = P.create(ch_init);
    return f;
}

constexpr double kConservationPenaltyWeight = 10.0;  // lambda_conservation

}  // namespace abmnn
