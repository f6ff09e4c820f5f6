#pragma once

#include <cmath>
#include <tuple>
#include <vector>

#include "abmnn/core.hpp"
#include "abmnn/nn.hpp"
#include "abmnn/ode.hpp"
#include "abmnn/params.hpp"

namespace abmnn {

// State layout per country row: column 0 is normalized GDP x, columns 1..6
// are the latent macro channels y.
constexpr int kMacroChannels = 6;

// Curriculum interaction factor: 0 before the warmup epoch, ramping
// linearly to 1 over the ramp length.
inline double curriculum_factor(int epoch, int warmup = 25, int ramp = 50) {
    if (epoch < warmup) return 0.0;
    if (epoch >= warmup + ramp) return 1.0;
    return static_cast<double>(epoch - warmup) / static_cast<double>(ramp);
}

// Coupled GDP dynamics:
//   dx_i = x_i g(x_i,y_i,e_i) + d(x_i,y_i,e_i) + psi_i
//   dy_i = phi_y(y_i,x_i,e_i)
//   psi_i = C(k) [x_i]_+ sum_j A_ij ([x_j]_+ + eps)^beta
// g and d are the two outputs of one FiLM-adapted network; beta is squashed
// through a sigmoid to stay in (0,1).
struct MacroField : VectorField {
    Params* P = nullptr;
    int n = 0;
    Mlp net_x;  // [x,y] -> (g, d)
    Mlp net_y;  // [y,x] -> dy
    FilmAdapter film_x, film_y;
    Embeddings emb;
    int A = -1;         // [n,n]
    int raw_beta = -1;  // [1,1]
    int row_gate = -1;  // [n,1], used only when use_row_gates
    bool use_row_gates = false;
    double eps = 1e-9;
    double interaction_scale = 1.0;  // C(k); set per epoch
    bool include_interaction = true;

    Var eval(Tape& t, Var w, double, int) override {
        if (t.val(w).rows != n || t.val(w).cols != 1 + kMacroChannels)
            throw ShapeError("macro field: state must be [n, 7]");
        Var x = slice_cols(w, 0, 1);
        Var y = slice_cols(w, 1, 1 + kMacroChannels);
        Var e = P->var(emb.handle);
        Var gd = film_forward(*P, net_x, film_x, concat_cols(x, y), e);
        Var growth = slice_cols(gd, 0, 1);
        Var drift = slice_cols(gd, 1, 2);
        Var dx = add(mul(x, growth), drift);
        if (include_interaction && interaction_scale != 0.0) dx = add(dx, psi(t, x));
        Var dy = film_forward(*P, net_y, film_y, concat_cols(y, x), e);
        return concat_cols(dx, dy);
    }

    Var psi(Tape& t, Var x) {
        Var xp = clamp_min0(x);
        Var beta = sigmoid(P->var(raw_beta));
        Var u = pow_learn(sadd(xp, eps), beta);
        Var spill = matmul(P->var(A), u);
        if (use_row_gates) spill = mul(tanh(P->var(row_gate)), spill);
        return smul(mul(xp, spill), interaction_scale);
    }

    void bind(Tape& t) override { P->bind(t); }
};

// A starts weakly coupled (off-diagonal 1/N, zero diagonal); beta starts at
// 0.2 via its raw logit.
inline MacroField make_macro_field(Params& P, int n, std::uint64_t seed, int d_e = 8, int hidden = 8,
                                   int hidden_layers = 2, bool row_gates = false) {
    MacroField f;
    f.P = &P;
    f.n = n;
    std::vector<int> wx = {1 + kMacroChannels}, wy = {1 + kMacroChannels};
    for (int l = 0; l < hidden_layers; ++l) {
        wx.push_back(hidden);
        wy.push_back(hidden);
    }
    wx.push_back(2);
    wy.push_back(kMacroChannels);
    f.net_x = make_mlp(P, wx, seed, OutputAct::None, HiddenAct::Relu);
    f.net_y = make_mlp(P, wy, seed + 1, OutputAct::None, HiddenAct::Relu);
    f.film_x = make_film(P, f.net_x, d_e);
    f.film_y = make_film(P, f.net_y, d_e);
    f.emb = make_embeddings(P, n, d_e, seed + 2);
    Tensor A0(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A0(i, j) = (i == j) ? 0.0 : 1.0 / n;
    f.A = P.create(A0);
    f.raw_beta = P.create(Tensor::scalar(std::log(0.2 / 0.8)));  // sigmoid -> 0.2
    f.use_row_gates = row_gates;
    if (row_gates) f.row_gate = P.create(Tensor::full(n, 1, 1.0));
    return f;
}

inline double macro_beta(const Params& P, const MacroField& f) {
    const double raw = P.value(f.raw_beta).data[0];
    return 1.0 / (1.0 + std::exp(-raw));
}

// Counterfactual edit: copy of the field with selected A entries replaced;
// every other parameter handle is shared with the original.
struct InterventionEdit {
    int i = 0, j = 0;
    double value = 0.0;
};

inline MacroField apply_intervention(Params& P, const MacroField& f,
                                     const std::vector<InterventionEdit>& edits) {
    MacroField g = f;
    if (edits.empty()) return g;
    Tensor A = P.value(f.A);
    for (const auto& e : edits) {
        if (e.i < 0 || e.i >= f.n || e.j < 0 || e.j >= f.n)
            throw ShapeError("apply_intervention: index out of range");
        A(e.i, e.j) = e.value;
    }
    g.A = P.create(std::move(A));
    return g;
}

}  // namespace abmnn
