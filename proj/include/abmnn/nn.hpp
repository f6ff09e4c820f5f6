#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"

#include "abmnn/core.hpp"
#include "abmnn/params.hpp"
#include "abmnn/tape.hpp"

namespace abmnn {

enum class OutputAct { None, Relu, Tanh };
enum class HiddenAct { LeakyRelu, Relu };

// Feed-forward network. Parameters live in a Params store; the struct holds
// handles only, so trained nets can be rebound to fresh tapes every rollout.
struct Mlp {
    std::vector<int> widths;  // input, hidden..., output
    std::vector<int> w;       // per-layer weight handles, shape [in,out]
    std::vector<int> b;       // per-layer bias handles, shape [1,out]
    HiddenAct hidden_act = HiddenAct::LeakyRelu;
    OutputAct output_act = OutputAct::None;

    int n_layers() const { return static_cast<int>(w.size()); }
    int in_width() const { return widths.front(); }
    int out_width() const { return widths.back(); }
};

// Weights uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)], biases zero.
inline Mlp make_mlp(Params& P, std::vector<int> widths, std::uint64_t seed,
                    OutputAct out_act = OutputAct::None,
                    HiddenAct hidden_act = HiddenAct::LeakyRelu) {
    if (widths.size() < 2) throw ShapeError("make_mlp: need at least input and output widths");
    for (int wd : widths)
        if (wd < 1) throw ShapeError("make_mlp: widths must be >= 1");
    Rng rng(seed);
    Mlp net;
    net.widths = std::move(widths);
    net.hidden_act = hidden_act;
    net.output_act = out_act;
    for (size_t l = 0; l + 1 < net.widths.size(); ++l) {
        const int fan_in = net.widths[l];
        const int fan_out = net.widths[l + 1];
        const double bound = std::sqrt(1.0 / fan_in);
        Tensor W(fan_in, fan_out);
        for (auto& v : W.data) v = rng.uniform(-bound, bound);
        net.w.push_back(P.create(std::move(W)));
        net.b.push_back(P.create(Tensor(1, fan_out)));
    }
    return net;
}

inline Var apply_hidden_act(Tape& t, Var h, HiddenAct act) {
    return act == HiddenAct::LeakyRelu ? t.leaky_relu(h) : t.relu(h);
}

inline Var apply_output_act(Tape& t, Var h, OutputAct act) {
    switch (act) {
        case OutputAct::Relu: return t.relu(h);
        case OutputAct::Tanh: return t.tanh(h);
        case OutputAct::None: return h;
    }
    return h;
}

// input [B, in] -> [B, out], recorded on the tape the params are bound to
inline Var mlp_forward(const Params& P, const Mlp& net, Var input) {
    Tape& t = *input.tape;
    if (t.val(input).cols != net.in_width())
        throw ShapeError("mlp_forward: input width " + std::to_string(t.val(input).cols) +
                         " does not match net input " + std::to_string(net.in_width()));
    Var h = input;
    for (int l = 0; l < net.n_layers(); ++l) {
        h = add_rowvec(matmul(h, P.var(net.w[l])), P.var(net.b[l]));
        if (l + 1 < net.n_layers())
            h = apply_hidden_act(t, h, net.hidden_act);
        else
            h = apply_output_act(t, h, net.output_act);
    }
    return h;
}

// FiLM adapter: per hidden layer, scale/shift maps from the embedding.
// gamma = tanh(W_g e + b_g) + 1 stays in (0,2); zero parameters are exactly
// neutral (gamma=1, beta=0), which is also the initialization.
struct FilmAdapter {
    int d_e = 0;
    std::vector<int> wg, bg, wb, bb;  // per hidden layer
};

inline FilmAdapter make_film(Params& P, const Mlp& net, int d_e) {
    FilmAdapter f;
    f.d_e = d_e;
    for (size_t l = 1; l + 1 < net.widths.size(); ++l) {
        const int dl = net.widths[l];
        f.wg.push_back(P.create(Tensor(d_e, dl)));
        f.bg.push_back(P.create(Tensor(1, dl)));
        f.wb.push_back(P.create(Tensor(d_e, dl)));
        f.bb.push_back(P.create(Tensor(1, dl)));
    }
    return f;
}

// Per-agent static embeddings, one row per agent. Trainable.
struct Embeddings {
    int n = 0;
    int d_e = 0;
    int handle = -1;
};

inline Embeddings make_embeddings(Params& P, int n, int d_e, std::uint64_t seed) {
    Rng rng(seed);
    Tensor E(n, d_e);
    for (auto& v : E.data) v = rng.uniform(-0.5, 0.5);
    return Embeddings{n, d_e, P.create(std::move(E))};
}

// Forward pass with per-row FiLM conditioning: each hidden pre-activation is
// scaled by gamma(e) and shifted by beta(e) before the nonlinearity. The
// embedding batch must have one row per input row.
inline Var film_forward(const Params& P, const Mlp& net, const FilmAdapter& f, Var input, Var emb) {
    Tape& t = *input.tape;
    if (t.val(input).cols != net.in_width()) throw ShapeError("film_forward: input width mismatch");
    if (t.val(emb).cols != f.d_e) throw ShapeError("film_forward: embedding width mismatch");
    if (t.val(emb).rows != t.val(input).rows)
        throw ShapeError("film_forward: embedding rows must match input rows");
    if (static_cast<int>(f.wg.size()) != net.n_layers() - 1)
        throw ShapeError("film_forward: adapter depth does not match net");
    Var h = input;
    for (int l = 0; l < net.n_layers(); ++l) {
        h = add_rowvec(matmul(h, P.var(net.w[l])), P.var(net.b[l]));
        if (l + 1 < net.n_layers()) {
            Var gamma = sadd(tanh(add_rowvec(matmul(emb, P.var(f.wg[l])), P.var(f.bg[l]))), 1.0);
            Var beta = add_rowvec(matmul(emb, P.var(f.wb[l])), P.var(f.bb[l]));
            h = add(mul(gamma, h), beta);
            h = apply_hidden_act(t, h, net.hidden_act);
        } else {
            h = apply_output_act(t, h, net.output_act);
        }
    }
    return h;
}

inline int param_count(const Params& P, const Mlp& net) {
    int n = 0;
    for (int h : net.w) n += static_cast<int>(P.value(h).size());
    for (int h : net.b) n += static_cast<int>(P.value(h).size());
    return n;
}

inline int param_count(const Params& P, const FilmAdapter& f) {
    int n = 0;
    for (auto& group : {f.wg, f.bg, f.wb, f.bb})
        for (int h : group) n += static_cast<int>(P.value(h).size());
    return n;
}

// --- JSON (de)serialization ---------------------------------------------

inline nlohmann::json tensor_to_json(const Tensor& t) {
    return nlohmann::json{{"rows", t.rows}, {"cols", t.cols}, {"data", t.data}};
}

inline Tensor tensor_from_json(const nlohmann::json& j) {
    return Tensor(j.at("rows").get<int>(), j.at("cols").get<int>(),
                  j.at("data").get<std::vector<double>>());
}

inline nlohmann::json mlp_to_json(const Params& P, const Mlp& net) {
    nlohmann::json j;
    j["widths"] = net.widths;
    j["hidden_act"] = net.hidden_act == HiddenAct::LeakyRelu ? "leaky_relu" : "relu";
    j["output_act"] = net.output_act == OutputAct::Relu   ? "relu"
                      : net.output_act == OutputAct::Tanh ? "tanh"
                                                          : "none";
    for (int l = 0; l < net.n_layers(); ++l) {
        j["weights"].push_back(tensor_to_json(P.value(net.w[l])));
        j["biases"].push_back(tensor_to_json(P.value(net.b[l])));
    }
    return j;
}

inline Mlp mlp_from_json(Params& P, const nlohmann::json& j) {
    Mlp net;
    net.widths = j.at("widths").get<std::vector<int>>();
    net.hidden_act = j.at("hidden_act") == "relu" ? HiddenAct::Relu : HiddenAct::LeakyRelu;
    const std::string oa = j.at("output_act");
    net.output_act = oa == "relu" ? OutputAct::Relu : oa == "tanh" ? OutputAct::Tanh : OutputAct::None;
    for (const auto& w : j.at("weights")) net.w.push_back(P.create(tensor_from_json(w)));
    for (const auto& b : j.at("biases")) net.b.push_back(P.create(tensor_from_json(b)));
    if (net.w.size() + 1 != net.widths.size()) throw IoError("mlp_from_json: layer count mismatch");
    return net;
}

inline nlohmann::json film_to_json(const Params& P, const FilmAdapter& f) {
    nlohmann::json j;
    j["d_e"] = f.d_e;
    for (size_t l = 0; l < f.wg.size(); ++l) {
        j["scale_w"].push_back(tensor_to_json(P.value(f.wg[l])));
        j["scale_b"].push_back(tensor_to_json(P.value(f.bg[l])));
        j["shift_w"].push_back(tensor_to_json(P.value(f.wb[l])));
        j["shift_b"].push_back(tensor_to_json(P.value(f.bb[l])));
    }
    return j;
}

inline FilmAdapter film_from_json(Params& P, const nlohmann::json& j) {
    FilmAdapter f;
    f.d_e = j.at("d_e").get<int>();
    if (j.contains("scale_w")) {
        for (const auto& t : j.at("scale_w")) f.wg.push_back(P.create(tensor_from_json(t)));
        for (const auto& t : j.at("scale_b")) f.bg.push_back(P.create(tensor_from_json(t)));
        for (const auto& t : j.at("shift_w")) f.wb.push_back(P.create(tensor_from_json(t)));
        for (const auto& t : j.at("shift_b")) f.bb.push_back(P.create(tensor_from_json(t)));
    }
    return f;
}

}  // namespace abmnn
