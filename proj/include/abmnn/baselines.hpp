#pragma once

#include <cstdint>
#include <vector>

#include "abmnn/graph.hpp"
#include "abmnn/nn.hpp"
#include "abmnn/ode.hpp"
#include "abmnn/params.hpp"

namespace abmnn {

enum class BaselineKind { Gcn, Sage };

// Unconstrained graph-convolution vector field: two conv layers (hidden 64,
// relu) and a linear head straight to the 3 compartment derivatives. No
// conservation by construction; that is the comparison premise.
struct BaselineField : VectorField {
    BaselineKind kind = BaselineKind::Gcn;
    Params* P = nullptr;
    EdgeIndex ix;  // gcn or sage plan for the current graph
    int w1 = -1, b1 = -1, w2 = -1, b2 = -1, wh = -1, bh = -1;

    Var conv(Tape& t, Var feats, int w, int b) {
        return kind == BaselineKind::Gcn ? gcn_layer(*P, ix, w, b, feats)
                                         : sage_layer(*P, ix, w, b, feats);
    }

    Var eval(Tape& t, Var w_state, double, int) override {
        Var h = relu(conv(t, w_state, w1, b1));
        h = relu(conv(t, h, w2, b2));
        return add_rowvec(matmul(h, P->var(wh)), P->var(bh));
    }

    void bind(Tape& t) override { P->bind(t); }

    // Same parameters on a different graph (out-of-sample deployment).
    BaselineField with_graph(const Graph& g) const {
        BaselineField f = *this;
        f.ix = kind == BaselineKind::Gcn ? build_gcn_index(g) : build_sage_index(g);
        return f;
    }
};

inline int baseline_conv_in(BaselineKind kind, int feats) {
    return kind == BaselineKind::Sage ? 2 * feats : feats;
}

inline BaselineField make_baseline_field(Params& P, BaselineKind kind, const Graph& g,
                                         std::uint64_t seed, int hidden = 64, int compartments = 3) {
    Rng rng(seed);
    auto uniform_tensor = [&](int rows, int cols) {
        const double bound = std::sqrt(1.0 / rows);
        Tensor t(rows, cols);
        for (auto& v : t.data) v = rng.uniform(-bound, bound);
        return t;
    };
    BaselineField f;
    f.kind = kind;
    f.P = &P;
    f.ix = kind == BaselineKind::Gcn ? build_gcn_index(g) : build_sage_index(g);
    f.w1 = P.create(uniform_tensor(baseline_conv_in(kind, compartments), hidden));
    f.b1 = P.create(Tensor(1, hidden));
    f.w2 = P.create(uniform_tensor(baseline_conv_in(kind, hidden), hidden));
    f.b2 = P.create(Tensor(1, hidden));
    f.wh = P.create(uniform_tensor(hidden, compartments));
    f.bh = P.create(Tensor(1, compartments));
    return f;
}

inline std::vector<int> baseline_params(const BaselineField& f) {
    return {f.w1, f.b1, f.w2, f.b2, f.wh, f.bh};
}

}  // namespace abmnn
