#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "abmnn/core.hpp"
#include "abmnn/tensor.hpp"

namespace abmnn {

// Reverse-mode tape. Forward values are computed eagerly as ops are
// recorded; backward() replays the tape in reverse. A tape is single-owner:
// it must not be touched from two execution contexts at once.

enum class Op {
    Leaf,
    Add,
    Sub,
    Mul,        // elementwise
    MatMul,
    Sum,        // -> [1,1]
    Mean,       // -> [1,1]
    ColSum,     // [m,n] -> [1,n]
    ScalarMul,  // c * x
    ScalarAdd,  // x + c
    PowConst,   // x^p, fixed p
    PowLearn,   // x^beta, beta a [1,1] tensor; requires x > 0
    Exp,
    Tanh,
    Relu,
    LeakyRelu,  // negative slope 0.01
    ClampMin0,  // [x]_+; gradient at exactly 0 is 0
    Abs,
    ConcatCols,
    SliceCols,
    GatherRows,   // out[r] = x[idx[r]]
    ScatterRows,  // out[i] = sum over rows r with idx[r]==i of w[r]*x[r]
    AddRowVec,    // [m,n] + broadcast [1,n]
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::MatMul: return "matmul";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::ColSum: return "colsum";
        case Op::ScalarMul: return "scalar_mul";
        case Op::ScalarAdd: return "scalar_add";
        case Op::PowConst: return "pow_const";
        case Op::PowLearn: return "pow_learn";
        case Op::Exp: return "exp";
        case Op::Tanh: return "tanh";
        case Op::Relu: return "relu";
        case Op::LeakyRelu: return "leaky_relu";
        case Op::ClampMin0: return "clamp_min0";
        case Op::Abs: return "abs";
        case Op::ConcatCols: return "concat_cols";
        case Op::SliceCols: return "slice_cols";
        case Op::GatherRows: return "gather_rows";
        case Op::ScatterRows: return "scatter_rows";
        case Op::AddRowVec: return "add_rowvec";
    }
    return "?";
}

constexpr double kLeakySlope = 0.01;

struct TapeNode {
    Op op = Op::Leaf;
    int a = -1;
    int b = -1;
    Tensor val;
    double c = 0.0;          // scalar operand (ScalarMul/ScalarAdd/PowConst)
    std::vector<int> idx;    // gather/scatter indices; SliceCols stores {c0,c1}
    std::vector<double> w;   // scatter row weights (empty means all 1)
    int rows_out = 0;        // scatter target row count
    bool rg = false;         // reachable from a differentiable leaf
};

class Tape;

// Handle to a tape entry.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
};

using GradMap = std::unordered_map<int, Tensor>;

namespace detail {
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;
inline CMap emap(const Tensor& t) { return CMap(t.data.data(), t.rows, t.cols); }
inline MMap emap(Tensor& t) { return MMap(t.data.data(), t.rows, t.cols); }
}  // namespace detail

class Tape {
public:
    int size() const { return static_cast<int>(nodes_.size()); }

    void clear() { nodes_.clear(); }

    const TapeNode& node(int id) const { return nodes_[id]; }
    const Tensor& val(int id) const { return nodes_[id].val; }
    const Tensor& val(Var v) const { return nodes_[v.id].val; }

    Var leaf(Tensor v, bool requires_grad = false) {
        if (!v.all_finite()) throw NumericError("leaf: non-finite input tensor");
        TapeNode n;
        n.op = Op::Leaf;
        n.val = std::move(v);
        n.rg = requires_grad;
        return push(std::move(n));
    }

    Var constant(Tensor v) { return leaf(std::move(v), false); }
    Var constant(double v) { return leaf(Tensor::scalar(v), false); }

    // --- recorded operations -------------------------------------------

    Var add(Var x, Var y) { return binary_elem(Op::Add, x, y); }
    Var sub(Var x, Var y) { return binary_elem(Op::Sub, x, y); }
    Var mul(Var x, Var y) { return binary_elem(Op::Mul, x, y); }

    Var matmul(Var x, Var y) {
        const Tensor& A = val(x.id);
        const Tensor& B = val(y.id);
        if (A.cols != B.rows)
            throw ShapeError("matmul: inner dimensions differ (" + shape_str(A) + " x " + shape_str(B) + ")");
        TapeNode n = make(Op::MatMul, x.id, y.id);
        n.val = Tensor(A.rows, B.cols);
        detail::emap(n.val).noalias() = detail::emap(A) * detail::emap(B);
        return push(std::move(n));
    }

    Var sum(Var x) {
        TapeNode n = make(Op::Sum, x.id);
        double s = 0.0;
        for (double v : val(x.id).data) s += v;
        n.val = Tensor::scalar(s);
        return push(std::move(n));
    }

    Var mean(Var x) {
        const Tensor& X = val(x.id);
        if (X.size() == 0) throw ShapeError("mean: empty tensor");
        TapeNode n = make(Op::Mean, x.id);
        double s = 0.0;
        for (double v : X.data) s += v;
        n.val = Tensor::scalar(s / static_cast<double>(X.size()));
        return push(std::move(n));
    }

    Var colsum(Var x) {
        const Tensor& X = val(x.id);
        TapeNode n = make(Op::ColSum, x.id);
        n.val = Tensor(1, X.cols);
        for (int r = 0; r < X.rows; ++r)
            for (int c = 0; c < X.cols; ++c) n.val.data[c] += X(r, c);
        return push(std::move(n));
    }

    Var smul(Var x, double c) {
        TapeNode n = make(Op::ScalarMul, x.id);
        n.c = c;
        n.val = val(x.id);
        for (double& v : n.val.data) v *= c;
        return push(std::move(n));
    }

    Var sadd(Var x, double c) {
        TapeNode n = make(Op::ScalarAdd, x.id);
        n.c = c;
        n.val = val(x.id);
        for (double& v : n.val.data) v += c;
        return push(std::move(n));
    }

    Var pow_const(Var x, double p) {
        TapeNode n = make(Op::PowConst, x.id);
        n.c = p;
        n.val = val(x.id);
        for (double& v : n.val.data) v = std::pow(v, p);
        return push(std::move(n));
    }

    // x^beta = exp(beta * ln x); callers must keep x strictly positive
    // (add a small epsilon first).
    Var pow_learn(Var x, Var beta) {
        const Tensor& B = val(beta.id);
        if (!B.is_scalar()) throw ShapeError("pow_learn: exponent must be a [1,1] tensor");
        for (double v : val(x.id).data)
            if (v <= 0.0) throw NumericError("pow_learn: base must be strictly positive");
        TapeNode n = make(Op::PowLearn, x.id, beta.id);
        const double be = B.data[0];
        n.val = val(x.id);
        for (double& v : n.val.data) v = std::exp(be * std::log(v));
        return push(std::move(n));
    }

    Var exp(Var x) { return unary(Op::Exp, x, [](double v) { return std::exp(v); }); }
    Var tanh(Var x) { return unary(Op::Tanh, x, [](double v) { return std::tanh(v); }); }
    Var relu(Var x) { return unary(Op::Relu, x, [](double v) { return v > 0.0 ? v : 0.0; }); }
    Var leaky_relu(Var x) {
        return unary(Op::LeakyRelu, x, [](double v) { return v > 0.0 ? v : kLeakySlope * v; });
    }
    Var clamp_min0(Var x) { return unary(Op::ClampMin0, x, [](double v) { return v > 0.0 ? v : 0.0; }); }
    Var abs(Var x) { return unary(Op::Abs, x, [](double v) { return std::abs(v); }); }

    Var concat_cols(Var x, Var y) {
        const Tensor& A = val(x.id);
        const Tensor& B = val(y.id);
        if (A.rows != B.rows) throw ShapeError("concat_cols: row counts differ");
        TapeNode n = make(Op::ConcatCols, x.id, y.id);
        n.idx = {A.cols};
        n.val = Tensor(A.rows, A.cols + B.cols);
        for (int r = 0; r < A.rows; ++r) {
            for (int c = 0; c < A.cols; ++c) n.val(r, c) = A(r, c);
            for (int c = 0; c < B.cols; ++c) n.val(r, A.cols + c) = B(r, c);
        }
        return push(std::move(n));
    }

    Var slice_cols(Var x, int c0, int c1) {
        const Tensor& X = val(x.id);
        if (c0 < 0 || c1 > X.cols || c0 >= c1) throw ShapeError("slice_cols: bad column range");
        TapeNode n = make(Op::SliceCols, x.id);
        n.idx = {c0, c1};
        n.val = Tensor(X.rows, c1 - c0);
        for (int r = 0; r < X.rows; ++r)
            for (int c = c0; c < c1; ++c) n.val(r, c - c0) = X(r, c);
        return push(std::move(n));
    }

    Var gather_rows(Var x, std::vector<int> idx) {
        const Tensor& X = val(x.id);
        for (int i : idx)
            if (i < 0 || i >= X.rows) throw ShapeError("gather_rows: index out of range");
        TapeNode n = make(Op::GatherRows, x.id);
        n.val = Tensor(static_cast<int>(idx.size()), X.cols);
        for (size_t r = 0; r < idx.size(); ++r)
            for (int c = 0; c < X.cols; ++c) n.val(static_cast<int>(r), c) = X(idx[r], c);
        n.idx = std::move(idx);
        return push(std::move(n));
    }

    // Weighted segment sum: out[idx[r]] += w[r] * x[r]. Weights are fixed
    // data (edge weights), not differentiable.
    Var scatter_rows(Var x, const std::vector<int>& idx, int rows_out, std::vector<double> w = {}) {
        const Tensor& X = val(x.id);
        if (static_cast<int>(idx.size()) != X.rows)
            throw ShapeError("scatter_rows: index count must equal input rows");
        if (!w.empty() && w.size() != idx.size())
            throw ShapeError("scatter_rows: weight count must equal input rows");
        for (int i : idx)
            if (i < 0 || i >= rows_out) throw ShapeError("scatter_rows: index out of range");
        TapeNode n = make(Op::ScatterRows, x.id);
        n.idx = idx;
        n.w = std::move(w);
        n.rows_out = rows_out;
        n.val = Tensor(rows_out, X.cols);
        for (int r = 0; r < X.rows; ++r) {
            const double wr = n.w.empty() ? 1.0 : n.w[r];
            for (int c = 0; c < X.cols; ++c) n.val(idx[r], c) += wr * X(r, c);
        }
        return push(std::move(n));
    }

    Var add_rowvec(Var x, Var v) {
        const Tensor& X = val(x.id);
        const Tensor& V = val(v.id);
        if (V.rows != 1 || V.cols != X.cols) throw ShapeError("add_rowvec: vector shape must be [1,cols]");
        TapeNode n = make(Op::AddRowVec, x.id, v.id);
        n.val = X;
        for (int r = 0; r < X.rows; ++r)
            for (int c = 0; c < X.cols; ++c) n.val(r, c) += V.data[c];
        return push(std::move(n));
    }

    // --- reverse sweep --------------------------------------------------

    // Gradients of a scalar output w.r.t. every differentiable leaf.
    // Adjoints of interior nodes are released as soon as they have been
    // propagated, so peak memory stays close to the forward tape.
    GradMap backward(Var out) {
        const Tensor& o = val(out.id);
        if (!o.is_scalar()) throw ShapeError("backward: output must be scalar");
        std::vector<Tensor> adj(nodes_.size());
        std::vector<bool> has(nodes_.size(), false);
        adj[out.id] = Tensor::scalar(1.0);
        has[out.id] = true;

        GradMap grads;
        for (int i = out.id; i >= 0; --i) {
            if (!has[i]) continue;
            TapeNode& n = nodes_[i];
            if (!n.rg) {
                adj[i] = Tensor();
                continue;
            }
            if (n.op == Op::Leaf) {
                grads.emplace(i, std::move(adj[i]));
                continue;
            }
            propagate(n, adj[i], adj, has);
            adj[i] = Tensor();  // release this adjoint
        }
        return grads;
    }

private:
    std::vector<TapeNode> nodes_;

    static std::string shape_str(const Tensor& t) {
        return "[" + std::to_string(t.rows) + "," + std::to_string(t.cols) + "]";
    }

    TapeNode make(Op op, int a, int b = -1) {
        TapeNode n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.rg = nodes_[a].rg || (b >= 0 && nodes_[b].rg);
        return n;
    }

    Var push(TapeNode n) {
        if (!n.val.all_finite())
            throw NumericError(std::string("non-finite output of op ") + op_name(n.op));
        nodes_.push_back(std::move(n));
        return Var{this, size() - 1};
    }

    Var binary_elem(Op op, Var x, Var y) {
        const Tensor& A = val(x.id);
        const Tensor& B = val(y.id);
        if (!A.same_shape(B))
            throw ShapeError(std::string(op_name(op)) + ": shapes differ (" + shape_str(A) + " vs " + shape_str(B) + ")");
        TapeNode n = make(op, x.id, y.id);
        n.val = A;
        const size_t sz = n.val.size();
        switch (op) {
            case Op::Add:
                for (size_t k = 0; k < sz; ++k) n.val.data[k] += B.data[k];
                break;
            case Op::Sub:
                for (size_t k = 0; k < sz; ++k) n.val.data[k] -= B.data[k];
                break;
            case Op::Mul:
                for (size_t k = 0; k < sz; ++k) n.val.data[k] *= B.data[k];
                break;
            default: throw Error("binary_elem: bad op");
        }
        return push(std::move(n));
    }

    template <typename F>
    Var unary(Op op, Var x, F f) {
        TapeNode n = make(op, x.id);
        n.val = val(x.id);
        for (double& v : n.val.data) v = f(v);
        return push(std::move(n));
    }

    void accum(int id, std::vector<Tensor>& adj, std::vector<bool>& has, const Tensor& g) {
        if (!nodes_[id].rg) return;  // constants absorb nothing
        if (!has[id]) {
            adj[id] = g;
            has[id] = true;
        } else {
            double* dst = adj[id].data.data();
            const double* src = g.data.data();
            for (size_t k = 0; k < g.size(); ++k) dst[k] += src[k];
        }
    }

    void propagate(const TapeNode& n, const Tensor& g, std::vector<Tensor>& adj, std::vector<bool>& has) {
        const Tensor& A = nodes_[n.a].val;
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Add:
                accum(n.a, adj, has, g);
                accum(n.b, adj, has, g);
                break;
            case Op::Sub: {
                accum(n.a, adj, has, g);
                if (nodes_[n.b].rg) {
                    Tensor gb = g;
                    for (double& v : gb.data) v = -v;
                    accum(n.b, adj, has, gb);
                }
                break;
            }
            case Op::Mul: {
                const Tensor& B = nodes_[n.b].val;
                if (nodes_[n.a].rg) {
                    Tensor ga = g;
                    for (size_t k = 0; k < ga.size(); ++k) ga.data[k] *= B.data[k];
                    accum(n.a, adj, has, ga);
                }
                if (nodes_[n.b].rg) {
                    Tensor gb = g;
                    for (size_t k = 0; k < gb.size(); ++k) gb.data[k] *= A.data[k];
                    accum(n.b, adj, has, gb);
                }
                break;
            }
            case Op::MatMul: {
                const Tensor& B = nodes_[n.b].val;
                if (nodes_[n.a].rg) {
                    Tensor ga(A.rows, A.cols);
                    detail::emap(ga).noalias() = detail::emap(g) * detail::emap(B).transpose();
                    accum(n.a, adj, has, ga);
                }
                if (nodes_[n.b].rg) {
                    Tensor gb(B.rows, B.cols);
                    detail::emap(gb).noalias() = detail::emap(A).transpose() * detail::emap(g);
                    accum(n.b, adj, has, gb);
                }
                break;
            }
            case Op::Sum: {
                Tensor ga = Tensor::full(A.rows, A.cols, g.data[0]);
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::Mean: {
                Tensor ga = Tensor::full(A.rows, A.cols, g.data[0] / static_cast<double>(A.size()));
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::ColSum: {
                Tensor ga(A.rows, A.cols);
                for (int r = 0; r < A.rows; ++r)
                    for (int c = 0; c < A.cols; ++c) ga(r, c) = g.data[c];
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::ScalarMul: {
                Tensor ga = g;
                for (double& v : ga.data) v *= n.c;
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::ScalarAdd:
                accum(n.a, adj, has, g);
                break;
            case Op::PowConst: {
                Tensor ga = g;
                for (size_t k = 0; k < ga.size(); ++k)
                    ga.data[k] *= n.c * std::pow(A.data[k], n.c - 1.0);
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::PowLearn: {
                const double be = nodes_[n.b].val.data[0];
                if (nodes_[n.a].rg) {
                    Tensor ga = g;
                    for (size_t k = 0; k < ga.size(); ++k)
                        ga.data[k] *= be * std::exp((be - 1.0) * std::log(A.data[k]));
                    accum(n.a, adj, has, ga);
                }
                if (nodes_[n.b].rg) {
                    double s = 0.0;
                    for (size_t k = 0; k < g.size(); ++k)
                        s += g.data[k] * n.val.data[k] * std::log(A.data[k]);
                    accum(n.b, adj, has, Tensor::scalar(s));
                }
                break;
            }
            case Op::Exp: {
                Tensor ga = g;
                for (size_t k = 0; k < ga.size(); ++k) ga.data[k] *= n.val.data[k];
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::Tanh: {
                Tensor ga = g;
                for (size_t k = 0; k < ga.size(); ++k)
                    ga.data[k] *= 1.0 - n.val.data[k] * n.val.data[k];
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::Relu:
            case Op::ClampMin0: {
                Tensor ga = g;
                for (size_t k = 0; k < ga.size(); ++k)
                    if (A.data[k] <= 0.0) ga.data[k] = 0.0;  // subgradient 0 at exactly 0
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::LeakyRelu: {
                Tensor ga = g;
                for (size_t k = 0; k < ga.size(); ++k)
                    if (A.data[k] <= 0.0) ga.data[k] *= kLeakySlope;
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::Abs: {
                Tensor ga = g;
                for (size_t k = 0; k < ga.size(); ++k) {
                    const double v = A.data[k];
                    ga.data[k] *= (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                }
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::ConcatCols: {
                const Tensor& B = nodes_[n.b].val;
                const int ca = n.idx[0];
                if (nodes_[n.a].rg) {
                    Tensor ga(A.rows, ca);
                    for (int r = 0; r < A.rows; ++r)
                        for (int c = 0; c < ca; ++c) ga(r, c) = g(r, c);
                    accum(n.a, adj, has, ga);
                }
                if (nodes_[n.b].rg) {
                    Tensor gb(B.rows, B.cols);
                    for (int r = 0; r < B.rows; ++r)
                        for (int c = 0; c < B.cols; ++c) gb(r, c) = g(r, ca + c);
                    accum(n.b, adj, has, gb);
                }
                break;
            }
            case Op::SliceCols: {
                Tensor ga(A.rows, A.cols);
                const int c0 = n.idx[0], c1 = n.idx[1];
                for (int r = 0; r < A.rows; ++r)
                    for (int c = c0; c < c1; ++c) ga(r, c) = g(r, c - c0);
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::GatherRows: {
                Tensor ga(A.rows, A.cols);
                for (size_t r = 0; r < n.idx.size(); ++r)
                    for (int c = 0; c < A.cols; ++c)
                        ga(n.idx[r], c) += g(static_cast<int>(r), c);
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::ScatterRows: {
                Tensor ga(A.rows, A.cols);
                for (int r = 0; r < A.rows; ++r) {
                    const double wr = n.w.empty() ? 1.0 : n.w[r];
                    for (int c = 0; c < A.cols; ++c) ga(r, c) = wr * g(n.idx[r], c);
                }
                accum(n.a, adj, has, ga);
                break;
            }
            case Op::AddRowVec: {
                accum(n.a, adj, has, g);
                if (nodes_[n.b].rg) {
                    Tensor gb(1, A.cols);
                    for (int r = 0; r < A.rows; ++r)
                        for (int c = 0; c < A.cols; ++c) gb.data[c] += g(r, c);
                    accum(n.b, adj, has, gb);
                }
                break;
            }
        }
    }
};

// --- free-function sugar so expressions read naturally ------------------

inline Var add(Var x, Var y) { return x.tape->add(x, y); }
inline Var sub(Var x, Var y) { return x.tape->sub(x, y); }
inline Var mul(Var x, Var y) { return x.tape->mul(x, y); }
inline Var matmul(Var x, Var y) { return x.tape->matmul(x, y); }
inline Var sum(Var x) { return x.tape->sum(x); }
inline Var mean(Var x) { return x.tape->mean(x); }
inline Var colsum(Var x) { return x.tape->colsum(x); }
inline Var smul(Var x, double c) { return x.tape->smul(x, c); }
inline Var sadd(Var x, double c) { return x.tape->sadd(x, c); }
inline Var pow_const(Var x, double p) { return x.tape->pow_const(x, p); }
inline Var pow_learn(Var x, Var beta) { return x.tape->pow_learn(x, beta); }
inline Var exp(Var x) { return x.tape->exp(x); }
inline Var tanh(Var x) { return x.tape->tanh(x); }
inline Var relu(Var x) { return x.tape->relu(x); }
inline Var leaky_relu(Var x) { return x.tape->leaky_relu(x); }
inline Var clamp_min0(Var x) { return x.tape->clamp_min0(x); }
inline Var abs(Var x) { return x.tape->abs(x); }
inline Var concat_cols(Var x, Var y) { return x.tape->concat_cols(x, y); }
inline Var slice_cols(Var x, int c0, int c1) { return x.tape->slice_cols(x, c0, c1); }
inline Var gather_rows(Var x, std::vector<int> idx) { return x.tape->gather_rows(x, std::move(idx)); }
inline Var scatter_rows(Var x, const std::vector<int>& idx, int rows_out, std::vector<double> w = {}) {
    return x.tape->scatter_rows(x, idx, rows_out, std::move(w));
}
inline Var add_rowvec(Var x, Var v) { return x.tape->add_rowvec(x, v); }

// sigmoid composed from tanh: 0.5 * tanh(x/2) + 0.5
inline Var sigmoid(Var x) { return sadd(smul(tanh(smul(x, 0.5)), 0.5), 0.5); }

}  // namespace abmnn
