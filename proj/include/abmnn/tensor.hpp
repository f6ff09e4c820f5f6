#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "abmnn/core.hpp"

namespace abmnn {

// Dense row-major 2-D tensor of 64-bit floats. Column vectors are [n,1],
// scalars are [1,1].
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw ShapeError("Tensor: negative dimension");
    }
    Tensor(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != static_cast<size_t>(r) * c)
            throw ShapeError("Tensor: data length does not match shape");
    }

    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }

    static Tensor column(std::vector<double> d) {
        const int n = static_cast<int>(d.size());
        return Tensor(n, 1, std::move(d));
    }

    static Tensor full(int r, int c, double v) {
        Tensor t(r, c);
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    size_t size() const { return data.size(); }
    std::vector<int> shape() const { return {rows, cols}; }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

}  // namespace abmnn
