#pragma once

#include <vector>

#include "abmnn/tape.hpp"
#include "abmnn/tensor.hpp"

namespace abmnn {

// Persistent parameter storage. Tapes are rebuilt every rollout, so
// parameters live here and are re-registered as differentiable leaves via
// bind(). Handles (plain ints) stay stable for the life of the store.
class Params {
public:
    int create(Tensor init) {
        values_.push_back(std::move(init));
        ids_.push_back(-1);
        return static_cast<int>(values_.size()) - 1;
    }

    int count() const { return static_cast<int>(values_.size()); }

    Tensor& value(int p) { return values_[p]; }
    const Tensor& value(int p) const { return values_[p]; }

    // Push every parameter onto the tape as a differentiable leaf.
    void bind(Tape& tape) {
        tape_ = &tape;
        for (int p = 0; p < count(); ++p) ids_[p] = tape.leaf(values_[p], true).id;
    }

    int tape_id(int p) const { return ids_[p]; }

    // Handle usable in expressions on the currently bound tape.
    Var var(int p) const { return Var{tape_, ids_[p]}; }

    // Gradient lookup after backward(); nullptr when the parameter did not
    // participate (absent entries mean zero).
    const Tensor* grad_of(int p, const GradMap& grads) const {
        auto it = grads.find(ids_[p]);
        return it == grads.end() ? nullptr : &it->second;
    }

private:
    std::vector<Tensor> values_;
    std::vector<int> ids_;
    Tape* tape_ = nullptr;
};

}  // namespace abmnn
