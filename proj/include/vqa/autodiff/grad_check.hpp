#pragma once

#include "vqa/autodiff/tensor.hpp"

#include <functional>
#include <span>

namespace vqa::ad {

// Builds a scalar loss on the given tape. Must be deterministic (run models
// with dropout disabled).
using LossFunction = std::function<Tensor(Tape&)>;

struct GradCheckResult {
    // max over entries of |analytic - numeric| / max(1, |numeric|)
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    // Entries whose +h and -h evaluations took different relu branches; the
    // central difference is meaningless across a kink so they are left out.
    std::size_t skipped_at_kinks = 0;
};

// Compares reverse-mode gradients of f against central finite differences
// for every entry of every parameter. Leaves parameter values unchanged and
// parameter gradients holding the analytic result.
GradCheckResult grad_check(const LossFunction& f, std::span<Tensor> params, double h = 1e-5);

}  // namespace vqa::ad
