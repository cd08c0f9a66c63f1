#pragma once

#include <functional>
#include <span>

#include "melseq/ad/ops.hpp"

namespace melseq::ad {

// Scalar-valued function of one tensor, rebuilt on a fresh tape per call.
using ScalarFn = std::function<Var(Tape&, const Var&)>;

// Max over components of |analytic - central difference| /
// max(|analytic|, |numeric|, floor), with the floor scaled to the
// finite-difference noise level of f. Throws on non-finite f(x).
real grad_check(const ScalarFn& f, const Var& x, real eps = 1e-5);

// Same check against every tensor in `params`; the function closes over them.
real grad_check_params(const std::function<Var(Tape&)>& f, std::span<const Var> params,
                       real eps = 1e-5);

}  // namespace melseq::ad
