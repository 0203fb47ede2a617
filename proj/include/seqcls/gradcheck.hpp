#pragma once

#include <functional>

#include "seqcls/tensor.hpp"

namespace seqcls::ad {

// Central finite differences (f(x+h) - f(x-h)) / 2h for every element of
// theta, compared against the analytic gradient. Returns the maximum relative
// error, with the denominator floored at 1e-6 so that near-zero gradients are
// judged on an absolute scale. Independent of the tape: f is re-evaluated
// from scratch at each perturbed point.
double finite_difference_check(const std::function<double(const Tensor&)>& f, const Tensor& theta,
                               const Tensor& analytic_grad, double h);

} // namespace seqcls::ad
