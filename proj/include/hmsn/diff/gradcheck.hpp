#pragma once

#include "hmsn/diff/graph.hpp"

#include <functional>
#include <span>

namespace hmsn::diff {

// Builds a scalar from a single input leaf.
using ScalarFn = std::function<Var(Graph&, Var)>;

struct GradCheck {
  double max_rel_error = 0.0;
  Tensor analytic;
  Tensor numeric;
};

// Central differences against backward(). The error of one coordinate is
// |analytic - numeric| / max(1, |analytic|); the maximum is reported.
GradCheck finite_diff_report(const ScalarFn& f, const Tensor& x, double h = 1e-5);
double finite_diff_check(const ScalarFn& f, const Tensor& x, double h = 1e-5);

// Same check on an already-recorded graph by replaying it with a perturbed
// leaf. `coords` selects flat coordinates of the leaf (all if empty).
double finite_diff_check(Graph& g, Var loss, Var leaf, double h = 1e-5,
                         std::span<const Eigen::Index> coords = {});

}  // namespace hmsn::diff
