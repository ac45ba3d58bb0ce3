#pragma once

// Row-wise Poincare-ball operations on the tape. Each row of an operand is
// one point; the composite maps are expressed in elementary ops so backward()
// differentiates them without hand-written Jacobians.

#include "hmsn/diff/graph.hpp"
#include "hmsn/geometry.hpp"

namespace hmsn::diff {

using geometry::Curvature;

Var row_sq(Var x);                // m x 1
Var row_dot(Var a, Var b);        // m x 1
Var safe_norm(Var x, double zero_eps);

Var conformal_factor(Var x, const Curvature& k);
Var project_to_ball(Var x, const Curvature& k);
Var clip_euclidean(Var x, double radius, double zero_eps = 1e-12);

Var mobius_add(Var v, Var w, const Curvature& k);
Var exp_map0(Var x, const Curvature& k);
Var log_map0(Var x, const Curvature& k);
Var exp_map(Var x, Var base, const Curvature& k);
Var log_map(Var x, Var base, const Curvature& k);
Var distance(Var x, Var y, const Curvature& k);  // m x 1

// Unit-ball Busemann function of ideal points q at points z, row-wise.
Var busemann(Var q, Var z);

// B x K tables between B points z and K prototypes q.
Var pairwise_distance(Var z, Var q, const Curvature& k);
Var pairwise_busemann(Var q, Var z);

}  // namespace hmsn::diff
