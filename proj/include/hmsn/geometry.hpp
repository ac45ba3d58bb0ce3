#pragma once

// Poincare ball of curvature -c: conformal factor, Mobius addition,
// exponential / logarithm maps and geodesic distance, all in double
// precision and re-projected a margin away from the boundary.

#include "hmsn/tensor.hpp"

namespace hmsn::geometry {

struct Curvature {
  double c = 1.0;
  double ball_eps = 1e-5;   // outputs satisfy sqrt(c)*|x| <= 1 - ball_eps
  double zero_eps = 1e-12;  // norms below this are treated as the origin

  Curvature() = default;
  explicit Curvature(double c_, double ball_eps_ = 1e-5, double zero_eps_ = 1e-12);

  double sqrt_c() const;
  // Largest Euclidean norm an output point may have.
  double max_norm() const;
};

// Throws BoundaryViolation unless c*|x|^2 < 1.
void check_in_ball(const Vec& x, const Curvature& k, const char* what = "point");
bool in_ball(const Vec& x, const Curvature& k);

double conformal_factor(const Vec& x, const Curvature& k);

Vec mobius_add(const Vec& v, const Vec& w, const Curvature& k);

// exp_v(x): tangent vector x at base v onto the ball.
Vec exp_map(const Vec& x, const Vec& base, const Curvature& k);
Vec exp_map0(const Vec& x, const Curvature& k);

// log_v(x): ball point x into the tangent space at base v.
Vec log_map(const Vec& x, const Vec& base, const Curvature& k);
Vec log_map0(const Vec& x, const Curvature& k);

double distance(const Vec& x, const Vec& y, const Curvature& k);

Vec clip_euclidean(const Vec& x, double radius);

Vec project_to_ball(const Vec& x, const Curvature& k);

}  // namespace hmsn::geometry
