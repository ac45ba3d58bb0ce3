#include "hmsn/geometry.hpp"

#include "hmsn/errors.hpp"

#include <cmath>
#include <sstream>

namespace hmsn::geometry {

Curvature::Curvature(double c_, double ball_eps_, double zero_eps_)
    : c(c_), ball_eps(ball_eps_), zero_eps(zero_eps_) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("curvature c must be positive and finite");
  if (!(ball_eps > 0.0 && ball_eps <= 1e-3)) throw ConfigError("ball_eps must lie in (0, 1e-3]");
  if (!(zero_eps > 0.0 && zero_eps <= 1e-9)) throw ConfigError("zero_eps must lie in (0, 1e-9]");
}

double Curvature::sqrt_c() const { return std::sqrt(c); }

double Curvature::max_norm() const { return (1.0 - ball_eps) / sqrt_c(); }

bool in_ball(const Vec& x, const Curvature& k) {
  return x.allFinite() && k.c * x.squaredNorm() < 1.0;
}

void check_in_ball(const Vec& x, const Curvature& k, const char* what) {
  if (!in_ball(x, k)) {
    std::ostringstream os;
    os << what << " is not inside the Poincare ball: c*|x|^2 = " << k.c * x.squaredNorm();
    throw BoundaryViolation(os.str());
  }
}

double conformal_factor(const Vec& x, const Curvature& k) {
  check_in_ball(x, k);
  return 2.0 / (1.0 - k.c * x.squaredNorm());
}

Vec project_to_ball(const Vec& x, const Curvature& k) {
  const double n = x.norm();
  const double limit = k.max_norm();
  if (n <= limit) return x;
  Vec out = x * (limit / n);
  // Rounding can leave the rescaled norm one ulp above the limit.
  while (out.norm() > limit) out *= (1.0 - 1e-16);
  return out;
}

Vec clip_euclidean(const Vec& x, double radius) {
  const double n = x.norm();
  if (n <= radius) return x;
  return x * (radius / n);
}

Vec mobius_add(const Vec& v, const Vec& w, const Curvature& k) {
  check_in_ball(v, k, "mobius_add lhs");
  check_in_ball(w, k, "mobius_add rhs");
  const double c = k.c;
  const double vw = v.dot(w);
  const double v2 = v.squaredNorm();
  const double w2 = w.squaredNorm();
  const double den = 1.0 + 2.0 * c * vw + c * c * v2 * w2;
  if (std::abs(den) < 1e-15) throw DenominatorUnderflow("mobius_add denominator below 1e-15");
  Vec num = (1.0 + 2.0 * c * vw + c * w2) * v + (1.0 - c * v2) * w;
  return project_to_ball(num / den, k);
}

Vec exp_map(const Vec& x, const Vec& base, const Curvature& k) {
  check_in_ball(base, k, "exp_map base");
  const double n = x.norm();
  if (n < k.zero_eps) return base;
  const double sc = k.sqrt_c();
  const double lambda = conformal_factor(base, k);
  Vec step = project_to_ball((std::tanh(sc * lambda * n / 2.0) / (sc * n)) * x, k);
  return mobius_add(base, step, k);
}

Vec exp_map0(const Vec& x, const Curvature& k) { return exp_map(x, Vec::Zero(x.size()), k); }

Vec log_map(const Vec& x, const Vec& base, const Curvature& k) {
  check_in_ball(x, k, "log_map point");
  check_in_ball(base, k, "log_map base");
  const Vec u = mobius_add(-base, x, k);
  const double n = u.norm();
  if (n < k.zero_eps) return Vec::Zero(x.size());
  const double sc = k.sqrt_c();
  const double lambda = conformal_factor(base, k);
  return (2.0 / (sc * lambda)) * std::atanh(sc * n) * (u / n);
}

Vec log_map0(const Vec& x, const Curvature& k) { return log_map(x, Vec::Zero(x.size()), k); }

double distance(const Vec& x, const Vec& y, const Curvature& k) {
  const double n = mobius_add(-x, y, k).norm();
  const double sc = k.sqrt_c();
  return 2.0 / sc * std::atanh(sc * n);
}

}  // namespace hmsn::geometry
