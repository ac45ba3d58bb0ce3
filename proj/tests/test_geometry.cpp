#include "hmsn/errors.hpp"
#include "hmsn/geometry.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace hmsn;
using namespace hmsn::geometry;
using namespace testing_support;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Plain-formula oracle for Mobius addition, written independently of the
// library (no projection).
Vec mobius_oracle(const Vec& v, const Vec& w, double c) {
  const double vw = v.dot(w), v2n = v.squaredNorm(), w2n = w.squaredNorm();
  return ((1 + 2 * c * vw + c * w2n) * v + (1 - c * v2n) * w) / (1 + 2 * c * vw + c * c * v2n * w2n);
}

}  // namespace

TEST_CASE("curvature validates its fields") {
  CHECK_THROWS_AS(Curvature(0.0), ConfigError);
  CHECK_THROWS_AS(Curvature(-1.0), ConfigError);
  CHECK_THROWS_AS(Curvature(1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(Curvature(1.0, 1e-2), ConfigError);
  CHECK_THROWS_AS(Curvature(1.0, 1e-5, 1e-6), ConfigError);
  CHECK(Curvature(0.5).max_norm() == doctest::Approx((1 - 1e-5) / std::sqrt(0.5)).epsilon(1e-15));
}

TEST_CASE("conformal factor") {
  const Curvature k(1.0);
  CHECK(conformal_factor(Vec::Zero(5), k) == 2.0);
  CHECK(conformal_factor(v2(0.5, 0), k) == doctest::Approx(2.0 / 0.75).epsilon(1e-15));
  CHECK(conformal_factor(v2(0.5, 0), Curvature(1e-12)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(conformal_factor(v2(1.0, 0), k), BoundaryViolation);
  CHECK_THROWS_AS(conformal_factor(v2(0.8, 0.8), k), BoundaryViolation);
}

TEST_CASE("mobius addition examples") {
  const Curvature k(1.0);
  const Vec w = v2(0.3, 0.1);
  CHECK((mobius_add(Vec::Zero(2), w, k) - w).norm() < 1e-15);
  CHECK(mobius_add(-w, w, k).norm() < 1e-15);
  const Vec lim = mobius_add(v2(0.1, 0), v2(0, 0.2), Curvature(1e-8));
  CHECK(std::abs(lim[0] - 0.1) < 1e-6);
  CHECK(std::abs(lim[1] - 0.2) < 1e-6);
  CHECK_THROWS_AS(mobius_add(v2(1.2, 0), w, k), BoundaryViolation);
}

TEST_CASE("mobius addition matches the closed form oracle") {
  Rng rng = derive_rng(11);
  for (double c : {0.1, 1.0, 3.0}) {
    const Curvature k(c);
    for (int i = 0; i < 500; ++i) {
      const Vec v = ball_point(5, rng, 0.9 / std::sqrt(c));
      const Vec w = ball_point(5, rng, 0.9 / std::sqrt(c));
      CHECK((mobius_add(v, w, k) - mobius_oracle(v, w, c)).norm() < 1e-12);
    }
  }
}

TEST_CASE("exp and log map examples") {
  const Curvature k(1.0);
  CHECK(exp_map0(Vec::Zero(3), k).norm() == 0.0);
  const Vec e = exp_map0(v2(1, 0), k);
  CHECK(e[0] == doctest::Approx(std::tanh(1.0)).epsilon(1e-15));
  CHECK(e[1] == 0.0);
  const Vec small = exp_map0(v2(0.2, 0), Curvature(1e-10));
  CHECK(std::abs(small[0] - 0.2) < 1e-9);
  const Vec l = log_map0(v2(std::tanh(1.0), 0), k);
  CHECK(std::abs(l[0] - 1.0) < 1e-12);
  CHECK(std::abs(l[1]) < 1e-15);
  const Vec base = v2(0.2, -0.4);
  CHECK(log_map(base, base, k).norm() < 1e-12);
  CHECK((exp_map(Vec::Zero(2), base, k) - base).norm() == 0.0);
}

TEST_CASE("general-base exp matches the closed form") {
  const Curvature k(1.0);
  Rng rng = derive_rng(12);
  for (int i = 0; i < 200; ++i) {
    const Vec v = ball_point(4, rng, 0.7);
    const Vec x = gaussian(4, rng, 0.5);
    const double lam = 2.0 / (1.0 - v.squaredNorm());
    const Vec step = std::tanh(lam * x.norm() / 2.0) * x / x.norm();
    CHECK((exp_map(x, v, k) - mobius_oracle(v, step, 1.0)).norm() < 1e-12);
  }
}

TEST_CASE("distance examples and origin consistency") {
  const Curvature k(1.0);
  CHECK(std::abs(distance(Vec::Zero(2), v2(0.5, 0), k) - 1.0986122886681098) < 1e-12);
  CHECK(distance(v2(0.3, 0.2), v2(0.3, 0.2), k) == doctest::Approx(0.0));
  Rng rng = derive_rng(13);
  for (double c : {0.1, 1.0}) {
    const Curvature kc(c);
    for (int i = 0; i < 200; ++i) {
      const Vec x = ball_point(3, rng, 0.95 / std::sqrt(c));
      CHECK(std::abs(distance(Vec::Zero(3), x, kc) - 2 / std::sqrt(c) * std::atanh(std::sqrt(c) * x.norm())) < 1e-10);
    }
  }
}

TEST_CASE("clip and projection") {
  CHECK((clip_euclidean(v2(0.1, 0.1), 2.3) - v2(0.1, 0.1)).norm() == 0.0);
  CHECK((clip_euclidean(v2(6, 8), 5) - v2(3, 4)).norm() < 1e-15);
  const Curvature k(1.0);
  CHECK(project_to_ball(Vec::Zero(3), k).norm() == 0.0);
  const Vec p = project_to_ball(v2(1.5, 0), k);
  CHECK(std::abs(p.norm() - (1 - 1e-5)) < 1e-15);
  Rng rng = derive_rng(14);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = gaussian(4, rng, 3.0);
    const double r = std::uniform_real_distribution<double>(0.1, 4.0)(rng);
    CHECK(clip_euclidean(x, r).norm() <= r * (1 + 1e-15));
    const Vec once = project_to_ball(x, k);
    CHECK(once.norm() <= k.max_norm());
    CHECK((project_to_ball(once, k) - once).norm() == 0.0);
  }
}

TEST_CASE("outputs stay inside the ball for near-boundary inputs") {
  Rng rng = derive_rng(15);
  for (double c : {0.1, 1.0}) {
    const Curvature k(c);
    const double edge = k.max_norm();
    for (int i = 0; i < 2000; ++i) {
      Vec v = gaussian(3, rng);
      v *= edge * (1 - 1e-9 * i) / v.norm();
      const Vec w = ball_point(3, rng, edge);
      CHECK(in_ball(mobius_add(v, w, k), k));
      CHECK(mobius_add(v, w, k).norm() <= edge);
      CHECK(exp_map(gaussian(3, rng, 5.0), v, k).norm() <= edge);
      CHECK(exp_map0(gaussian(3, rng, 50.0), k).norm() <= edge);
    }
  }
}
