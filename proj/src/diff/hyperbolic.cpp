#include "hmsn/diff/hyperbolic.hpp"

namespace hmsn::diff {

namespace {

// Row indices that repeat each of `b` rows `k` times (outer) or tile `k`
// rows `b` times (inner); together they enumerate all B x K pairs row-major.
std::vector<int> repeat_each(int b, int k) {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(b) * k);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < k; ++j) idx.push_back(i);
  return idx;
}

std::vector<int> tile(int b, int k) {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(b) * k);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < k; ++j) idx.push_back(j);
  return idx;
}

}  // namespace

Var row_sq(Var x) { return row_sum(x * x); }

Var row_dot(Var a, Var b) { return row_sum(a * b); }

Var safe_norm(Var x, double zero_eps) { return sqrt(max_scalar(row_sq(x), zero_eps * zero_eps)); }

Var conformal_factor(Var x, const Curvature& k) {
  return 2.0 / (1.0 - row_sq(x) * k.c);
}

Var project_to_ball(Var x, const Curvature& k) {
  Var n = safe_norm(x, k.zero_eps);
  Var scale = min_scalar(k.max_norm() / n, 1.0);
  return mul_col(x, scale);
}

Var clip_euclidean(Var x, double radius, double zero_eps) {
  Var n = safe_norm(x, zero_eps);
  return mul_col(x, min_scalar(radius / n, 1.0));
}

Var mobius_add(Var v, Var w, const Curvature& k) {
  const double c = k.c;
  Var vw = row_dot(v, w);
  Var v2 = row_sq(v);
  Var w2 = row_sq(w);
  Var coef_v = 1.0 + vw * (2.0 * c) + w2 * c;
  Var coef_w = 1.0 - v2 * c;
  Var den = 1.0 + vw * (2.0 * c) + (v2 * w2) * (c * c);
  Var num = mul_col(v, coef_v) + mul_col(w, coef_w);
  return project_to_ball(div_col(num, den), k);
}

Var exp_map0(Var x, const Curvature& k) {
  const double sc = k.sqrt_c();
  Var n = safe_norm(x, k.zero_eps);
  Var scale = tanh(n * sc) / (n * sc);
  return project_to_ball(mul_col(x, scale), k);
}

Var log_map0(Var x, const Curvature& k) {
  const double sc = k.sqrt_c();
  Var n = safe_norm(x, k.zero_eps);
  Var scale = atanh(n * sc) / (n * sc);
  return mul_col(x, scale);
}

Var exp_map(Var x, Var base, const Curvature& k) {
  const double sc = k.sqrt_c();
  Var lambda = conformal_factor(base, k);
  Var n = safe_norm(x, k.zero_eps);
  Var scale = tanh(lambda * n * (sc / 2.0)) / (n * sc);
  return mobius_add(base, project_to_ball(mul_col(x, scale), k), k);
}

Var log_map(Var x, Var base, const Curvature& k) {
  const double sc = k.sqrt_c();
  Var u = mobius_add(-base, x, k);
  Var n = safe_norm(u, k.zero_eps);
  Var lambda = conformal_factor(base, k);
  Var scale = (atanh(n * sc) * (2.0 / sc)) / (lambda * n);
  return mul_col(u, scale);
}

Var distance(Var x, Var y, const Curvature& k) {
  const double sc = k.sqrt_c();
  Var n = safe_norm(mobius_add(-x, y, k), k.zero_eps);
  return atanh(n * sc) * (2.0 / sc);
}

Var busemann(Var q, Var z) {
  Var diff = q - z;
  return log(row_sq(diff)) - log(1.0 - row_sq(z));
}

Var pairwise_distance(Var z, Var q, const Curvature& k) {
  const int b = static_cast<int>(z.rows());
  const int kk = static_cast<int>(q.rows());
  Var zs = gather_rows(z, repeat_each(b, kk));
  Var qs = gather_rows(q, tile(b, kk));
  return reshape(distance(zs, qs, k), b, kk);
}

Var pairwise_busemann(Var q, Var z) {
  const int b = static_cast<int>(z.rows());
  const int kk = static_cast<int>(q.rows());
  Var zs = gather_rows(z, repeat_each(b, kk));
  Var qs = gather_rows(q, tile(b, kk));
  return reshape(busemann(qs, zs), b, kk);
}

}  // namespace hmsn::diff
