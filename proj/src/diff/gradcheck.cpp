#include "hmsn/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace hmsn::diff {

namespace {

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

}  // namespace

GradCheck finite_diff_report(const ScalarFn& f, const Tensor& x, double h) {
  GradCheck out;
  {
    Graph g;
    Var leaf = g.parameter(x);
    Var loss = f(g, leaf);
    out.analytic = g.backward(loss).at(leaf.id);
  }
  out.numeric = Tensor::Zero(x.rows(), x.cols());
  auto eval_at = [&](const Tensor& p) {
    Graph g;
    return f(g, g.parameter(p)).scalar();
  };
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Tensor plus = x;
    Tensor minus = x;
    plus.data()[i] += h;
    minus.data()[i] -= h;
    out.numeric.data()[i] = (eval_at(plus) - eval_at(minus)) / (2.0 * h);
    out.max_rel_error = std::max(out.max_rel_error, rel_error(out.analytic.data()[i], out.numeric.data()[i]));
  }
  return out;
}

double finite_diff_check(const ScalarFn& f, const Tensor& x, double h) {
  return finite_diff_report(f, x, h).max_rel_error;
}

double finite_diff_check(Graph& g, Var loss, Var leaf, double h, std::span<const Eigen::Index> coords) {
  g.backward(loss);
  const Tensor analytic = g.adjoint(leaf);
  const Tensor base = leaf.value();
  std::vector<Eigen::Index> all;
  if (coords.empty()) {
    all.resize(static_cast<std::size_t>(base.size()));
    for (Eigen::Index i = 0; i < base.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    coords = all;
  }
  double worst = 0.0;
  for (Eigen::Index i : coords) {
    Tensor p = base;
    p.data()[i] += h;
    g.set_value(leaf, p);
    g.forward();
    const double fp = loss.scalar();
    p.data()[i] = base.data()[i] - h;
    g.set_value(leaf, p);
    g.forward();
    const double fm = loss.scalar();
    worst = std::max(worst, rel_error(analytic.data()[i], (fp - fm) / (2.0 * h)));
  }
  g.set_value(leaf, base);
  g.forward();
  return worst;
}

}  // namespace hmsn::diff
