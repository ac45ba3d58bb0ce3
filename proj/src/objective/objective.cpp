#include "hmsn/objective.hpp"

#include "hmsn/errors.hpp"

#include <cmath>

namespace hmsn::objective {

using diff::Var;

void Prediction::validate() const {
  if (probs.size() == 0 || !probs.allFinite()) throw Error("prediction is empty or non-finite");
  if (probs.minCoeff() < 0.0) throw Error("prediction has negative entries");
  if (std::abs(probs.sum() - 1.0) > 1e-9) throw Error("prediction does not sum to 1");
}

double Prediction::entropy() const {
  double h = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) h -= probs[k] * std::log(std::max(probs[k], kProbFloor));
  return h;
}

void Temperatures::validate() const {
  if (!(tau > 0.0 && tau < 1.0) || !(tau_plus > 0.0 && tau_plus < 1.0))
    throw ConfigError("temperatures must lie in (0, 1)");
  if (!(tau_plus < tau)) throw ConfigError("target temperature must be below the anchor temperature");
}

void LossWeights::validate() const {
  if (!std::isfinite(lambda) || !std::isfinite(beta) || lambda < 0.0 || beta < 0.0)
    throw ConfigError("loss weights must be finite and nonnegative");
}

namespace {

Prediction softmax(const Vec& logits) {
  Prediction p;
  p.probs = (logits.array() - logits.maxCoeff()).exp();
  p.probs /= p.probs.sum();
  return p;
}

void check_dims(const Vec& z, const PrototypeBank& bank) {
  if (z.size() != bank.dim()) throw ShapeError("representation and prototype dimensions differ");
  if (bank.size() < 2) throw ConfigError("a prototype bank needs K > 1 prototypes");
}

}  // namespace

Prediction predict_euclid(const Vec& z, const PrototypeBank& bank, double tau) {
  check_dims(z, bank);
  const double zn = z.norm();
  if (zn == 0.0) throw Error("predict_euclid: zero representation");
  Vec logits(bank.size());
  for (int k = 0; k < bank.size(); ++k) {
    const Vec q = row_of(bank.vectors, k);
    const double qn = q.norm();
    if (qn == 0.0) throw Error("predict_euclid: zero prototype");
    logits[k] = z.dot(q) / (zn * qn) / tau;
  }
  return softmax(logits);
}

Prediction predict_hyper(const Vec& z, const PrototypeBank& bank, double tau, const Curvature& k) {
  check_dims(z, bank);
  Vec logits(bank.size());
  for (int j = 0; j < bank.size(); ++j) logits[j] = -geometry::distance(z, row_of(bank.vectors, j), k) / tau;
  return softmax(logits);
}

Prediction predict_ideal(const Vec& z, const PrototypeBank& bank, double tau) {
  check_dims(z, bank);
  Vec logits(bank.size());
  for (int j = 0; j < bank.size(); ++j) logits[j] = -prototypes::busemann(row_of(bank.vectors, j), z) / tau;
  return softmax(logits);
}

double cross_entropy(const Prediction& target, const Prediction& anchor) {
  if (target.probs.size() != anchor.probs.size()) throw ShapeError("cross_entropy: size mismatch");
  double h = 0.0;
  for (Eigen::Index k = 0; k < target.probs.size(); ++k)
    h -= target.probs[k] * std::log(std::max(anchor.probs[k], kProbFloor));
  return h;
}

double mean_entropy(std::span<const Prediction> anchors) {
  if (anchors.empty()) throw Error("mean_entropy: no predictions");
  Prediction mean;
  mean.probs = Vec::Zero(anchors.front().probs.size());
  for (const Prediction& p : anchors) mean.probs += p.probs;
  mean.probs /= static_cast<double>(anchors.size());
  return mean.entropy();
}

namespace {

LossBreakdown combine(std::span<const Prediction> targets, std::span<const Prediction> anchors,
                      const LossWeights& w, bool with_anchor_entropy) {
  w.validate();
  if (targets.empty() || anchors.size() % targets.size() != 0)
    throw ShapeError("anchor predictions must pair with targets as M per target");
  const std::size_t m = anchors.size() / targets.size();
  LossBreakdown out;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    out.cross_entropy += cross_entropy(targets[i / m], anchors[i]);
    out.anchor_entropy += anchors[i].entropy();
  }
  out.cross_entropy /= static_cast<double>(anchors.size());
  out.anchor_entropy /= static_cast<double>(anchors.size());
  out.mean_entropy = mean_entropy(anchors);
  out.total = out.cross_entropy - w.lambda * out.mean_entropy;
  if (with_anchor_entropy) out.total += w.beta * out.anchor_entropy;
  return out;
}

}  // namespace

LossBreakdown msn_loss(std::span<const Prediction> targets, std::span<const Prediction> anchors,
                       const LossWeights& weights) {
  return combine(targets, anchors, weights, false);
}

LossBreakdown hmsn_ip_loss(std::span<const Prediction> targets, std::span<const Prediction> anchors,
                           const LossWeights& weights) {
  return combine(targets, anchors, weights, true);
}

// --- graph versions ----------------------------------------------------------

Var predict_euclid(Var z, Var q, double tau) {
  Var zn = div_col(z, diff::safe_norm(z, 1e-12));
  Var qn = div_col(q, diff::safe_norm(q, 1e-12));
  return softmax_rows(matmul_nt(zn, qn) * (1.0 / tau));
}

Var predict_hyper(Var z, Var q, double tau, const Curvature& k) {
  return softmax_rows(diff::pairwise_distance(z, q, k) * (-1.0 / tau));
}

Var predict_ideal(Var z, Var q, double tau) {
  return softmax_rows(diff::pairwise_busemann(q, z) * (-1.0 / tau));
}

LossBreakdown LossVars::values() const {
  return {total.scalar(), cross_entropy.scalar(), mean_entropy.scalar(), anchor_entropy.scalar()};
}

namespace {

Var entropy_rows(Var p) { return -row_sum(p * log(max_scalar(p, kProbFloor))); }

LossVars combine(Var targets, Var anchors, const LossWeights& w, bool with_anchor_entropy) {
  w.validate();
  const int b = static_cast<int>(targets.rows());
  const int n = static_cast<int>(anchors.rows());
  if (b == 0 || n % b != 0 || targets.cols() != anchors.cols())
    throw ShapeError("anchor predictions must pair with targets as M per target");
  const int m = n / b;
  std::vector<int> pair(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pair[static_cast<std::size_t>(i)] = i / m;

  LossVars out;
  Var tgt = gather_rows(targets, std::move(pair));
  out.cross_entropy = mean(-row_sum(tgt * log(max_scalar(anchors, kProbFloor))));
  out.mean_entropy = sum(entropy_rows(col_mean(anchors)));
  out.anchor_entropy = mean(entropy_rows(anchors));
  out.total = out.cross_entropy - out.mean_entropy * w.lambda;
  if (with_anchor_entropy) out.total = out.total + out.anchor_entropy * w.beta;
  return out;
}

}  // namespace

LossVars msn_loss(Var targets, Var anchors, const LossWeights& weights) {
  return combine(targets, anchors, weights, false);
}

LossVars hmsn_ip_loss(Var targets, Var anchors, const LossWeights& weights) {
  return combine(targets, anchors, weights, true);
}

}  // namespace hmsn::objective
