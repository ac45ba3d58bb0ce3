#pragma once

// Prediction distributions over prototypes and the MSN-family losses.
//
// Plain overloads work on single vectors and validate their inputs; the Var
// overloads operate on batches (one row per view) inside a graph and are what
// training differentiates.

#include "hmsn/diff/hyperbolic.hpp"
#include "hmsn/prototypes.hpp"

#include <span>
#include <vector>

namespace hmsn::objective {

using geometry::Curvature;
using prototypes::PrototypeBank;

struct Prediction {
  Vec probs;

  // Throws unless entries are nonnegative and sum to 1 within 1e-9.
  void validate() const;
  double entropy() const;
};

struct Temperatures {
  double tau = 0.1;
  double tau_plus = 0.025;

  void validate() const;
};

struct LossWeights {
  double lambda = 1.0;  // mean-entropy (me-max) weight
  double beta = 0.1;    // per-anchor entropy weight

  void validate() const;
};

constexpr double kProbFloor = 1e-12;

Prediction predict_euclid(const Vec& z, const PrototypeBank& bank, double tau);
Prediction predict_hyper(const Vec& z, const PrototypeBank& bank, double tau, const Curvature& k);
Prediction predict_ideal(const Vec& z, const PrototypeBank& bank, double tau);

double cross_entropy(const Prediction& target, const Prediction& anchor);
double mean_entropy(std::span<const Prediction> anchors);

struct LossBreakdown {
  double total = 0.0;
  double cross_entropy = 0.0;
  double mean_entropy = 0.0;    // H(mean anchor prediction)
  double anchor_entropy = 0.0;  // mean of per-anchor entropies
};

// Anchors are grouped by target: anchor i*M + m pairs with target i.
LossBreakdown msn_loss(std::span<const Prediction> targets, std::span<const Prediction> anchors,
                       const LossWeights& weights);
LossBreakdown hmsn_ip_loss(std::span<const Prediction> targets, std::span<const Prediction> anchors,
                           const LossWeights& weights);

// --- batched graph versions -------------------------------------------------

// z: B x d, q: K x d. Return B x K probabilities.
diff::Var predict_euclid(diff::Var z, diff::Var q, double tau);
diff::Var predict_hyper(diff::Var z, diff::Var q, double tau, const Curvature& k);
diff::Var predict_ideal(diff::Var z, diff::Var q, double tau);

struct LossVars {
  diff::Var total;
  diff::Var cross_entropy;
  diff::Var mean_entropy;
  diff::Var anchor_entropy;

  LossBreakdown values() const;
};

// targets: B x K (detached by the caller), anchors: (M*B) x K.
LossVars msn_loss(diff::Var targets, diff::Var anchors, const LossWeights& weights);
LossVars hmsn_ip_loss(diff::Var targets, diff::Var anchors, const LossWeights& weights);

}  // namespace hmsn::objective
