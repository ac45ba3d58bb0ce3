#pragma once

// Frozen-representation evaluation: linear probes, stratified low-shot
// splits, Gromov delta and prototype norm traces.

#include "hmsn/geometry.hpp"
#include "hmsn/prototypes.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hmsn::eval {

using geometry::Curvature;

enum class ProbeKind { Euclidean, HyperbolicTangent };

const char* probe_name(ProbeKind kind);
ProbeKind parse_probe(const std::string& name);

struct ProbeConfig {
  ProbeKind kind = ProbeKind::HyperbolicTangent;
  int classes = 0;
  int epochs = 500;
  double lr = 0.05;
  double weight_decay = 1e-3;
  double label_fraction = 0.01;
  Curvature curvature{};

  void validate() const;
};

struct Split {
  std::vector<int> train;
  std::vector<int> eval;
};

// Per class, ceil(fraction * n_class) indices drawn without replacement go to
// train; everything else goes to eval. Both lists are sorted.
Split low_shot_split(std::span<const int> labels, double fraction, std::uint64_t seed);

struct EvalReport {
  double top1 = 0.0;                // percent
  std::vector<double> per_class;    // percent; NaN-free, 0 for classes absent from eval
  std::string split;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::string to_json() const;
};

struct Probe {
  ProbeKind kind = ProbeKind::Euclidean;
  Curvature curvature{};
  Vec mean;       // feature standardization fitted on the training split
  Vec scale;
  Tensor weight;  // d x C
  Tensor bias;    // 1 x C

  // Features the linear layer sees: log_0(z) for the tangent probe, z
  // otherwise, then standardized.
  Tensor features(const Tensor& reps) const;
  Tensor logits(const Tensor& reps) const;
  std::vector<int> predict(const Tensor& reps) const;
};

struct ProbeResult {
  Probe probe;
  EvalReport report;
};

// Softmax regression trained full-batch with Adam from zero init on
// split.train, scored on split.eval.
ProbeResult train_probe(const Tensor& reps, std::span<const int> labels, const Split& split,
                        const ProbeConfig& config, std::uint64_t seed = 0);

// Largest four-point delta over `samples` random 4-tuples. The metric is the
// geodesic distance when `ball` is given, Euclidean otherwise.
double delta_hyperbolicity(const Tensor& points, int samples, std::uint64_t seed,
                           std::optional<Curvature> ball = std::nullopt);
// Same maximum over every 4-subset.
double delta_exhaustive(const Tensor& points, std::optional<Curvature> ball = std::nullopt);

std::vector<double> prototype_norm_trace(std::span<const prototypes::PrototypeBank> banks);

}  // namespace hmsn::eval
