#pragma once

#include "hmsn/eval.hpp"
#include "hmsn/harness/dataset.hpp"
#include "hmsn/harness/model.hpp"

#include <optional>

namespace hmsn::harness {

struct EvalRequest {
  std::optional<Pipeline> pipeline;        // default: eval_pipeline(config)
  std::optional<eval::ProbeKind> probe;    // default: default_probe(pipeline)
  double label_fraction = 0.01;
  std::uint64_t seed = 0;
};

// Tangent probe for ball representations, Euclidean probe otherwise.
eval::ProbeKind default_probe(Pipeline pipeline);

// Low-shot linear probe on the model's frozen representations of `data`.
eval::EvalReport evaluate(const Model& model, const Dataset& data, const EvalRequest& request = {});

}  // namespace hmsn::harness
