#include "hmsn/harness/evaluate.hpp"

namespace hmsn::harness {

eval::ProbeKind default_probe(Pipeline pipeline) {
  return pipeline == Pipeline::Hyper ? eval::ProbeKind::HyperbolicTangent : eval::ProbeKind::Euclidean;
}

eval::EvalReport evaluate(const Model& model, const Dataset& data, const EvalRequest& request) {
  const Pipeline pipeline = request.pipeline.value_or(eval_pipeline(model.config));
  const Representations reps = extract_representations(model, data, pipeline);
  eval::ProbeConfig pc;
  pc.kind = request.probe.value_or(default_probe(pipeline));
  pc.classes = data.classes;
  pc.label_fraction = request.label_fraction;
  pc.curvature = model.config.ball();
  const eval::Split split = eval::low_shot_split(reps.labels, request.label_fraction, request.seed);
  eval::EvalReport report = eval::train_probe(reps.reps, reps.labels, split, pc, request.seed).report;
  report.config_hash = model.config.hash();
  return report;
}

}  // namespace hmsn::harness
