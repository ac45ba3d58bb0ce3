#include "hmsn/harness/model.hpp"

#include "hmsn/errors.hpp"
#include "hmsn/harness/views.hpp"

namespace hmsn::harness {

using diff::Var;

prototypes::BankMode bank_mode_for(Method method) {
  switch (method) {
    case Method::Msn: return prototypes::BankMode::LearnableEuclidean;
    case Method::Hmsn: return prototypes::BankMode::LearnableBall;
    case Method::HmsnIp: return prototypes::BankMode::IdealBoundary;
  }
  return prototypes::BankMode::LearnableBall;
}

prototypes::BankMode Model::bank_mode() const { return bank_mode_for(config.method); }

prototypes::PrototypeBank Model::bank() const {
  prototypes::PrototypeBank b;
  b.mode = bank_mode();
  b.vectors = protos.at("proto");
  b.curvature = config.ball();
  return b;
}

Model init_model(const RunConfig& config) {
  config.validate(false);
  Model m;
  m.config = config;
  Rng rng = derive_rng(config.seed, 0, 1);
  nn::init_encoder(m.anchor, config.encoder, rng);
  if (config.method == Method::Msn || config.projector == nn::ProjectorKind::Euclidean)
    nn::init_euclid_head(m.anchor, config.encoder.out_dim, config.head_dims(), rng);
  else
    nn::init_hyp_head(m.anchor, config.encoder.out_dim, config.head_dims(), rng, config.head_norm);
  m.target = m.anchor;

  Rng prng = derive_rng(config.seed, 0, 2);
  switch (m.bank_mode()) {
    case prototypes::BankMode::LearnableEuclidean:
      m.protos.add("proto", prototypes::init_euclidean(config.prototypes, config.dim, prng, 1.0).vectors);
      break;
    case prototypes::BankMode::LearnableBall:
      m.protos.add("proto", prototypes::init_learnable(config.prototypes, config.dim, prng, 0.01, config.ball()).vectors,
                   nn::ParamKind::Ball);
      break;
    case prototypes::BankMode::IdealBoundary:
      m.protos.add("proto", prototypes::place_ideal(config.prototypes, config.dim, prng, config.placement).vectors,
                   nn::ParamKind::Buffer);
      break;
  }
  return m;
}

Var embed(nn::Binder& bind, const RunConfig& c, std::span<const nn::TokenView> views, bool train,
          std::vector<nn::BatchStats>* stats) {
  Var z = nn::encode(bind, c.encoder, views);
  const geometry::Curvature k = c.ball();
  if (c.method == Method::Msn) return nn::euclid_head(bind, z, train, stats);
  if (c.projector == nn::ProjectorKind::Hyperbolic)
    return nn::hyp_head(bind, diff::exp_map0(diff::clip_euclidean(z, c.clip_radius), k), k, train, stats);
  return diff::exp_map0(diff::clip_euclidean(nn::euclid_head(bind, z, train, stats), c.clip_radius), k);
}

Var predict(Var h, Var protos, const RunConfig& c, double tau) {
  switch (c.method) {
    case Method::Msn: return objective::predict_euclid(h, protos, tau);
    case Method::Hmsn: return objective::predict_hyper(h, protos, tau, c.ball());
    case Method::HmsnIp: return objective::predict_ideal(h, protos, tau);
  }
  throw Error("unknown method");
}

Pipeline eval_pipeline(const RunConfig& c) {
  return c.projector == nn::ProjectorKind::Hyperbolic ? Pipeline::Hyper : Pipeline::Euclid;
}

Representations extract_representations(const Model& model, const Dataset& data, Pipeline pipeline, int batch) {
  const RunConfig& c = model.config;
  if (data.height != c.encoder.image_size || data.width != c.encoder.image_size || data.channels != c.encoder.channels)
    throw ShapeError("dataset images do not match the checkpoint's encoder");
  if (!model.target.same_structure(model.anchor)) throw Error("checkpoint target and anchor networks differ");
  Representations out;
  out.pipeline = pipeline;
  out.labels = data.labels;
  out.reps.resize(static_cast<Eigen::Index>(data.size()), c.encoder.out_dim);
  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(data.size(), start + static_cast<std::size_t>(batch));
    std::vector<nn::TokenView> views;
    for (std::size_t i = start; i < end; ++i) views.push_back(full_view(data.image(i), c.encoder.patch_size));
    diff::Graph g;
    nn::Binder bind(g, model.target, false);
    Var z = nn::encode(bind, c.encoder, views);
    if (pipeline == Pipeline::Hyper) z = diff::exp_map0(diff::clip_euclidean(z, c.clip_radius), c.ball());
    out.reps.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) = z.value();
  }
  return out;
}

optim::OptimizerSet make_optimizer(const RunConfig& c) {
  optim::AdamConfig euclid{c.optim.lr, 0.9, 0.999, 1e-8, c.optim.weight_decay};
  optim::AdamConfig ball{c.optim.proto_lr, 0.9, 0.999, 1e-8, 0.0};
  return optim::OptimizerSet(euclid, ball, c.ball());
}

TrainState init_state(const RunConfig& config) {
  TrainState s;
  s.model = init_model(config);
  s.optimizer = make_optimizer(config);
  return s;
}

}  // namespace hmsn::harness
