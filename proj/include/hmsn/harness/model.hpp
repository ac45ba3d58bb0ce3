#pragma once

#include "hmsn/harness/config.hpp"
#include "hmsn/harness/dataset.hpp"
#include "hmsn/nn/encoder.hpp"
#include "hmsn/nn/heads.hpp"
#include "hmsn/optim.hpp"
#include "hmsn/prototypes.hpp"

#include <span>
#include <vector>

namespace hmsn::harness {

// Anchor (trained) and target (EMA) networks share one structure; the
// prototype bank lives in its own set under the single entry "proto".
struct Model {
  RunConfig config;
  nn::ParamSet anchor;
  nn::ParamSet target;
  nn::ParamSet protos;

  prototypes::BankMode bank_mode() const;
  prototypes::PrototypeBank bank() const;
};

prototypes::BankMode bank_mode_for(Method method);

Model init_model(const RunConfig& config);

// Prediction-space embeddings of the views, one row per view.
diff::Var embed(nn::Binder& bind, const RunConfig& config, std::span<const nn::TokenView> views, bool train,
                std::vector<nn::BatchStats>* stats = nullptr);

// B x K prediction table for the configured method.
diff::Var predict(diff::Var embeddings, diff::Var protos, const RunConfig& config, double tau);

enum class Pipeline { Euclid, Hyper };

// Hyper when the projector is hyperbolic: representations are the encoder
// outputs mapped onto the ball, before the head.
Pipeline eval_pipeline(const RunConfig& config);

struct Representations {
  Tensor reps;  // N x encoder.out_dim
  std::vector<int> labels;
  Pipeline pipeline = Pipeline::Euclid;
};

// Unmasked, unaugmented views through the target encoder.
Representations extract_representations(const Model& model, const Dataset& data, Pipeline pipeline,
                                        int batch = 256);

struct TrainState {
  Model model;
  optim::OptimizerSet optimizer;
  long step = 0;
};

optim::OptimizerSet make_optimizer(const RunConfig& config);
TrainState init_state(const RunConfig& config);

}  // namespace hmsn::harness
