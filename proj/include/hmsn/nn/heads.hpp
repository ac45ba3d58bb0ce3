#pragma once

#include "hmsn/diff/hyperbolic.hpp"
#include "hmsn/nn/params.hpp"

#include <array>
#include <vector>

namespace hmsn::nn {

using geometry::Curvature;

enum class ProjectorKind { Euclidean, Hyperbolic };

const char* projector_name(ProjectorKind kind);
ProjectorKind parse_projector(const std::string& name);

using HeadDims = std::array<int, 3>;

// Euclidean head: BN -> linear -> GELU -> BN -> linear -> GELU -> linear.
void init_euclid_head(ParamSet& params, int in_dim, const HeadDims& dims, Rng& rng);

struct BatchStats {
  Tensor mean;  // 1 x n
  Tensor var;   // 1 x n, biased
};

// In train mode normalizes with batch statistics (needs >= 2 rows) and
// appends them to `stats` when given; in eval mode uses the running buffers.
diff::Var euclid_head(Binder& bind, diff::Var z, bool train, std::vector<BatchStats>* stats = nullptr);

// Folds batch statistics into the running buffers of `params`.
void update_running_stats(ParamSet& params, const std::vector<BatchStats>& stats, double momentum);

// Hyperbolic head: three Mobius linear layers with hyperbolic ReLU between.
// With tangent_norm, the inputs of the first two layers are batch-normalized
// in the tangent space at the origin (same parameter names as euclid_head).
void init_hyp_head(ParamSet& params, int in_dim, const HeadDims& dims, Rng& rng, bool tangent_norm = false);

// exp_0(log_0(x) W) (+) b, re-projected. x is m x in, W in x out, b 1 x out.
diff::Var hyp_linear(diff::Var x, diff::Var weight, diff::Var bias, const Curvature& k);
diff::Var hyp_relu(diff::Var x, const Curvature& k);
// Normalization runs only when the bound parameters carry it; `train` and
// `stats` then behave as in euclid_head.
diff::Var hyp_head(Binder& bind, diff::Var x, const Curvature& k, bool train = true,
                   std::vector<BatchStats>* stats = nullptr);

}  // namespace hmsn::nn
