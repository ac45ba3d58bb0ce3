#pragma once

// AdamW for Euclidean tensors, Riemannian Adam for ball-constrained rows,
// EMA for the target branch, and the learning-rate / momentum schedules.

#include "hmsn/geometry.hpp"
#include "hmsn/nn/params.hpp"

#include <map>
#include <string>

namespace hmsn::optim {

using geometry::Curvature;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  void validate() const;
};

struct AdamState {
  Tensor m;
  Tensor v;
  long step = 0;

  // Zero moments shaped like `like`.
  static AdamState zeros_like(const Tensor& like);
};

// Decoupled weight decay: p <- p - lr*(m_hat/(sqrt(v_hat)+eps) + wd*p).
// `lr` overrides config.lr so schedules can scale it per step.
void adamw_step(Tensor& param, const Tensor& grad, AdamState& state, const AdamConfig& config, double lr);
void adamw_step(Tensor& param, const Tensor& grad, AdamState& state, const AdamConfig& config);

// Each row of `rows` is a ball point. The Euclidean gradient is rescaled by
// the inverse metric, Adam moments are kept as ambient vectors and the step
// is taken along the exponential map at the current point.
void radam_step(Tensor& rows, const Tensor& egrad, AdamState& state, const AdamConfig& config, double lr,
                const Curvature& k);
void radam_step(Tensor& rows, const Tensor& egrad, AdamState& state, const AdamConfig& config,
                const Curvature& k);

// ((1 - c|x|^2) / 2)^2, i.e. 1 / conformal_factor(x)^2.
double inverse_metric_scale(const Vec& x, const Curvature& k);

// target <- m*target + (1-m)*anchor for every non-buffer entry; buffers are
// copied from the anchor.
void ema_update(nn::ParamSet& target, const nn::ParamSet& anchor, double momentum);

struct EmaSchedule {
  double start = 0.996;
  double end = 1.0;

  // Linear ramp over [0, total_steps].
  double at(long step, long total_steps) const;
};

// Linear warmup over the first warmup_fraction of steps, cosine decay to 0.
double lr_schedule(double base_lr, long step, long total_steps, double warmup_fraction = 0.1);

// Per-parameter optimizer state for a whole ParamSet, dispatching on kind.
class OptimizerSet {
 public:
  OptimizerSet() = default;
  OptimizerSet(AdamConfig euclid, AdamConfig ball, Curvature k);

  // `scale` multiplies both base learning rates. Parameters absent from
  // `grads` are left untouched.
  void step(nn::ParamSet& params, const std::map<std::string, Tensor>& grads, double scale);

  std::map<std::string, AdamState>& states() { return states_; }
  const std::map<std::string, AdamState>& states() const { return states_; }
  const AdamConfig& euclid_config() const { return euclid_; }
  const AdamConfig& ball_config() const { return ball_; }

 private:
  AdamConfig euclid_;
  AdamConfig ball_;
  Curvature curvature_;
  std::map<std::string, AdamState> states_;
};

}  // namespace hmsn::optim
