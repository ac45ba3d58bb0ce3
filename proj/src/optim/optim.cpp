#include "hmsn/optim.hpp"

#include "hmsn/errors.hpp"

#include <cmath>
#include <numbers>

namespace hmsn::optim {

void AdamConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("weight decay must be finite and >= 0");
}

AdamState AdamState::zeros_like(const Tensor& like) {
  AdamState s;
  s.m = Tensor::Zero(like.rows(), like.cols());
  s.v = Tensor::Zero(like.rows(), like.cols());
  return s;
}

namespace {

void check(const Tensor& param, const Tensor& grad, AdamState& state) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) throw ShapeError("optimizer: gradient shape mismatch");
  if (!grad.allFinite()) throw Error("optimizer: non-finite gradient");
  if (state.m.size() == 0 && state.v.size() == 0) state = AdamState::zeros_like(param);
  if (state.m.rows() != param.rows() || state.m.cols() != param.cols() || state.v.rows() != param.rows() ||
      state.v.cols() != param.cols())
    throw ShapeError("optimizer: moment shape mismatch");
}

// Bias-corrected Adam direction m_hat / (sqrt(v_hat) + eps).
Tensor adam_direction(const Tensor& grad, AdamState& s, const AdamConfig& cfg) {
  ++s.step;
  s.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * grad;
  s.v = cfg.beta2 * s.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.step));
  return ((s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + cfg.eps)).matrix();
}

}  // namespace

void adamw_step(Tensor& param, const Tensor& grad, AdamState& state, const AdamConfig& config, double lr) {
  check(param, grad, state);
  const Tensor dir = adam_direction(grad, state, config);
  param -= lr * (dir + config.weight_decay * param);
}

void adamw_step(Tensor& param, const Tensor& grad, AdamState& state, const AdamConfig& config) {
  adamw_step(param, grad, state, config, config.lr);
}

double inverse_metric_scale(const Vec& x, const Curvature& k) {
  const double f = (1.0 - k.c * x.squaredNorm()) / 2.0;
  return f * f;
}

void radam_step(Tensor& rows, const Tensor& egrad, AdamState& state, const AdamConfig& config, double lr,
                const Curvature& k) {
  check(rows, egrad, state);
  Tensor rgrad(egrad.rows(), egrad.cols());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const Vec x = row_of(rows, r);
    geometry::check_in_ball(x, k, "radam_step parameter");
    rgrad.row(r) = egrad.row(r) * inverse_metric_scale(x, k);
  }
  const Tensor dir = adam_direction(rgrad, state, config);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const Vec x = row_of(rows, r);
    const Vec u = -lr * row_of(dir, r);
    rows.row(r) = geometry::project_to_ball(geometry::exp_map(u, x, k), k).transpose();
  }
}

void radam_step(Tensor& rows, const Tensor& egrad, AdamState& state, const AdamConfig& config,
                const Curvature& k) {
  radam_step(rows, egrad, state, config, config.lr, k);
}

void ema_update(nn::ParamSet& target, const nn::ParamSet& anchor, double momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ConfigError("EMA momentum must lie in [0, 1]");
  if (!target.same_structure(anchor)) throw ShapeError("ema_update: parameter structures differ");
  for (auto& [name, p] : target) {
    const Tensor& a = anchor.at(name);
    if (p.kind == nn::ParamKind::Buffer) {
      p.value = a;
    } else if (momentum == 1.0) {
      continue;
    } else {
      p.value = momentum * p.value + (1.0 - momentum) * a;
    }
  }
}

double EmaSchedule::at(long step, long total_steps) const {
  if (total_steps <= 0) return end;
  const double t = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps), 0.0, 1.0);
  return start + (end - start) * t;
}

double lr_schedule(double base_lr, long step, long total_steps, double warmup_fraction) {
  if (total_steps <= 0) return base_lr;
  const long warmup = static_cast<long>(std::ceil(warmup_fraction * static_cast<double>(total_steps)));
  if (step < warmup) return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const long span = std::max(1L, total_steps - warmup);
  const double t = std::clamp(static_cast<double>(step - warmup) / static_cast<double>(span), 0.0, 1.0);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

OptimizerSet::OptimizerSet(AdamConfig euclid, AdamConfig ball, Curvature k)
    : euclid_(euclid), ball_(ball), curvature_(k) {
  euclid_.validate();
  ball_.validate();
}

void OptimizerSet::step(nn::ParamSet& params, const std::map<std::string, Tensor>& grads, double scale) {
  for (const auto& [name, grad] : grads) {
    if (!params.contains(name)) throw Error("optimizer: gradient for unknown parameter " + name);
    const nn::Param& p = params.param(name);
    AdamState& s = states_[name];
    switch (p.kind) {
      case nn::ParamKind::Euclidean:
        adamw_step(params.at(name), grad, s, euclid_, euclid_.lr * scale);
        break;
      case nn::ParamKind::Ball:
        radam_step(params.at(name), grad, s, ball_, ball_.lr * scale, curvature_);
        break;
      case nn::ParamKind::Buffer:
        throw Error("optimizer: buffer " + name + " received a gradient");
    }
  }
}

}  // namespace hmsn::optim
