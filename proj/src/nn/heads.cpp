#include "hmsn/nn/heads.hpp"

#include "hmsn/errors.hpp"

#include <cmath>
#include <string>

namespace hmsn::nn {

using diff::Var;

namespace {

constexpr double kBnEps = 1e-5;

std::string fc(int i) { return "head.fc" + std::to_string(i); }
std::string bn(int i) { return "head.bn" + std::to_string(i); }
std::string hyp(int i) { return "head.hyp" + std::to_string(i); }

Var batch_norm(Binder& bind, Var x, int i, bool train, std::vector<BatchStats>* stats) {
  const std::string p = bn(i);
  Var normed;
  if (train) {
    if (x.rows() < 2) throw ShapeError("euclid_head: batch normalization needs a batch of at least 2 in train mode");
    normed = batch_norm_cols(x, kBnEps);
    if (stats) {
      const Tensor& v = x.value();
      BatchStats s;
      s.mean = v.colwise().mean();
      s.var = (v.rowwise() - s.mean.row(0)).array().square().colwise().mean();
      stats->push_back(std::move(s));
    }
  } else {
    const Tensor& rm = bind.params().at(p + ".running_mean");
    const Tensor& rv = bind.params().at(p + ".running_var");
    Tensor inv_std = (rv.array() + kBnEps).rsqrt();
    normed = mul_row(add_row(x, bind.graph().constant(-rm)), bind.graph().constant(std::move(inv_std)));
  }
  return add_row(mul_row(normed, bind(p + ".gain")), bind(p + ".bias"));
}

void add_norm(ParamSet& p, int i, int width) {
  p.add(bn(i) + ".gain", Tensor::Ones(1, width));
  p.add(bn(i) + ".bias", Tensor::Zero(1, width));
  p.add(bn(i) + ".running_mean", Tensor::Zero(1, width), ParamKind::Buffer);
  p.add(bn(i) + ".running_var", Tensor::Ones(1, width), ParamKind::Buffer);
}

Var linear(Binder& bind, Var x, const std::string& prefix) {
  return add_row(matmul(x, bind(prefix + ".weight")), bind(prefix + ".bias"));
}

}  // namespace

const char* projector_name(ProjectorKind kind) {
  return kind == ProjectorKind::Euclidean ? "euclidean" : "hyperbolic";
}

ProjectorKind parse_projector(const std::string& name) {
  if (name == "euclidean") return ProjectorKind::Euclidean;
  if (name == "hyperbolic") return ProjectorKind::Hyperbolic;
  throw ConfigError("unknown projector '" + name + "'");
}

void init_euclid_head(ParamSet& p, int in_dim, const HeadDims& dims, Rng& rng) {
  int in = in_dim;
  for (int i = 0; i < 3; ++i) {
    if (i < 2) add_norm(p, i, in);
    p.add(fc(i) + ".weight", trunc_normal_tensor(in, dims[static_cast<std::size_t>(i)], 1.0 / std::sqrt(in), rng));
    p.add(fc(i) + ".bias", Tensor::Zero(1, dims[static_cast<std::size_t>(i)]));
    in = dims[static_cast<std::size_t>(i)];
  }
}

Var euclid_head(Binder& bind, Var z, bool train, std::vector<BatchStats>* stats) {
  Var h = gelu(linear(bind, batch_norm(bind, z, 0, train, stats), fc(0)));
  h = gelu(linear(bind, batch_norm(bind, h, 1, train, stats), fc(1)));
  return linear(bind, h, fc(2));
}

void update_running_stats(ParamSet& params, const std::vector<BatchStats>& stats, double momentum) {
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const std::string p = bn(static_cast<int>(i));
    Tensor& rm = params.at(p + ".running_mean");
    Tensor& rv = params.at(p + ".running_var");
    rm = momentum * rm + (1.0 - momentum) * stats[i].mean;
    rv = momentum * rv + (1.0 - momentum) * stats[i].var;
  }
}

void init_hyp_head(ParamSet& p, int in_dim, const HeadDims& dims, Rng& rng, bool tangent_norm) {
  int in = in_dim;
  for (int i = 0; i < 3; ++i) {
    const int out = dims[static_cast<std::size_t>(i)];
    if (tangent_norm && i < 2) add_norm(p, i, in);
    p.add(hyp(i) + ".weight", trunc_normal_tensor(in, out, 1.0 / std::sqrt(in), rng));
    p.add(hyp(i) + ".bias", Tensor::Zero(1, out), ParamKind::Ball);
    in = out;
  }
}

namespace {

// hyp_linear with its input already in the tangent space at the origin.
Var tangent_linear(Var t, Var weight, Var bias, const Curvature& k) {
  Var mapped = diff::exp_map0(matmul(t, weight), k);
  Var b = gather_rows(bias, std::vector<int>(static_cast<std::size_t>(t.rows()), 0));
  return diff::mobius_add(mapped, b, k);
}

}  // namespace

Var hyp_linear(Var x, Var weight, Var bias, const Curvature& k) {
  return tangent_linear(diff::log_map0(x, k), weight, bias, k);
}

Var hyp_relu(Var x, const Curvature& k) { return diff::exp_map0(relu(diff::log_map0(x, k)), k); }

Var hyp_head(Binder& bind, Var x, const Curvature& k, bool train, std::vector<BatchStats>* stats) {
  Var h = x;
  for (int i = 0; i < 3; ++i) {
    Var t = diff::log_map0(h, k);
    if (bind.params().contains(bn(i) + ".gain")) t = batch_norm(bind, t, i, train, stats);
    h = tangent_linear(t, bind(hyp(i) + ".weight"), bind(hyp(i) + ".bias"), k);
    if (i < 2) h = hyp_relu(h, k);
  }
  return h;
}

}  // namespace hmsn::nn
