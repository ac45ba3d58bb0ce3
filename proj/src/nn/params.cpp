#include "hmsn/nn/params.hpp"

#include <cmath>

namespace hmsn::nn {

const char* kind_name(ParamKind kind) {
  switch (kind) {
    case ParamKind::Euclidean: return "euclidean";
    case ParamKind::Ball: return "ball";
    case ParamKind::Buffer: return "buffer";
  }
  return "euclidean";
}

ParamKind parse_kind(const std::string& name) {
  if (name == "euclidean") return ParamKind::Euclidean;
  if (name == "ball") return ParamKind::Ball;
  if (name == "buffer") return ParamKind::Buffer;
  throw Error("unknown parameter kind '" + name + "'");
}

void ParamSet::add(const std::string& name, Tensor value, ParamKind kind) {
  if (contains(name)) throw Error("duplicate parameter '" + name + "'");
  entries_.emplace(name, Param{std::move(value), kind});
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("missing parameter '" + name + "'");
  return it->second.value;
}

const Tensor& ParamSet::at(const std::string& name) const { return param(name).value; }

const Param& ParamSet::param(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("missing parameter '" + name + "'");
  return it->second;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : entries_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool ParamSet::same_structure(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  for (; a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.kind != b->second.kind) return false;
    if (a->second.value.rows() != b->second.value.rows() || a->second.value.cols() != b->second.value.cols())
      return false;
  }
  return true;
}

Binder::Binder(diff::Graph& g, const ParamSet& params, bool trainable)
    : graph_(&g), params_(&params), trainable_(trainable) {}

diff::Var Binder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Param& p = params_->param(name);
  const bool train = trainable_ && p.kind != ParamKind::Buffer;
  diff::Var v = train ? graph_->parameter(p.value) : graph_->constant(p.value);
  bound_.emplace(name, v);
  return v;
}

std::map<std::string, Tensor> Binder::gradients(const diff::Gradients& grads) const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, v] : bound_) {
    auto it = grads.find(v.id);
    if (it != grads.end()) out.emplace(name, it->second);
  }
  return out;
}

Tensor normal_tensor(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = stddev * dist(rng);
  return t;
}

Tensor trunc_normal_tensor(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    double z = dist(rng);
    while (std::abs(z) > 2.0) z = dist(rng);
    t.data()[i] = stddev * z;
  }
  return t;
}

}  // namespace hmsn::nn
