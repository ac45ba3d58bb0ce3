#pragma once

#include "hmsn/diff/graph.hpp"
#include "hmsn/tensor.hpp"

#include <map>
#include <string>

namespace hmsn::nn {

enum class ParamKind : std::uint8_t {
  Euclidean,  // ordinary weights, AdamW
  Ball,       // rows live on the Poincare ball, Riemannian Adam
  Buffer,     // running statistics; never differentiated
};

const char* kind_name(ParamKind kind);
ParamKind parse_kind(const std::string& name);

struct Param {
  Tensor value;
  ParamKind kind = ParamKind::Euclidean;
};

// Named tensors in a deterministic (lexicographic) order.
class ParamSet {
 public:
  void add(const std::string& name, Tensor value, ParamKind kind = ParamKind::Euclidean);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  const Param& param(const std::string& name) const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  // Same names, kinds and shapes.
  bool same_structure(const ParamSet& other) const;

 private:
  std::map<std::string, Param> entries_;
};

// Binds named parameters into a graph on first use. Buffers and every entry
// of a non-trainable binder become constants.
class Binder {
 public:
  Binder(diff::Graph& g, const ParamSet& params, bool trainable);

  diff::Var operator()(const std::string& name);
  diff::Graph& graph() const { return *graph_; }
  const ParamSet& params() const { return *params_; }

  // Per-name gradients of the trainable entries that were bound.
  std::map<std::string, Tensor> gradients(const diff::Gradients& grads) const;

 private:
  diff::Graph* graph_;
  const ParamSet* params_;
  bool trainable_;
  std::map<std::string, diff::Var> bound_;
};

Tensor normal_tensor(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);
// Normal truncated to two standard deviations.
Tensor trunc_normal_tensor(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);

}  // namespace hmsn::nn
