#pragma once

#include "hmsn/nn/encoder.hpp"
#include "hmsn/nn/heads.hpp"
#include "hmsn/objective.hpp"
#include "hmsn/optim.hpp"
#include "hmsn/prototypes.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hmsn::harness {

enum class Method { Msn, Hmsn, HmsnIp };

const char* method_name(Method m);
Method parse_method(const std::string& name);

struct DatasetConfig {
  std::string format = "synthetic-tree";  // synthetic-tree | cifar10-binary | raw-tensor
  std::string path;                       // file for cifar10-binary / raw-tensor
  int depth = 2;
  int branching = 4;
  int per_class = 500;
  int image_size = 16;
  double noise = 0.6;
  double shift = 0.0;   // synthetic-tree: max per-image translation, pixels
  bool mirror = false;  // synthetic-tree: per-image random horizontal mirror
  std::uint64_t seed = 7;
  int limit = 0;  // keep only the first `limit` images when > 0
};

struct ViewRecipe {
  int random_views = 1;
  double random_keep = 0.5;
  int focal_views = 2;
  int focal_patches = 2;  // side of the square focal block, in patches
  bool flip = true;
  int crop_pad = 2;

  int anchors() const { return random_views + focal_views; }
  void validate(int grid) const;
};

struct OptimConfig {
  double lr = 1e-3;
  double proto_lr = 1e-2;
  double weight_decay = 0.04;
  double warmup_fraction = 0.1;
  double ema_start = 0.996;
  double ema_end = 1.0;
  double bn_momentum = 0.9;
};

struct RunConfig {
  Method method = Method::HmsnIp;
  nn::ProjectorKind projector = nn::ProjectorKind::Hyperbolic;
  double curvature = 1.0;
  int dim = 16;         // prototype / head output dimension
  int prototypes = 64;  // K
  objective::Temperatures temps{};
  objective::LossWeights weights{};
  double clip_radius = 2.3;
  nn::EncoderConfig encoder{};
  int head_hidden = 64;
  bool head_norm = false;  // tangent-space batch norm inside the hyperbolic head
  ViewRecipe views{};
  OptimConfig optim{};
  prototypes::PlacementOptions placement{};
  int epochs = 100;
  long steps = 0;  // overrides epochs when > 0
  int batch_size = 256;
  std::uint64_t seed = 0;
  DatasetConfig data{};
  std::string out_dir = "runs/default";
  long checkpoint_every = 0;

  // Throws ConfigError on inconsistent settings. With check_paths, the data
  // file must exist.
  void validate(bool check_paths = true) const;

  geometry::Curvature ball() const { return geometry::Curvature(curvature); }
  nn::HeadDims head_dims() const { return {head_hidden, head_hidden, dim}; }
  long total_steps(std::size_t dataset_size) const;

  std::string to_json() const;  // pretty, stable key order
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::string& path);
  // `key` is dotted (e.g. "encoder.depth"); value is parsed as JSON and
  // falls back to a plain string.
  void set(const std::string& key, const std::string& value);
  // FNV-1a of the compact JSON form, as 16 hex digits.
  std::string hash() const;
};

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 1469598103934665603ULL);

}  // namespace hmsn::harness
