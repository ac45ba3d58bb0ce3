#include "hmsn/harness/config.hpp"

#include "hmsn/errors.hpp"
#include "hmsn/nn/patches.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hmsn::harness {

using json = nlohmann::ordered_json;

const char* method_name(Method m) {
  switch (m) {
    case Method::Msn: return "msn";
    case Method::Hmsn: return "hmsn";
    case Method::HmsnIp: return "hmsn-ip";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "msn") return Method::Msn;
  if (name == "hmsn") return Method::Hmsn;
  if (name == "hmsn-ip") return Method::HmsnIp;
  throw ConfigError("unknown method: " + name);
}

void ViewRecipe::validate(int grid) const {
  if (random_views < 0 || focal_views < 0 || anchors() < 1) throw ConfigError("view recipe needs at least one anchor view");
  if (random_views > 0) nn::MaskSpec::random(random_keep).validate(grid, grid);
  if (focal_views > 0) nn::MaskSpec::focal(focal_patches, focal_patches).validate(grid, grid);
  if (crop_pad < 0) throw ConfigError("crop padding must be >= 0");
}

long RunConfig::total_steps(std::size_t dataset_size) const {
  if (steps > 0) return steps;
  // Partial batches are dropped.
  const long per_epoch = static_cast<long>(dataset_size / static_cast<std::size_t>(batch_size));
  return per_epoch * epochs;
}

void RunConfig::validate(bool check_paths) const {
  if (!(curvature > 0.0) || !std::isfinite(curvature)) throw ConfigError("curvature must be positive");
  if (method == Method::HmsnIp && curvature != 1.0) throw ConfigError("hmsn-ip requires curvature c = 1");
  if (method == Method::Msn && projector != nn::ProjectorKind::Euclidean)
    throw ConfigError("msn uses the euclidean projector");
  if (dim < 2) throw ConfigError("dim must be >= 2");
  if (prototypes < 2) throw ConfigError("K must be > 1");
  temps.validate();
  weights.validate();
  if (!(clip_radius > 0.0)) throw ConfigError("clip radius must be positive");
  encoder.validate();
  if (encoder.image_size != data.image_size) throw ConfigError("encoder.image_size must match data.image_size");
  if (head_hidden < 1) throw ConfigError("head_hidden must be >= 1");
  views.validate(encoder.grid());
  optim::AdamConfig{optim.lr, 0.9, 0.999, 1e-8, optim.weight_decay}.validate();
  optim::AdamConfig{optim.proto_lr, 0.9, 0.999, 1e-8, 0.0}.validate();
  if (!(optim.warmup_fraction >= 0.0 && optim.warmup_fraction < 1.0)) throw ConfigError("warmup fraction must lie in [0, 1)");
  if (!(optim.ema_start >= 0.0 && optim.ema_start <= optim.ema_end && optim.ema_end <= 1.0))
    throw ConfigError("EMA momenta must satisfy 0 <= start <= end <= 1");
  if (!(optim.bn_momentum >= 0.0 && optim.bn_momentum <= 1.0)) throw ConfigError("bn momentum must lie in [0, 1]");
  if (epochs < 1 && steps < 1) throw ConfigError("need epochs >= 1 or steps >= 1");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (data.format == "synthetic-tree") {
    if (data.depth < 1 || data.branching < 2 || data.per_class < 1) throw ConfigError("invalid synthetic-tree shape");
  } else if (data.format == "cifar10-binary" || data.format == "raw-tensor") {
    if (check_paths && !std::filesystem::exists(data.path)) throw ConfigError("dataset path does not exist: " + data.path);
  } else {
    throw ConfigError("unknown dataset format: " + data.format);
  }
}

namespace {

json encode(const RunConfig& c) {
  json j;
  j["method"] = method_name(c.method);
  j["projector"] = nn::projector_name(c.projector);
  j["curvature"] = c.curvature;
  j["dim"] = c.dim;
  j["prototypes"] = c.prototypes;
  j["tau"] = c.temps.tau;
  j["tau_plus"] = c.temps.tau_plus;
  j["lambda"] = c.weights.lambda;
  j["beta"] = c.weights.beta;
  j["clip_radius"] = c.clip_radius;
  const nn::EncoderConfig& e = c.encoder;
  j["encoder"] = {{"image_size", e.image_size}, {"patch_size", e.patch_size}, {"channels", e.channels},
                  {"depth", e.depth},           {"width", e.width},           {"heads", e.heads},
                  {"mlp_hidden", e.mlp_hidden}, {"out_dim", e.out_dim}};
  j["head_hidden"] = c.head_hidden;
  j["head_norm"] = c.head_norm;
  const ViewRecipe& v = c.views;
  j["views"] = {{"random_views", v.random_views}, {"random_keep", v.random_keep}, {"focal_views", v.focal_views},
                {"focal_patches", v.focal_patches}, {"flip", v.flip},             {"crop_pad", v.crop_pad}};
  const OptimConfig& o = c.optim;
  j["optim"] = {{"lr", o.lr},
                {"proto_lr", o.proto_lr},
                {"weight_decay", o.weight_decay},
                {"warmup_fraction", o.warmup_fraction},
                {"ema_start", o.ema_start},
                {"ema_end", o.ema_end},
                {"bn_momentum", o.bn_momentum}};
  const prototypes::PlacementOptions& p = c.placement;
  j["placement"] = {{"alpha", p.alpha}, {"iterations", p.iterations}, {"lr", p.lr}, {"restarts", p.restarts}};
  j["epochs"] = c.epochs;
  j["steps"] = c.steps;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  const DatasetConfig& d = c.data;
  j["data"] = {{"format", d.format}, {"path", d.path},         {"depth", d.depth}, {"branching", d.branching},
               {"per_class", d.per_class}, {"image_size", d.image_size}, {"noise", d.noise}, {"shift", d.shift},
               {"mirror", d.mirror}, {"seed", d.seed}, {"limit", d.limit}};
  j["out_dir"] = c.out_dir;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, const json& reference, const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!reference.contains(it.key())) throw ConfigError("unknown config key: " + prefix + it.key());
    if (it.value().is_object()) check_keys(it.value(), reference.at(it.key()), prefix + it.key() + ".");
  }
}

RunConfig decode(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  check_keys(j, encode(c), "");
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("projector")) c.projector = nn::parse_projector(j.at("projector").get<std::string>());
  read(j, "curvature", c.curvature);
  read(j, "dim", c.dim);
  read(j, "prototypes", c.prototypes);
  read(j, "tau", c.temps.tau);
  read(j, "tau_plus", c.temps.tau_plus);
  read(j, "lambda", c.weights.lambda);
  read(j, "beta", c.weights.beta);
  read(j, "clip_radius", c.clip_radius);
  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    read(e, "image_size", c.encoder.image_size);
    read(e, "patch_size", c.encoder.patch_size);
    read(e, "channels", c.encoder.channels);
    read(e, "depth", c.encoder.depth);
    read(e, "width", c.encoder.width);
    read(e, "heads", c.encoder.heads);
    read(e, "mlp_hidden", c.encoder.mlp_hidden);
    read(e, "out_dim", c.encoder.out_dim);
  }
  read(j, "head_hidden", c.head_hidden);
  read(j, "head_norm", c.head_norm);
  if (j.contains("views")) {
    const json& v = j.at("views");
    read(v, "random_views", c.views.random_views);
    read(v, "random_keep", c.views.random_keep);
    read(v, "focal_views", c.views.focal_views);
    read(v, "focal_patches", c.views.focal_patches);
    read(v, "flip", c.views.flip);
    read(v, "crop_pad", c.views.crop_pad);
  }
  if (j.contains("optim")) {
    const json& o = j.at("optim");
    read(o, "lr", c.optim.lr);
    read(o, "proto_lr", c.optim.proto_lr);
    read(o, "weight_decay", c.optim.weight_decay);
    read(o, "warmup_fraction", c.optim.warmup_fraction);
    read(o, "ema_start", c.optim.ema_start);
    read(o, "ema_end", c.optim.ema_end);
    read(o, "bn_momentum", c.optim.bn_momentum);
  }
  if (j.contains("placement")) {
    const json& p = j.at("placement");
    read(p, "alpha", c.placement.alpha);
    read(p, "iterations", c.placement.iterations);
    read(p, "lr", c.placement.lr);
    read(p, "restarts", c.placement.restarts);
  }
  read(j, "epochs", c.epochs);
  read(j, "steps", c.steps);
  read(j, "batch_size", c.batch_size);
  read(j, "seed", c.seed);
  if (j.contains("data")) {
    const json& d = j.at("data");
    read(d, "format", c.data.format);
    read(d, "path", c.data.path);
    read(d, "depth", c.data.depth);
    read(d, "branching", c.data.branching);
    read(d, "per_class", c.data.per_class);
    read(d, "image_size", c.data.image_size);
    read(d, "noise", c.data.noise);
    read(d, "shift", c.data.shift);
    read(d, "mirror", c.data.mirror);
    read(d, "seed", c.data.seed);
    read(d, "limit", c.data.limit);
  }
  read(j, "out_dir", c.out_dir);
  read(j, "checkpoint_every", c.checkpoint_every);
  return c;
}

}  // namespace

std::string RunConfig::to_json() const { return encode(*this).dump(2); }

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  }
  return decode(j);
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  json j = encode(*this);
  std::string pointer = "/" + key;
  for (char& ch : pointer)
    if (ch == '.') ch = '/';
  const json::json_pointer ptr(pointer);
  if (!j.contains(ptr)) throw ConfigError("unknown config key: " + key);
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  j[ptr] = parsed;
  *this = decode(j);
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string RunConfig::hash() const {
  const std::string text = encode(*this).dump();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
  return buf;
}

}  // namespace hmsn::harness
