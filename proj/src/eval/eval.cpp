#include "hmsn/eval.hpp"

#include "hmsn/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace hmsn::eval {

const char* probe_name(ProbeKind kind) {
  return kind == ProbeKind::Euclidean ? "euclidean" : "hyperbolic-tangent";
}

ProbeKind parse_probe(const std::string& name) {
  if (name == "euclidean") return ProbeKind::Euclidean;
  if (name == "hyperbolic-tangent" || name == "tangent") return ProbeKind::HyperbolicTangent;
  throw ConfigError("unknown probe kind: " + name);
}

void ProbeConfig::validate() const {
  if (classes < 2) throw ConfigError("probe needs at least 2 classes");
  if (epochs < 1 || !(lr > 0.0) || !(weight_decay >= 0.0)) throw ConfigError("invalid probe optimizer settings");
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) throw ConfigError("label fraction must lie in (0, 1]");
}

Split low_shot_split(std::span<const int> labels, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("label fraction must lie in (0, 1]");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));
  Split split;
  Rng rng = derive_rng(seed, 0x5b11);
  std::vector<char> chosen(labels.size(), 0);
  for (auto& [label, idx] : by_class) {
    const double want = fraction * static_cast<double>(idx.size());
    if (want < 1.0 - 1e-9) throw Error("low_shot_split: class " + std::to_string(label) + " has too few examples");
    const std::size_t n = std::min(idx.size(), static_cast<std::size_t>(std::ceil(want - 1e-9)));
    for (std::size_t j = 0; j < n; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, idx.size() - 1);
      std::swap(idx[j], idx[pick(rng)]);
      chosen[static_cast<std::size_t>(idx[j])] = 1;
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) (chosen[i] ? split.train : split.eval).push_back(static_cast<int>(i));
  return split;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["top1"] = top1;
  j["per_class"] = per_class;
  j["split"] = split;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  return j.dump();
}

Tensor Probe::features(const Tensor& reps) const {
  Tensor f(reps.rows(), reps.cols());
  for (Eigen::Index r = 0; r < reps.rows(); ++r) {
    Vec z = row_of(reps, r);
    if (kind == ProbeKind::HyperbolicTangent) z = geometry::log_map0(z, curvature);
    f.row(r) = ((z - mean).array() / scale.array()).matrix().transpose();
  }
  return f;
}

Tensor Probe::logits(const Tensor& reps) const {
  Tensor out = features(reps) * weight;
  out.rowwise() += bias.row(0);
  return out;
}

std::vector<int> Probe::predict(const Tensor& reps) const {
  const Tensor l = logits(reps);
  std::vector<int> out(static_cast<std::size_t>(l.rows()));
  for (Eigen::Index r = 0; r < l.rows(); ++r) l.row(r).maxCoeff(&out[static_cast<std::size_t>(r)]);
  return out;
}

namespace {

Tensor gather(const Tensor& x, std::span<const int> idx) {
  Tensor out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

}  // namespace

ProbeResult train_probe(const Tensor& reps, std::span<const int> labels, const Split& split,
                        const ProbeConfig& config, std::uint64_t seed) {
  config.validate();
  if (static_cast<std::size_t>(reps.rows()) != labels.size()) throw ShapeError("train_probe: label count mismatch");
  std::vector<int> per_class_train(static_cast<std::size_t>(config.classes), 0);
  for (int i : split.train) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= config.classes) throw Error("train_probe: label out of range");
    ++per_class_train[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < config.classes; ++c)
    if (per_class_train[static_cast<std::size_t>(c)] == 0)
      throw Error("train_probe: class " + std::to_string(c) + " has no training example");

  const Eigen::Index d = reps.cols();
  Probe probe;
  probe.kind = config.kind;
  probe.curvature = config.curvature;
  probe.mean = Vec::Zero(d);
  probe.scale = Vec::Ones(d);
  const Tensor train_raw = gather(reps, split.train);
  {
    Tensor f = probe.features(train_raw);
    probe.mean = f.colwise().mean().transpose();
    Vec var = (f.rowwise() - probe.mean.transpose()).array().square().colwise().mean().transpose();
    probe.scale = (var.array() + 1e-12).sqrt().max(1e-6).matrix();
  }
  const Tensor x = probe.features(train_raw);
  const Eigen::Index n = x.rows();
  Tensor y = Tensor::Zero(n, config.classes);
  for (Eigen::Index i = 0; i < n; ++i) y(i, labels[static_cast<std::size_t>(split.train[static_cast<std::size_t>(i)])]) = 1.0;

  probe.weight = Tensor::Zero(d, config.classes);
  probe.bias = Tensor::Zero(1, config.classes);
  Tensor mw = probe.weight, vw = probe.weight, mb = probe.bias, vb = probe.bias;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= config.epochs; ++t) {
    Tensor logits = x * probe.weight;
    logits.rowwise() += probe.bias.row(0);
    for (Eigen::Index i = 0; i < n; ++i) {
      logits.row(i).array() -= logits.row(i).maxCoeff();
      logits.row(i) = logits.row(i).array().exp().matrix();
      logits.row(i) /= logits.row(i).sum();
    }
    const Tensor delta = (logits - y) / static_cast<double>(n);
    const Tensor gw = x.transpose() * delta + config.weight_decay * probe.weight;
    const Tensor gb = delta.colwise().sum();
    const double bc1 = 1.0 - std::pow(b1, t), bc2 = 1.0 - std::pow(b2, t);
    mw = b1 * mw + (1 - b1) * gw;
    vw = b2 * vw + (1 - b2) * gw.cwiseProduct(gw);
    mb = b1 * mb + (1 - b1) * gb;
    vb = b2 * vb + (1 - b2) * gb.cwiseProduct(gb);
    probe.weight.array() -= config.lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + eps);
    probe.bias.array() -= config.lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + eps);
  }

  ProbeResult result;
  result.report.seed = seed;
  result.report.split = std::string(probe_name(config.kind)) + " train=" + std::to_string(split.train.size()) +
                        " eval=" + std::to_string(split.eval.size());
  const std::vector<int> pred = probe.predict(gather(reps, split.eval));
  std::vector<int> hit(static_cast<std::size_t>(config.classes), 0), total(hit.size(), 0);
  int correct = 0;
  for (std::size_t i = 0; i < split.eval.size(); ++i) {
    const int yt = labels[static_cast<std::size_t>(split.eval[i])];
    const bool ok = pred[i] == yt;
    correct += ok;
    if (yt >= 0 && yt < config.classes) {
      ++total[static_cast<std::size_t>(yt)];
      hit[static_cast<std::size_t>(yt)] += ok;
    }
  }
  result.report.top1 = split.eval.empty() ? 0.0 : 100.0 * correct / static_cast<double>(split.eval.size());
  result.report.per_class.resize(hit.size());
  for (std::size_t c = 0; c < hit.size(); ++c)
    result.report.per_class[c] = total[c] ? 100.0 * hit[c] / static_cast<double>(total[c]) : 0.0;
  result.probe = std::move(probe);
  return result;
}

namespace {

double metric(const Tensor& p, Eigen::Index a, Eigen::Index b, const std::optional<Curvature>& ball) {
  if (ball) return geometry::distance(row_of(p, a), row_of(p, b), *ball);
  return (p.row(a) - p.row(b)).norm();
}

double four_point(const Tensor& d, int x, int y, int z, int w) {
  double s[3] = {d(x, y) + d(z, w), d(x, z) + d(y, w), d(x, w) + d(y, z)};
  std::sort(s, s + 3);
  return (s[2] - s[1]) / 2.0;
}

Tensor distances(const Tensor& p, const std::optional<Curvature>& ball) {
  const Eigen::Index n = p.rows();
  Tensor d = Tensor::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) d(a, b) = d(b, a) = metric(p, a, b, ball);
  return d;
}

}  // namespace

double delta_hyperbolicity(const Tensor& points, int samples, std::uint64_t seed, std::optional<Curvature> ball) {
  const int n = static_cast<int>(points.rows());
  if (n < 4) throw Error("delta_hyperbolicity needs at least 4 points");
  Rng rng = derive_rng(seed, 0xde17a);
  std::uniform_int_distribution<int> pick(0, n - 1);
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    int q[4];
    for (int i = 0; i < 4; ++i) {
      bool fresh;
      do {
        q[i] = pick(rng);
        fresh = std::find(q, q + i, q[i]) == q + i;
      } while (!fresh);
    }
    Tensor sub(4, points.cols());
    for (int i = 0; i < 4; ++i) sub.row(i) = points.row(q[i]);
    best = std::max(best, four_point(distances(sub, ball), 0, 1, 2, 3));
  }
  return best;
}

double delta_exhaustive(const Tensor& points, std::optional<Curvature> ball) {
  const int n = static_cast<int>(points.rows());
  if (n < 4) throw Error("delta_exhaustive needs at least 4 points");
  const Tensor d = distances(points, ball);
  double best = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int e = c + 1; e < n; ++e) best = std::max(best, four_point(d, a, b, c, e));
  return best;
}

std::vector<double> prototype_norm_trace(std::span<const prototypes::PrototypeBank> banks) {
  std::vector<double> out;
  out.reserve(banks.size());
  for (const auto& b : banks) out.push_back(b.mean_norm());
  return out;
}

}  // namespace hmsn::eval
