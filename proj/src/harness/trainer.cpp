#include "hmsn/harness/trainer.hpp"

#include "hmsn/errors.hpp"
#include "hmsn/harness/views.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace hmsn::harness {

using diff::Var;
using json = nlohmann::ordered_json;

std::string StepMetrics::to_json() const {
  json j;
  j["step"] = step;
  j["loss"] = loss.total;
  j["ce"] = loss.cross_entropy;
  j["mean_entropy"] = loss.mean_entropy;
  j["anchor_entropy"] = loss.anchor_entropy;
  j["proto_mean_norm"] = proto_mean_norm;
  j["lr"] = lr;
  j["ema"] = ema;
  j["rep_norm_hist"] = rep_norm_hist;
  return j.dump();
}

std::vector<StepMetrics> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read metrics " + path);
  std::vector<StepMetrics> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    StepMetrics m;
    m.step = j.at("step").get<long>();
    m.loss.total = j.at("loss").get<double>();
    m.loss.cross_entropy = j.at("ce").get<double>();
    m.loss.mean_entropy = j.at("mean_entropy").get<double>();
    m.loss.anchor_entropy = j.at("anchor_entropy").get<double>();
    m.proto_mean_norm = j.at("proto_mean_norm").get<double>();
    m.lr = j.at("lr").get<double>();
    m.ema = j.at("ema").get<double>();
    m.rep_norm_hist = j.at("rep_norm_hist").get<std::vector<int>>();
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<int> batch_indices(std::uint64_t seed, long step, std::size_t n, int batch_size) {
  const auto b = static_cast<std::size_t>(batch_size);
  if (n < b) throw ConfigError("dataset is smaller than one batch");
  const long per_epoch = static_cast<long>(n / b);
  const long epoch = step / per_epoch;
  const long pos = step % per_epoch;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = derive_rng(seed, static_cast<std::uint64_t>(epoch), 0xe90c);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  return {perm.begin() + pos * static_cast<long>(b), perm.begin() + (pos + 1) * static_cast<long>(b)};
}

StepMetrics train_step(TrainState& s, const Dataset& data, long total_steps) {
  Model& m = s.model;
  const RunConfig& c = m.config;
  const std::vector<int> idx = batch_indices(c.seed, s.step, data.size(), c.batch_size);
  Rng rng = derive_rng(c.seed, static_cast<std::uint64_t>(s.step), 0x71e3);

  const std::size_t views_per = static_cast<std::size_t>(c.views.anchors());
  std::vector<nn::TokenView> targets, anchors;
  targets.reserve(idx.size());
  anchors.reserve(idx.size() * views_per);
  for (int i : idx) {
    ViewEntry e = make_views(data.image(static_cast<std::size_t>(i)), c.views, c.encoder.patch_size, rng);
    targets.push_back(std::move(e.target));
    for (auto& a : e.anchors) anchors.push_back(std::move(a));
  }

  diff::Graph g;
  nn::Binder anchor_bind(g, m.anchor, true);
  nn::Binder target_bind(g, m.target, false);
  nn::Binder proto_bind(g, m.protos, true);
  std::vector<nn::BatchStats> stats;

  Var q = proto_bind("proto");
  Var h_anchor = embed(anchor_bind, c, anchors, true, &stats);
  Var h_target = diff::detach(embed(target_bind, c, targets, true, nullptr));
  Var p_anchor = predict(h_anchor, q, c, c.temps.tau);
  Var p_target = diff::detach(predict(h_target, diff::detach(q), c, c.temps.tau_plus));
  const objective::LossVars loss = c.method == Method::HmsnIp
                                       ? objective::hmsn_ip_loss(p_target, p_anchor, c.weights)
                                       : objective::msn_loss(p_target, p_anchor, c.weights);

  StepMetrics out;
  out.step = s.step;
  out.loss = loss.values();
  if (!std::isfinite(out.loss.total)) throw diff::NonFiniteError("non-finite loss", loss.total.id, g.node(loss.total.id).kind);

  const diff::Gradients grads = g.backward(loss.total);
  const double scale = optim::lr_schedule(1.0, s.step, total_steps, c.optim.warmup_fraction);
  out.lr = c.optim.lr * scale;
  s.optimizer.step(m.anchor, anchor_bind.gradients(grads), scale);
  s.optimizer.step(m.protos, proto_bind.gradients(grads), scale);
  nn::update_running_stats(m.anchor, stats, c.optim.bn_momentum);
  out.ema = optim::EmaSchedule{c.optim.ema_start, c.optim.ema_end}.at(s.step + 1, total_steps);
  optim::ema_update(m.target, m.anchor, out.ema);

  out.proto_mean_norm = m.bank().mean_norm();
  const double hist_max = c.method == Method::Msn ? 2.0 * c.clip_radius : 1.0;
  out.rep_norm_hist.assign(kHistBins, 0);
  const Tensor& h = h_anchor.value();
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    const int bin = static_cast<int>(h.row(r).norm() / hist_max * kHistBins);
    ++out.rep_norm_hist[static_cast<std::size_t>(std::clamp(bin, 0, kHistBins - 1))];
  }
  ++s.step;
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed: " + path.string());
}

void dump_diagnostic(const std::filesystem::path& dir, const TrainState& s, const std::string& what) {
  json j;
  j["step"] = s.step;
  j["error"] = what;
  json norms = json::object();
  for (const auto& [name, p] : s.model.anchor) norms[name] = p.value.allFinite() ? p.value.norm() : -1.0;
  for (const auto& [name, p] : s.model.protos) norms["proto/" + name] = p.value.allFinite() ? p.value.norm() : -1.0;
  j["param_norms"] = norms;
  write_text(dir / "diagnostic.json", j.dump(2) + "\n");
}

}  // namespace

TrainResult train(const RunConfig& config, const TrainOptions& options) {
  config.validate(true);
  return train(config, ingest_dataset(config.data), options);
}

TrainResult train(const RunConfig& config, const Dataset& data, const TrainOptions& options) {
  TrainResult result;
  TrainState& s = result.state;
  if (!options.resume.empty()) {
    s = load_checkpoint(options.resume);
    s.model.config.out_dir = config.out_dir;
  } else {
    config.validate(false);
    s = init_state(config);
  }
  const RunConfig& c = s.model.config;
  if (data.height != c.encoder.image_size || data.channels != c.encoder.channels)
    throw ConfigError("dataset images do not match encoder.image_size / encoder.channels");
  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", c.to_json() + "\n");

  const long total = c.total_steps(data.size());
  const long stop = options.stop_after >= 0 ? std::min(total, options.stop_after) : total;
  result.metrics = (dir / "metrics.jsonl").string();
  std::ofstream log(result.metrics, options.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw Error("cannot open metrics log " + result.metrics);

  while (s.step < stop) {
    StepMetrics metrics;
    try {
      metrics = train_step(s, data, total);
    } catch (const diff::NonFiniteError& e) {
      dump_diagnostic(dir, s, e.what());
      throw Error(std::string("training aborted: ") + e.what() + " (see diagnostic.json)");
    } catch (const BoundaryViolation& e) {
      dump_diagnostic(dir, s, e.what());
      throw Error(std::string("training aborted: ") + e.what() + " (see diagnostic.json)");
    }
    log << metrics.to_json() << '\n';
    if (options.on_step) options.on_step(metrics);
    if (c.checkpoint_every > 0 && s.step % c.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "ckpt_%08ld.bin", s.step);
      save_checkpoint(s, (dir / name).string());
    }
  }
  log.flush();
  if (!log) throw Error("metrics write failed (disk full?)");
  result.checkpoint = (dir / "checkpoint.bin").string();
  save_checkpoint(s, result.checkpoint);
  return result;
}

}  // namespace hmsn::harness
