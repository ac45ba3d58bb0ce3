// hmsn: train, evaluate and inspect hyperbolic masked siamese networks.

#include "hmsn/diff/gradcheck.hpp"
#include "hmsn/diff/hyperbolic.hpp"
#include "hmsn/eval.hpp"
#include "hmsn/harness/checkpoint.hpp"
#include "hmsn/harness/evaluate.hpp"
#include "hmsn/harness/export.hpp"
#include "hmsn/harness/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace hmsn;

namespace {

harness::RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  harness::RunConfig c = path.empty() ? harness::RunConfig{} : harness::RunConfig::load(path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return c;
}

int run_train(const std::string& config_path, const std::vector<std::string>& overrides, const std::string& resume,
              long stop_after, bool quiet) {
  const harness::RunConfig c = resolve_config(config_path, overrides);
  harness::TrainOptions opt;
  opt.resume = resume;
  opt.stop_after = stop_after;
  if (!quiet)
    opt.on_step = [](const harness::StepMetrics& m) {
      if (m.step % 50 == 0)
        std::fprintf(stderr, "step %ld loss %.4f ce %.4f H(mean) %.4f proto_norm %.4f\n", m.step, m.loss.total,
                     m.loss.cross_entropy, m.loss.mean_entropy, m.proto_mean_norm);
    };
  const harness::TrainResult r = harness::train(c, opt);
  std::cout << "checkpoint " << r.checkpoint << "\nmetrics " << r.metrics << "\n";
  return 0;
}

int run_eval(const std::string& ckpt, const std::string& probe, double fraction, std::uint64_t seed,
             const std::string& pipeline, const std::string& out) {
  const harness::TrainState s = harness::load_checkpoint(ckpt);
  const harness::Dataset data = harness::ingest_dataset(s.model.config.data);
  harness::EvalRequest req;
  if (pipeline == "euclid") req.pipeline = harness::Pipeline::Euclid;
  else if (pipeline == "hyper") req.pipeline = harness::Pipeline::Hyper;
  else if (pipeline != "auto") throw ConfigError("--pipeline must be auto, euclid or hyper");
  if (probe != "auto") req.probe = eval::parse_probe(probe);
  req.label_fraction = fraction;
  req.seed = seed;
  const eval::EvalReport report = harness::evaluate(s.model, data, req);
  const std::string text = report.to_json();
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream f(out, std::ios::trunc);
    f << text << "\n";
    if (!f) throw Error("cannot write " + out);
  }
  std::fprintf(stderr, "top1 %.2f%%\n", report.top1);
  return 0;
}

int run_embed(const std::string& ckpt, const std::string& out, const std::string& protos_out) {
  const harness::TrainState s = harness::load_checkpoint(ckpt);
  const harness::Dataset data = harness::ingest_dataset(s.model.config.data);
  harness::export_embeddings(s.model, data, out);
  if (!protos_out.empty()) harness::export_prototypes(s.model.bank(), protos_out);
  return 0;
}

int run_protoinit(int count, int dim, std::uint64_t seed, const std::string& out) {
  Rng rng = derive_rng(seed);
  const prototypes::Placement p = prototypes::place_ideal_traced(count, dim, rng);
  harness::export_prototypes(p.bank, out);
  std::printf("K=%d d=%d max_cosine=%.6f min_angle_deg=%.4f\n", count, dim, prototypes::max_offdiag_cosine(p.bank.vectors),
              prototypes::min_pairwise_angle(p.bank.vectors) * 180.0 / 3.14159265358979323846);
  return 0;
}

// Central-difference check of the composite hyperbolic ops at random interior points.
int run_gradcheck(int points, std::uint64_t seed) {
  Rng rng = derive_rng(seed);
  const geometry::Curvature k(1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto ball_point = [&](int rows, int cols, double radius) {
    Tensor t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = normal(rng);
    for (int r = 0; r < rows; ++r) t.row(r) *= radius * std::uniform_real_distribution<double>(0.1, 1.0)(rng) / t.row(r).norm();
    return t;
  };
  struct Case {
    const char* name;
    diff::ScalarFn f;
  };
  const Tensor other = ball_point(3, 4, 0.6);
  const Case cases[] = {
      {"exp_map0", [&](diff::Graph&, diff::Var x) { return diff::sum(diff::exp_map0(x, k)); }},
      {"log_map0", [&](diff::Graph&, diff::Var x) { return diff::sum(diff::log_map0(x, k)); }},
      {"mobius_add", [&](diff::Graph& g, diff::Var x) { return diff::sum(diff::mobius_add(x, g.constant(other), k)); }},
      {"distance", [&](diff::Graph& g, diff::Var x) { return diff::sum(diff::distance(x, g.constant(other), k)); }},
  };
  bool ok = true;
  for (const Case& c : cases) {
    double worst = 0.0;
    for (int i = 0; i < points; ++i) worst = std::max(worst, diff::finite_diff_check(c.f, ball_point(3, 4, 0.6)));
    std::printf("%-12s max_rel_err %.3e %s\n", c.name, worst, worst <= 1e-4 ? "ok" : "FAIL");
    ok = ok && worst <= 1e-4;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic masked siamese networks"};
  app.require_subcommand(1);

  std::string config_path, resume, ckpt, out, probe = "auto", pipeline = "auto", protos_out, emb, protos_in;
  std::vector<std::string> overrides;
  long stop_after = -1;
  bool quiet = false;
  double fraction = 0.01;
  std::uint64_t seed = 0;
  int count = 64, dim = 16, points = 20;

  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("-c,--config", config_path, "JSON config file");
  train->add_option("--set", overrides, "override a config key, e.g. --set encoder.depth=2");
  train->add_option("--resume", resume, "continue from a checkpoint");
  train->add_option("--stop-after", stop_after, "stop after this many total steps");
  train->add_flag("-q,--quiet", quiet);

  auto* ev = app.add_subcommand("eval", "linear probe on frozen representations");
  ev->add_option("--checkpoint", ckpt)->required();
  ev->add_option("--probe", probe, "auto | tangent | euclidean");
  ev->add_option("--fraction", fraction, "label fraction");
  ev->add_option("--seed", seed);
  ev->add_option("--pipeline", pipeline, "auto | euclid | hyper");
  ev->add_option("-o,--out", out, "write the report here instead of stdout");

  auto* embed = app.add_subcommand("embed", "export representations as CSV");
  embed->add_option("--checkpoint", ckpt)->required();
  embed->add_option("-o,--out", out)->required();
  embed->add_option("--prototypes", protos_out, "also write the prototype bank");

  auto* plot = app.add_subcommand("plot", "render 2-d embeddings on the disk as SVG");
  plot->add_option("--embeddings", emb)->required();
  plot->add_option("--prototypes", protos_in);
  plot->add_option("-o,--out", out)->required();

  auto* pinit = app.add_subcommand("protoinit", "place ideal prototypes and write them as CSV");
  pinit->add_option("-k,--count", count);
  pinit->add_option("-d,--dim", dim);
  pinit->add_option("--seed", seed);
  pinit->add_option("-o,--out", out)->required();

  auto* gcheck = app.add_subcommand("gradcheck", "finite-difference check of the hyperbolic ops");
  gcheck->add_option("--points", points);
  gcheck->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return run_train(config_path, overrides, resume, stop_after, quiet);
    if (*ev) return run_eval(ckpt, probe, fraction, seed, pipeline, out);
    if (*embed) return run_embed(ckpt, out, protos_out);
    if (*plot) {
      harness::plot_disk(emb, protos_in, out);
      return 0;
    }
    if (*pinit) return run_protoinit(count, dim, seed, out);
    if (*gcheck) return run_gradcheck(points, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
