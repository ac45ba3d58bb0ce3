#include "hmsn/errors.hpp"
#include "hmsn/harness/checkpoint.hpp"
#include "hmsn/harness/dataset.hpp"
#include "hmsn/harness/export.hpp"
#include "hmsn/harness/trainer.hpp"
#include "hmsn/harness/views.hpp"
#include "harness_support.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

using namespace hmsn;
using namespace hmsn::harness;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("config json roundtrip and overrides") {
  RunConfig c = tiny_config(Method::Hmsn, "x");
  c.temps.tau = 0.2;
  c.data.noise = 0.25;
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 16);

  RunConfig d = c;
  d.set("encoder.depth", "3");
  CHECK(d.encoder.depth == 3);
  d.set("method", "msn");
  CHECK(d.method == Method::Msn);
  d.set("out_dir", "runs/plain");
  CHECK(d.out_dir == "runs/plain");
  CHECK(d.hash() != c.hash());
  CHECK_THROWS_AS(d.set("encoder.nope", "1"), ConfigError);
  CHECK_THROWS_AS(d.set("encoder.depth", "\"deep\""), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(R"({"typo_key": 1})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json("{not json"), FormatError);
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/config.json"), ConfigError);
  CHECK(RunConfig::from_json("{}").to_json() == RunConfig{}.to_json());
}

TEST_CASE("config validation") {
  RunConfig c = tiny_config(Method::HmsnIp, "x");
  CHECK_NOTHROW(c.validate());
  c.curvature = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config(Method::Msn, "x");
  c.projector = nn::ProjectorKind::Hyperbolic;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config(Method::Hmsn, "x");
  c.data.image_size = 16;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config(Method::Hmsn, "x");
  c.data.format = "cifar10-binary";
  c.data.path = "/nonexistent/data.bin";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(c.validate(false));
  c = tiny_config(Method::Hmsn, "x");
  c.temps.tau_plus = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config(Method::Hmsn, "x");
  c.views.focal_patches = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(tiny_config(Method::Hmsn, "x").total_steps(1000) == 6);
  RunConfig e = tiny_config(Method::Hmsn, "x");
  e.steps = 0;
  e.epochs = 3;
  CHECK(e.total_steps(100) == 3 * (100 / 8));
}

TEST_CASE("synthetic tree dataset") {
  DatasetConfig cfg;
  cfg.per_class = 10;
  const Dataset a = synthetic_tree(cfg);
  CHECK(a.classes == 16);
  CHECK(a.size() == 160);
  CHECK(a.height == 16);
  CHECK(a.channels == 3);
  std::vector<int> counts(16, 0);
  for (int y : a.labels) ++counts[static_cast<std::size_t>(y)];
  for (int n : counts) CHECK(n == 10);
  const Dataset b = synthetic_tree(cfg);
  CHECK(a.pixels == b.pixels);
  CHECK(a.labels == b.labels);
  cfg.seed = 8;
  CHECK(synthetic_tree(cfg).pixels != a.pixels);
  cfg.depth = 3;
  cfg.branching = 2;
  CHECK(synthetic_tree(cfg).classes == 8);

  const nn::Image img = a.image(0);
  CHECK(img.data.size() == 16 * 16 * 3);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (double v : a.image(i).data) sum += v;
  CHECK(std::abs(sum / (160.0 * 768.0)) < 1e-9);
  DatasetConfig bad;
  bad.branching = 1;
  CHECK_THROWS_AS(synthetic_tree(bad), ConfigError);
  DatasetConfig limited;
  limited.per_class = 10;
  limited.limit = 20;
  CHECK(synthetic_tree(limited).size() == 20);
}

TEST_CASE("synthetic tree pose nuisances") {
  DatasetConfig cfg;
  cfg.per_class = 4;
  const Dataset plain = synthetic_tree(cfg);
  cfg.shift = 2.0;
  cfg.mirror = true;
  const Dataset posed = synthetic_tree(cfg);
  CHECK(posed.labels == plain.labels);
  CHECK(posed.pixels != plain.pixels);
  CHECK(synthetic_tree(cfg).pixels == posed.pixels);
  cfg.shift = 0.0;
  CHECK(synthetic_tree(cfg).pixels != plain.pixels);
  cfg.shift = -1.0;
  CHECK_THROWS_AS(synthetic_tree(cfg), ConfigError);
  RunConfig rc;
  rc.data.shift = 1.5;
  rc.data.mirror = true;
  const RunConfig back = RunConfig::from_json(rc.to_json());
  CHECK(back.data.shift == 1.5);
  CHECK(back.data.mirror);
}

TEST_CASE("cifar10 binary reader") {
  const std::string dir = scratch_dir("cifar");
  std::string bytes;
  for (int r = 0; r < 3; ++r) {
    bytes.push_back(static_cast<char>(r * 4));
    for (int c = 0; c < 3; ++c)
      for (int p = 0; p < 1024; ++p) bytes.push_back(static_cast<char>((p + 50 * c + r) % 256));
  }
  spit(dir + "/ok.bin", bytes);
  const Dataset d = load_cifar10(dir + "/ok.bin");
  CHECK(d.size() == 3);
  CHECK(d.labels == std::vector<int>{0, 4, 8});
  CHECK(d.height == 32);
  // Planar RGB becomes interleaved HWC: pixel 5 of image 1.
  CHECK(d.pixels[1 * 3072 + 5 * 3 + 0] == (5 + 1) % 256);
  CHECK(d.pixels[1 * 3072 + 5 * 3 + 2] == (5 + 100 + 1) % 256);
  CHECK(d.classes == 10);
  CHECK(load_cifar10(dir + "/ok.bin", 2).size() == 2);

  spit(dir + "/short.bin", bytes.substr(0, 3073 + 100));
  try {
    load_cifar10(dir + "/short.bin");
    FAIL("truncated file accepted");
  } catch (const FormatError& e) {
    CHECK(e.byte_offset == 3073);
  }
  std::string badlabel = bytes;
  badlabel[3073] = 12;
  spit(dir + "/label.bin", badlabel);
  CHECK_THROWS_AS(load_cifar10(dir + "/label.bin"), FormatError);
  spit(dir + "/empty.bin", "");
  CHECK_THROWS_AS(load_cifar10(dir + "/empty.bin"), FormatError);
}

TEST_CASE("raw tensor roundtrip and corruption") {
  const std::string dir = scratch_dir("raw");
  DatasetConfig cfg;
  cfg.per_class = 2;
  cfg.image_size = 8;
  const Dataset a = synthetic_tree(cfg);
  write_raw_tensor(a, dir + "/a.raw");
  const Dataset b = load_raw_tensor(dir + "/a.raw");
  CHECK(b.pixels == a.pixels);
  CHECK(b.labels == a.labels);
  CHECK(b.height == 8);
  CHECK(b.mean == a.mean);

  std::string bytes = slurp(dir + "/a.raw");
  bytes[40] = static_cast<char>(bytes[40] ^ 1);
  spit(dir + "/flip.raw", bytes);
  CHECK_THROWS_AS(load_raw_tensor(dir + "/flip.raw"), ChecksumMismatch);
  std::string magic = slurp(dir + "/a.raw");
  magic[0] = 'X';
  spit(dir + "/magic.raw", magic);
  CHECK_THROWS_AS(load_raw_tensor(dir + "/magic.raw"), FormatError);
  spit(dir + "/cut.raw", slurp(dir + "/a.raw").substr(0, 30));
  CHECK_THROWS_AS(load_raw_tensor(dir + "/cut.raw"), FormatError);

  DatasetConfig via;
  via.format = "raw-tensor";
  via.path = dir + "/a.raw";
  CHECK(ingest_dataset(via).pixels == a.pixels);
  via.format = "png-folder";
  CHECK_THROWS_AS(ingest_dataset(via), ConfigError);
}

TEST_CASE("augmentation and views") {
  nn::Image img(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(y, x, 0) = 1 + y * 4 + x;
  Rng rng = derive_rng(91);
  const nn::Image same = augment(img, false, 0, rng);
  CHECK(same.data == img.data);
  std::set<std::vector<double>> seen;
  for (int i = 0; i < 200; ++i) {
    const nn::Image out = augment(img, true, 0, rng);
    seen.insert(out.data);
    CHECK((out.data == img.data || out.at(0, 0, 0) == 4.0));
  }
  CHECK(seen.size() == 2);
  for (int i = 0; i < 200; ++i) {
    const nn::Image out = augment(img, false, 1, rng);
    int zeros = 0;
    for (double v : out.data) zeros += v == 0.0;
    CHECK((zeros == 0 || zeros == 4 || zeros == 7));
  }

  nn::Image big(8, 8, 3);
  for (double& v : big.data) v = 1.0;
  ViewRecipe recipe;
  recipe.focal_patches = 1;
  const ViewEntry e = make_views(big, recipe, 4, rng);
  CHECK(e.target.patches.rows() == 4);
  REQUIRE(e.anchors.size() == 3);
  CHECK(e.anchors[0].patches.rows() == 2);
  CHECK(e.anchors[1].patches.rows() == 1);
  CHECK(e.anchors[2].patches.rows() == 1);
  const nn::TokenView full = full_view(big, 4);
  CHECK(full.positions == std::vector<int>{0, 1, 2, 3});
  CHECK(full.patches.rows() == 4);

  Rng r1 = derive_rng(5), r2 = derive_rng(5);
  const ViewEntry a = make_views(big, recipe, 4, r1), b = make_views(big, recipe, 4, r2);
  CHECK(a.anchors[0].positions == b.anchors[0].positions);
}

TEST_CASE("batch indices") {
  const std::vector<int> b0 = batch_indices(3, 0, 20, 8);
  const std::vector<int> b1 = batch_indices(3, 1, 20, 8);
  CHECK(b0.size() == 8);
  std::set<int> both(b0.begin(), b0.end());
  both.insert(b1.begin(), b1.end());
  CHECK(both.size() == 16);
  CHECK(batch_indices(3, 0, 20, 8) == b0);
  // Two full batches per epoch of 20; step 2 starts epoch 1.
  CHECK(batch_indices(3, 2, 20, 8) != b0);
  CHECK(batch_indices(4, 0, 20, 8) != b0);
  CHECK_THROWS(batch_indices(3, 0, 4, 8));
}

TEST_CASE("checkpoint roundtrip is exact") {
  const std::string dir = scratch_dir("ckpt");
  for (Method m : {Method::Msn, Method::Hmsn, Method::HmsnIp}) {
    RunConfig c = tiny_config(m, dir + "/run");
    c.steps = 3;
    const TrainResult r = train(c);
    const TrainState back = load_checkpoint(r.checkpoint);
    CHECK(back.step == 3);
    CHECK(back.model.config.to_json() == c.to_json());
    for (const auto& sets : {std::pair{&back.model.anchor, &r.state.model.anchor},
                             std::pair{&back.model.target, &r.state.model.target},
                             std::pair{&back.model.protos, &r.state.model.protos}}) {
      REQUIRE(sets.first->same_structure(*sets.second));
      for (const auto& [name, p] : *sets.first) CHECK(p.value == sets.second->at(name));
    }
    for (const auto& [name, s] : r.state.optimizer.states()) {
      const optim::AdamState& o = back.optimizer.states().at(name);
      CHECK(o.m == s.m);
      CHECK(o.v == s.v);
      CHECK(o.step == s.step);
    }
    save_checkpoint(back, dir + "/again.bin");
    CHECK(slurp(dir + "/again.bin") == slurp(r.checkpoint));

    std::string bytes = slurp(r.checkpoint);
    bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x10);
    spit(dir + "/bad.bin", bytes);
    CHECK_THROWS_AS(load_checkpoint(dir + "/bad.bin"), ChecksumMismatch);
    spit(dir + "/cut.bin", slurp(r.checkpoint).substr(0, 20));
    CHECK_THROWS_AS(load_checkpoint(dir + "/cut.bin"), FormatError);
  }
  CHECK_THROWS(load_checkpoint(dir + "/missing.bin"));
}

TEST_CASE("training writes metrics and keeps invariants") {
  const std::string dir = scratch_dir("train");
  RunConfig c = tiny_config(Method::Hmsn, dir + "/hmsn");
  c.steps = 8;
  c.checkpoint_every = 4;
  std::vector<StepMetrics> seen;
  TrainOptions opts;
  opts.on_step = [&](const StepMetrics& m) { seen.push_back(m); };
  const TrainResult r = train(c, opts);
  CHECK(seen.size() == 8);
  CHECK(fs::exists(dir + "/hmsn/config.json"));
  CHECK(fs::exists(dir + "/hmsn/ckpt_00000004.bin"));
  CHECK(fs::exists(dir + "/hmsn/ckpt_00000008.bin"));
  const std::vector<StepMetrics> logged = read_metrics(r.metrics);
  REQUIRE(logged.size() == 8);
  for (std::size_t i = 0; i < logged.size(); ++i) {
    CHECK(logged[i].step == static_cast<long>(i));
    CHECK(logged[i].to_json() == seen[i].to_json());
    CHECK(std::isfinite(logged[i].loss.total));
    CHECK(logged[i].proto_mean_norm < 1.0);
    int total = 0;
    for (int h : logged[i].rep_norm_hist) total += h;
    CHECK(total == 8 * 3);
  }
  const prototypes::PrototypeBank bank = r.state.model.bank();
  CHECK_NOTHROW(bank.validate());
  CHECK(RunConfig::load(dir + "/hmsn/config.json").to_json() == c.to_json());

  RunConfig ip = tiny_config(Method::HmsnIp, dir + "/ip");
  ip.steps = 5;
  const Tensor start = init_model(ip).protos.at("proto");
  const TrainResult rip = train(ip);
  CHECK(rip.state.model.protos.at("proto") == start);
  for (const auto& m : read_metrics(rip.metrics)) CHECK(std::abs(m.proto_mean_norm - 1.0) < 1e-12);
}

TEST_CASE("resume reproduces an uninterrupted run") {
  const std::string dir = scratch_dir("resume");
  for (Method m : {Method::Msn, Method::Hmsn, Method::HmsnIp}) {
    // Same out_dir for both runs: the checkpoint embeds the config.
    RunConfig c = tiny_config(m, dir + "/run");
    c.steps = 6;
    const TrainResult full = train(c);
    const std::string full_metrics = slurp(full.metrics);
    const std::string full_ckpt = slurp(full.checkpoint);
    fs::remove_all(c.out_dir);

    TrainOptions first;
    first.stop_after = 3;
    const TrainResult half = train(c, first);
    CHECK(half.state.step == 3);
    TrainOptions second;
    second.resume = half.checkpoint;
    const TrainResult rest = train(c, second);
    CHECK(slurp(rest.metrics) == full_metrics);
    CHECK(slurp(rest.checkpoint) == full_ckpt);
  }
}

TEST_CASE("export and plot") {
  const std::string dir = scratch_dir("export");
  RunConfig c = tiny_config(Method::HmsnIp, dir + "/run");
  c.steps = 2;
  c.dim = 2;
  c.encoder.out_dim = 2;
  const TrainResult r = train(c);
  const Dataset data = ingest_dataset(c.data);
  export_embeddings(r.state.model, data, dir + "/emb.csv");
  export_prototypes(r.state.model.bank(), dir + "/protos.csv");
  const CsvTable emb = read_csv(dir + "/emb.csv");
  CHECK(emb.rows.size() == data.size());
  CHECK(emb.header == std::vector<std::string>{"index", "label", "z0", "z1"});
  for (const auto& row : emb.rows) CHECK(row[2] * row[2] + row[3] * row[3] < 1.0);
  const CsvTable pro = read_csv(dir + "/protos.csv");
  CHECK(pro.rows.size() == 8);
  for (const auto& row : pro.rows) CHECK(std::abs(std::hypot(row[1], row[2]) - 1.0) < 1e-12);

  const std::string first = slurp(dir + "/emb.csv");
  export_embeddings(r.state.model, data, dir + "/emb.csv");
  CHECK(slurp(dir + "/emb.csv") == first);

  plot_disk(dir + "/emb.csv", dir + "/protos.csv", dir + "/a.svg");
  plot_disk(dir + "/emb.csv", dir + "/protos.csv", dir + "/b.svg");
  const std::string svg = slurp(dir + "/a.svg");
  CHECK(svg == slurp(dir + "/b.svg"));
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);

  spit(dir + "/empty.csv", "index,label,z0,z1\n");
  plot_disk(dir + "/empty.csv", "", dir + "/empty.svg");
  CHECK(slurp(dir + "/empty.svg").find("<circle") != std::string::npos);

  spit(dir + "/three.csv", "index,label,z0,z1,z2\n0,0,0.1,0.1,0.1\n");
  CHECK_THROWS_AS(plot_disk(dir + "/three.csv", "", dir + "/x.svg"), ShapeError);
  spit(dir + "/junk.csv", "index,label,z0,z1\n0,0,abc,0.1\n");
  CHECK_THROWS_AS(read_csv(dir + "/junk.csv"), FormatError);
}
