#include "hmsn/diff/gradcheck.hpp"
#include "hmsn/errors.hpp"
#include "hmsn/nn/encoder.hpp"
#include "hmsn/nn/heads.hpp"
#include "hmsn/nn/patches.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace hmsn;
using namespace hmsn::nn;
using namespace testing_support;
using diff::Graph;
using diff::Var;

namespace {

Image random_image(int h, int w, int c, Rng& rng) {
  Image img(h, w, c);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : img.data) v = n(rng);
  return img;
}

EncoderConfig tiny_encoder() {
  EncoderConfig c;
  c.image_size = 8;
  c.patch_size = 4;
  c.channels = 3;
  c.depth = 2;
  c.width = 8;
  c.heads = 2;
  c.mlp_hidden = 16;
  c.out_dim = 4;
  return c;
}

TokenView view_of(const Image& img, int patch) {
  TokenView v;
  v.patches = patchify(img, patch);
  v.positions.resize(static_cast<std::size_t>(v.patches.rows()));
  std::iota(v.positions.begin(), v.positions.end(), 0);
  return v;
}

double gelu_ref(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

TEST_CASE("patchify shapes, order and inverse") {
  Rng rng = derive_rng(31);
  const Image img = random_image(32, 32, 3, rng);
  const Tensor p = patchify(img, 4);
  CHECK(p.rows() == 64);
  CHECK(p.cols() == 48);
  // Patch 9 is grid row 1, column 1; its first entry is pixel (4, 4, 0).
  CHECK(p(9, 0) == img.at(4, 4, 0));
  CHECK(p(9, 3 * 4 + 2) == img.at(5, 4, 2));
  const Image back = unpatchify(p, 32, 32, 3, 4);
  CHECK(back.data == img.data);

  Image flat(8, 8, 1);
  std::fill(flat.data.begin(), flat.data.end(), 0.25);
  const Tensor fp = patchify(flat, 4);
  CHECK(fp.rows() == 4);
  for (int r = 1; r < 4; ++r) CHECK(fp.row(r) == fp.row(0));
  CHECK_THROWS_AS(patchify(img, 5), ShapeError);
}

TEST_CASE("masking") {
  Rng rng = derive_rng(32);
  const Image img = random_image(32, 32, 3, rng);
  const Tensor p = patchify(img, 4);

  const MaskedPatches all = apply_mask(p, 8, 8, MaskSpec::random(1.0), rng);
  CHECK(all.kept.size() == 64);
  CHECK(all.patches == p);

  const MaskedPatches some = apply_mask(p, 8, 8, MaskSpec::random(0.3), rng);
  CHECK(some.kept.size() == 20);
  CHECK(std::is_sorted(some.kept.begin(), some.kept.end()));
  CHECK(std::set<int>(some.kept.begin(), some.kept.end()).size() == 20);
  for (std::size_t i = 0; i < some.kept.size(); ++i) CHECK(some.patches.row(static_cast<Eigen::Index>(i)) == p.row(some.kept[i]));

  for (int trial = 0; trial < 50; ++trial) {
    const MaskedPatches f = apply_mask(p, 8, 8, MaskSpec::focal(4, 4), rng);
    REQUIRE(f.kept.size() == 16);
    const int r0 = f.kept.front() / 8, c0 = f.kept.front() % 8;
    for (std::size_t i = 0; i < 16; ++i) {
      CHECK(f.kept[i] / 8 == r0 + static_cast<int>(i) / 4);
      CHECK(f.kept[i] % 8 == c0 + static_cast<int>(i) % 4);
    }
  }
  CHECK_THROWS_AS(apply_mask(p, 8, 8, MaskSpec::random(0.0), rng), ConfigError);
  CHECK_THROWS_AS(apply_mask(p, 8, 8, MaskSpec::focal(9, 1), rng), ConfigError);
}

TEST_CASE("encoder config validation") {
  EncoderConfig c = tiny_encoder();
  CHECK_NOTHROW(c.validate());
  c.patch_size = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_encoder();
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_encoder();
  c.out_dim = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("encoder output shape, degenerate weights, determinism") {
  Rng rng = derive_rng(33);
  const EncoderConfig cfg = tiny_encoder();
  ParamSet params;
  init_encoder(params, cfg, rng);
  std::vector<TokenView> views{view_of(random_image(8, 8, 3, rng), 4), view_of(random_image(8, 8, 3, rng), 4)};
  {
    Graph g;
    Binder bind(g, params, false);
    const Var z = encode(bind, cfg, views);
    CHECK(z.rows() == 2);
    CHECK(z.cols() == cfg.out_dim);
    Graph g2;
    Binder bind2(g2, params, false);
    CHECK(encode(bind2, cfg, views).value() == z.value());
  }
  params.at("enc.out.weight").setZero();
  params.at("enc.out.bias") = Tensor::Constant(1, cfg.out_dim, 0.5);
  Graph g;
  Binder bind(g, params, false);
  const Tensor z = encode(bind, cfg, views).value();
  CHECK(z.row(0) == z.row(1));
  CHECK(z(0, 0) == 0.5);
}

TEST_CASE("encoder is invariant to token order when positions move with tokens") {
  Rng rng = derive_rng(34);
  const EncoderConfig cfg = tiny_encoder();
  ParamSet params;
  init_encoder(params, cfg, rng);
  const TokenView v = view_of(random_image(8, 8, 3, rng), 4);
  TokenView shuffled;
  std::vector<int> order{2, 0, 3, 1};
  shuffled.patches.resize(4, v.patches.cols());
  for (int i = 0; i < 4; ++i) {
    shuffled.patches.row(i) = v.patches.row(order[static_cast<std::size_t>(i)]);
    shuffled.positions.push_back(order[static_cast<std::size_t>(i)]);
  }
  const std::vector<TokenView> a{v}, b{shuffled};
  Graph g;
  Binder bind(g, params, false);
  CHECK((encode(bind, cfg, a).value() - encode(bind, cfg, b).value()).norm() < 1e-12);
}

TEST_CASE("packing views together matches encoding them one by one") {
  Rng rng = derive_rng(35);
  const EncoderConfig cfg = tiny_encoder();
  ParamSet params;
  init_encoder(params, cfg, rng);
  const TokenView full = view_of(random_image(8, 8, 3, rng), 4);
  const MaskedPatches m = apply_mask(full.patches, 2, 2, MaskSpec::random(0.5), rng);
  const TokenView masked{m.patches, m.kept};
  Graph g;
  Binder bind(g, params, false);
  const std::vector<TokenView> both{full, masked}, one{full}, two{masked};
  const Tensor packed = encode(bind, cfg, both).value();
  CHECK((packed.row(0) - encode(bind, cfg, one).value().row(0)).norm() < 1e-12);
  CHECK((packed.row(1) - encode(bind, cfg, two).value().row(0)).norm() < 1e-12);

  // Keep ratio 1 on identical parameters reproduces the unmasked view.
  const MaskedPatches keep_all = apply_mask(full.patches, 2, 2, MaskSpec::random(1.0), rng);
  const std::vector<TokenView> kept{{keep_all.patches, keep_all.kept}};
  ParamSet target = params;
  Binder tbind(g, target, false);
  CHECK(encode(tbind, cfg, kept).value() == encode(bind, cfg, one).value());
}

TEST_CASE("encoder gradients match central differences") {
  Rng rng = derive_rng(36);
  const EncoderConfig cfg = tiny_encoder();
  ParamSet params;
  init_encoder(params, cfg, rng);
  // Larger weights so the check is not dominated by near-zero activations.
  for (auto& [name, p] : params)
    if (name.find("weight") != std::string::npos) p.value *= 10.0;
  const std::vector<TokenView> views{view_of(random_image(8, 8, 3, rng), 4), view_of(random_image(8, 8, 3, rng), 4)};
  for (const char* name : {"enc.patch.weight", "enc.block0.attn.qkv.weight", "enc.block1.mlp.fc1.weight", "enc.pos",
                           "enc.cls", "enc.block1.ln2.gain", "enc.out.weight"}) {
    Graph g;
    Binder bind(g, params, true);
    Var leaf = bind(name);
    const Tensor w = gaussian_tensor(2, cfg.out_dim, rng);
    Var loss = diff::sum(encode(bind, cfg, views) * g.constant(w));
    std::vector<Eigen::Index> coords;
    for (int i = 0; i < 20; ++i) coords.push_back((i * 7919) % leaf.value().size());
    INFO(name);
    CHECK(diff::finite_diff_check(g, loss, leaf, 1e-5, coords) <= 1e-4);
  }
}

TEST_CASE("euclidean head") {
  Rng rng = derive_rng(37);
  ParamSet params;
  init_euclid_head(params, 4, {4, 4, 4}, rng);
  for (int i = 0; i < 3; ++i) params.at("head.fc" + std::to_string(i) + ".weight") = Tensor::Identity(4, 4);
  const Tensor x = gaussian_tensor(6, 4, rng);
  {
    Graph g;
    Binder bind(g, params, false);
    const Tensor out = euclid_head(bind, g.constant(x), false).value();
    const double s = 1.0 / std::sqrt(1.0 + 1e-5);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      CHECK(std::abs(out.data()[i] - gelu_ref(gelu_ref(x.data()[i] * s) * s)) < 1e-12);
  }
  {
    Graph g;
    Binder bind(g, params, false);
    CHECK_THROWS_AS(euclid_head(bind, g.constant(Tensor(x.topRows(1))), true), ShapeError);
  }
  ParamSet fresh;
  init_euclid_head(fresh, 4, {8, 8, 3}, rng);
  Graph g;
  Binder bind(g, fresh, true);
  std::vector<BatchStats> stats;
  Var leaf = g.parameter(x);
  const Var out = euclid_head(bind, leaf, true, &stats);
  CHECK(out.value().allFinite());
  CHECK(stats.size() == 2);
  const Tensor w = gaussian_tensor(6, 3, rng);
  CHECK(diff::finite_diff_check(g, diff::sum(out * g.constant(w)), leaf) <= 1e-4);
  Var fc1 = bind("head.fc1.weight");
  CHECK(diff::finite_diff_check(g, diff::sum(out * g.constant(w)), fc1) <= 1e-4);

  update_running_stats(fresh, stats, 0.0);
  CHECK((fresh.at("head.bn0.running_mean") - stats[0].mean).norm() == 0.0);
}

TEST_CASE("hyperbolic layers") {
  const geometry::Curvature k(1.0);
  Rng rng = derive_rng(38);
  const Tensor x = ball_rows(5, 4, rng, 0.9);
  Graph g;
  Var xv = g.constant(x);
  Var id = hyp_linear(xv, g.constant(Tensor::Identity(4, 4)), g.constant(Tensor::Zero(1, 4)), k);
  CHECK((id.value() - x).norm() < 1e-12);
  Var zero = hyp_linear(g.constant(Tensor::Zero(2, 4)), g.constant(gaussian_tensor(4, 3, rng)), g.constant(Tensor::Zero(1, 3)), k);
  CHECK(zero.value().norm() == 0.0);

  // Rotation: W R^T applied to R x equals W applied to x.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Random(4, 4));
  const Tensor r = qr.householderQ();
  const Tensor w = gaussian_tensor(4, 3, rng, 0.5);
  // Rows are points, so x -> x R^T rotates each row by R.
  Var rotated = hyp_linear(g.constant(x * r.transpose()), g.constant(r * w), g.constant(Tensor::Zero(1, 3)), k);
  Var plain = hyp_linear(xv, g.constant(w), g.constant(Tensor::Zero(1, 3)), k);
  CHECK((rotated.value() - plain.value()).norm() < 1e-12);

  Tensor ray(1, 3);
  ray << 0.2, 0.3, 0.1;
  CHECK((hyp_relu(g.constant(ray), k).value() - ray).norm() < 1e-14);
  CHECK(hyp_relu(g.constant(Tensor::Zero(1, 3)), k).value().norm() == 0.0);
  Tensor edge = gaussian_tensor(50, 4, rng);
  edge.rowwise().normalize();
  edge *= k.max_norm();
  const Tensor relu_out = hyp_relu(g.constant(edge), k).value();
  for (Eigen::Index i = 0; i < relu_out.rows(); ++i) CHECK(relu_out.row(i).norm() <= k.max_norm());
}

TEST_CASE("hyperbolic head: identity, ball invariant, gradients") {
  const geometry::Curvature k(1.0);
  Rng rng = derive_rng(39);
  ParamSet params;
  init_hyp_head(params, 4, {4, 4, 4}, rng);
  CHECK(params.param("head.hyp0.bias").kind == ParamKind::Ball);
  ParamSet ident = params;
  for (int i = 0; i < 3; ++i) ident.at("head.hyp" + std::to_string(i) + ".weight") = Tensor::Identity(4, 4);
  Tensor pos = ball_rows(5, 4, rng, 0.9).array().abs();
  Graph g;
  Binder ib(g, ident, false);
  CHECK((hyp_head(ib, g.constant(pos), k).value() - pos).norm() < 1e-12);

  Binder bind(g, params, true);
  const Tensor x = ball_rows(200, 4, rng, k.max_norm());
  const Tensor out = hyp_head(bind, g.constant(x), k).value();
  for (Eigen::Index i = 0; i < out.rows(); ++i) CHECK(out.row(i).norm() <= k.max_norm());

  ParamSet biased;
  init_hyp_head(biased, 4, {6, 6, 3}, rng);
  for (int i = 0; i < 3; ++i)
    biased.at("head.hyp" + std::to_string(i) + ".bias") = ball_rows(1, i < 2 ? 6 : 3, rng, 0.3);
  Graph h;
  Binder hb(h, biased, true);
  Var leaf = h.parameter(ball_rows(4, 4, rng, 0.7));
  Var loss = diff::sum(hyp_head(hb, leaf, k) * h.constant(gaussian_tensor(4, 3, rng)));
  CHECK(diff::finite_diff_check(h, loss, leaf) <= 1e-4);
  CHECK(diff::finite_diff_check(h, loss, hb("head.hyp1.weight")) <= 1e-4);
  CHECK(diff::finite_diff_check(h, loss, hb("head.hyp2.bias")) <= 1e-4);
}

TEST_CASE("hyperbolic head with tangent normalization") {
  const geometry::Curvature k(1.0);
  Rng rng = derive_rng(41);
  ParamSet plain, normed;
  Rng r1 = derive_rng(5), r2 = derive_rng(5);
  init_hyp_head(plain, 4, {6, 6, 3}, r1);
  init_hyp_head(normed, 4, {6, 6, 3}, r2, true);
  CHECK_FALSE(plain.contains("head.bn0.gain"));
  CHECK(normed.contains("head.bn0.gain"));
  CHECK(normed.contains("head.bn1.running_var"));
  CHECK_FALSE(normed.contains("head.bn2.gain"));
  for (const auto& [name, p] : plain) CHECK(p.value == normed.at(name));

  const Tensor x = ball_rows(16, 4, rng, 0.8);
  Graph g;
  Binder bind(g, normed, true);
  std::vector<BatchStats> stats;
  const Tensor out = hyp_head(bind, g.constant(x), k, true, &stats).value();
  REQUIRE(stats.size() == 2);
  Tensor t(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) t.row(i) = geometry::log_map0(row_of(x, i), k).transpose();
  CHECK((stats[0].mean - t.colwise().mean()).norm() < 1e-12);
  for (Eigen::Index i = 0; i < out.rows(); ++i) CHECK(out.row(i).norm() <= k.max_norm());

  // Fresh running buffers (mean 0, var 1) make eval mode a near-identity rescale.
  Graph e;
  Binder eb(e, normed, false);
  const double s = 1.0 / std::sqrt(1.0 + 1e-5);
  ParamSet scaled = plain;
  scaled.at("head.hyp0.weight") *= s;
  scaled.at("head.hyp1.weight") *= s;
  Binder sb(e, scaled, false);
  CHECK((hyp_head(eb, e.constant(x), k, false).value() - hyp_head(sb, e.constant(x), k, false).value()).norm() < 1e-12);

  Graph h;
  Binder hb(h, normed, true);
  Var leaf = h.parameter(ball_rows(6, 4, rng, 0.7));
  Var loss = diff::sum(hyp_head(hb, leaf, k) * h.constant(gaussian_tensor(6, 3, rng)));
  CHECK(diff::finite_diff_check(h, loss, leaf) <= 1e-4);
  CHECK(diff::finite_diff_check(h, loss, hb("head.bn0.gain")) <= 1e-4);
  CHECK(diff::finite_diff_check(h, loss, hb("head.bn1.bias")) <= 1e-4);
}
