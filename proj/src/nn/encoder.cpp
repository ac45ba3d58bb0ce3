#include "hmsn/nn/encoder.hpp"

#include "hmsn/errors.hpp"

#include <cmath>
#include <string>

namespace hmsn::nn {

using diff::Var;

void EncoderConfig::validate() const {
  if (patch_size <= 0 || image_size <= 0 || image_size % patch_size != 0)
    throw ConfigError("image_size must be divisible by patch_size");
  if (heads <= 0 || width <= 0 || width % heads != 0) throw ConfigError("width must be divisible by heads");
  if (out_dim < 2) throw ConfigError("representation dimension d must be at least 2");
  if (depth < 0 || channels <= 0 || mlp_hidden <= 0) throw ConfigError("invalid encoder size");
}

namespace {

std::string blk(int i, const char* leaf) { return "enc.block" + std::to_string(i) + "." + leaf; }

Var affine_ln(Binder& bind, Var x, const std::string& prefix) {
  return add_row(mul_row(layer_norm_rows(x), bind(prefix + ".gain")), bind(prefix + ".bias"));
}

Var linear(Binder& bind, Var x, const std::string& prefix) {
  return add_row(matmul(x, bind(prefix + ".weight")), bind(prefix + ".bias"));
}

void add_linear(ParamSet& p, const std::string& prefix, int in, int out, Rng& rng) {
  p.add(prefix + ".weight", trunc_normal_tensor(in, out, 0.02, rng));
  p.add(prefix + ".bias", Tensor::Zero(1, out));
}

void add_ln(ParamSet& p, const std::string& prefix, int width) {
  p.add(prefix + ".gain", Tensor::Ones(1, width));
  p.add(prefix + ".bias", Tensor::Zero(1, width));
}

}  // namespace

void init_encoder(ParamSet& p, const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  add_linear(p, "enc.patch", cfg.patch_dim(), cfg.width, rng);
  p.add("enc.cls", trunc_normal_tensor(1, cfg.width, 0.02, rng));
  p.add("enc.pos", trunc_normal_tensor(cfg.num_patches() + 1, cfg.width, 0.02, rng));
  for (int i = 0; i < cfg.depth; ++i) {
    add_ln(p, blk(i, "ln1"), cfg.width);
    add_linear(p, blk(i, "attn.qkv"), cfg.width, 3 * cfg.width, rng);
    add_linear(p, blk(i, "attn.proj"), cfg.width, cfg.width, rng);
    add_ln(p, blk(i, "ln2"), cfg.width);
    add_linear(p, blk(i, "mlp.fc1"), cfg.width, cfg.mlp_hidden, rng);
    add_linear(p, blk(i, "mlp.fc2"), cfg.mlp_hidden, cfg.width, rng);
  }
  add_ln(p, "enc.norm", cfg.width);
  add_linear(p, "enc.out", cfg.width, cfg.out_dim, rng);
}

Var encode(Binder& bind, const EncoderConfig& cfg, std::span<const TokenView> views) {
  if (views.empty()) throw ShapeError("encode: no views");
  diff::Graph& g = bind.graph();

  int total_patches = 0;
  for (const TokenView& v : views) {
    if (v.patches.rows() == 0) throw ShapeError("encode: empty token sequence");
    if (v.patches.cols() != cfg.patch_dim()) throw ShapeError("encode: patch length mismatch");
    if (static_cast<Eigen::Index>(v.positions.size()) != v.patches.rows())
      throw ShapeError("encode: positions do not match patches");
    total_patches += static_cast<int>(v.patches.rows());
  }

  Tensor stacked(total_patches, cfg.patch_dim());
  std::vector<int> token_rows;   // rows of [cls; patch embeddings]
  std::vector<int> pos_rows;     // rows of the positional table
  std::vector<int> offsets{0};   // token segment boundaries
  int at = 0;
  for (const TokenView& v : views) {
    const int n = static_cast<int>(v.patches.rows());
    stacked.middleRows(at, n) = v.patches;
    token_rows.push_back(0);
    pos_rows.push_back(0);
    for (int j = 0; j < n; ++j) {
      const int pos = v.positions[static_cast<std::size_t>(j)];
      if (pos < 0 || pos >= cfg.num_patches()) throw ShapeError("encode: patch position out of range");
      token_rows.push_back(1 + at + j);
      pos_rows.push_back(1 + pos);
    }
    at += n;
    offsets.push_back(offsets.back() + n + 1);
  }

  Var emb = linear(bind, g.constant(std::move(stacked)), "enc.patch");
  const Var with_cls[] = {bind("enc.cls"), emb};
  Var x = gather_rows(concat_rows(with_cls), token_rows) + gather_rows(bind("enc.pos"), pos_rows);

  for (int i = 0; i < cfg.depth; ++i) {
    Var h = affine_ln(bind, x, blk(i, "ln1"));
    Var attn = segment_attention(linear(bind, h, blk(i, "attn.qkv")), offsets, cfg.heads);
    x = x + linear(bind, attn, blk(i, "attn.proj"));
    h = affine_ln(bind, x, blk(i, "ln2"));
    x = x + linear(bind, gelu(linear(bind, h, blk(i, "mlp.fc1"))), blk(i, "mlp.fc2"));
  }

  std::vector<int> cls_rows(offsets.begin(), offsets.end() - 1);
  Var cls = affine_ln(bind, gather_rows(x, cls_rows), "enc.norm");
  return linear(bind, cls, "enc.out");
}

}  // namespace hmsn::nn
