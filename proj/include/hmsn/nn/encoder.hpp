#pragma once

// Pre-norm vision transformer trunk returning the final [CLS] state projected
// to the representation dimension. Masked views simply carry fewer tokens;
// positional embeddings are looked up by each token's original patch index.

#include "hmsn/nn/params.hpp"

#include <span>
#include <vector>

namespace hmsn::nn {

struct EncoderConfig {
  int image_size = 32;
  int patch_size = 4;
  int channels = 3;
  int depth = 4;
  int width = 96;
  int heads = 4;
  int mlp_hidden = 192;
  int out_dim = 16;

  void validate() const;
  int grid() const { return image_size / patch_size; }
  int num_patches() const { return grid() * grid(); }
  int patch_dim() const { return patch_size * patch_size * channels; }
};

void init_encoder(ParamSet& params, const EncoderConfig& config, Rng& rng);

struct TokenView {
  Tensor patches;              // n x patch_dim
  std::vector<int> positions;  // original patch index of each row
};

// Encodes every view in one packed pass; returns views.size() x out_dim.
diff::Var encode(Binder& bind, const EncoderConfig& config, std::span<const TokenView> views);

}  // namespace hmsn::nn
