#pragma once

#include "hmsn/tensor.hpp"

#include <vector>

namespace hmsn::nn {

// Height x width x channels, channel-fastest.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c) : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, 0.0) {}

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

// (H/p)*(W/p) rows in row-major patch order; each row is one p x p x C patch
// flattened in (y, x, c) order.
Tensor patchify(const Image& image, int patch);
Image unpatchify(const Tensor& patches, int height, int width, int channels, int patch);

struct MaskSpec {
  enum class Kind { Random, Focal };
  Kind kind = Kind::Random;
  double keep_ratio = 1.0;  // random
  int focal_rows = 0;       // focal block, in patches
  int focal_cols = 0;

  static MaskSpec random(double keep) { return {Kind::Random, keep, 0, 0}; }
  static MaskSpec focal(int rows, int cols) { return {Kind::Focal, 1.0, rows, cols}; }

  // Throws ConfigError when the spec cannot keep at least one patch of a
  // grid_rows x grid_cols grid.
  void validate(int grid_rows, int grid_cols) const;
  int kept_count(int grid_rows, int grid_cols) const;
};

struct MaskedPatches {
  Tensor patches;
  std::vector<int> kept;  // original patch indices, ascending
};

// Dropped patches are removed from the sequence, not zeroed.
MaskedPatches apply_mask(const Tensor& patches, int grid_rows, int grid_cols, const MaskSpec& spec, Rng& rng);

}  // namespace hmsn::nn
