#include "hmsn/nn/patches.hpp"

#include "hmsn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hmsn::nn {

Tensor patchify(const Image& image, int patch) {
  if (patch <= 0 || image.height % patch != 0 || image.width % patch != 0)
    throw ShapeError("patchify: image size not divisible by patch size");
  if (image.data.size() != static_cast<std::size_t>(image.height) * image.width * image.channels)
    throw ShapeError("patchify: image buffer does not match its shape");
  const int gr = image.height / patch;
  const int gc = image.width / patch;
  Tensor out(gr * gc, patch * patch * image.channels);
  for (int pr = 0; pr < gr; ++pr) {
    for (int pc = 0; pc < gc; ++pc) {
      const int row = pr * gc + pc;
      int col = 0;
      for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x)
          for (int c = 0; c < image.channels; ++c) out(row, col++) = image.at(pr * patch + y, pc * patch + x, c);
    }
  }
  return out;
}

Image unpatchify(const Tensor& patches, int height, int width, int channels, int patch) {
  if (patch <= 0 || height % patch != 0 || width % patch != 0)
    throw ShapeError("unpatchify: image size not divisible by patch size");
  const int gr = height / patch;
  const int gc = width / patch;
  if (patches.rows() != gr * gc || patches.cols() != patch * patch * channels)
    throw ShapeError("unpatchify: patch tensor shape mismatch");
  Image img(height, width, channels);
  for (int pr = 0; pr < gr; ++pr) {
    for (int pc = 0; pc < gc; ++pc) {
      const int row = pr * gc + pc;
      int col = 0;
      for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x)
          for (int c = 0; c < channels; ++c) img.at(pr * patch + y, pc * patch + x, c) = patches(row, col++);
    }
  }
  return img;
}

void MaskSpec::validate(int grid_rows, int grid_cols) const {
  if (kind == Kind::Random) {
    if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) throw ConfigError("mask keep_ratio must lie in (0, 1]");
  } else {
    if (focal_rows < 1 || focal_cols < 1) throw ConfigError("focal mask must keep at least one patch");
    if (focal_rows > grid_rows || focal_cols > grid_cols) throw ConfigError("focal block larger than the patch grid");
  }
}

int MaskSpec::kept_count(int grid_rows, int grid_cols) const {
  if (kind == Kind::Focal) return focal_rows * focal_cols;
  const int n = grid_rows * grid_cols;
  // The small offset keeps products such as 0.1 * 30 from rounding up.
  const int k = static_cast<int>(std::ceil(keep_ratio * n - 1e-9));
  return std::clamp(k, 1, n);
}

MaskedPatches apply_mask(const Tensor& patches, int grid_rows, int grid_cols, const MaskSpec& spec, Rng& rng) {
  spec.validate(grid_rows, grid_cols);
  const int n = grid_rows * grid_cols;
  if (patches.rows() != n) throw ShapeError("apply_mask: patch count does not match the grid");
  MaskedPatches out;
  if (spec.kind == MaskSpec::Kind::Random) {
    const int keep = spec.kept_count(grid_rows, grid_cols);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    if (keep < n) {
      // Partial Fisher-Yates: the first `keep` entries are a uniform sample.
      for (int i = 0; i < keep; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
      }
    }
    out.kept.assign(order.begin(), order.begin() + keep);
    std::sort(out.kept.begin(), out.kept.end());
  } else {
    std::uniform_int_distribution<int> top(0, grid_rows - spec.focal_rows);
    std::uniform_int_distribution<int> left(0, grid_cols - spec.focal_cols);
    const int r0 = top(rng);
    const int c0 = left(rng);
    for (int r = r0; r < r0 + spec.focal_rows; ++r)
      for (int c = c0; c < c0 + spec.focal_cols; ++c) out.kept.push_back(r * grid_cols + c);
  }
  if (out.kept.empty()) throw ConfigError("mask removed every patch");
  out.patches.resize(static_cast<Eigen::Index>(out.kept.size()), patches.cols());
  for (std::size_t i = 0; i < out.kept.size(); ++i)
    out.patches.row(static_cast<Eigen::Index>(i)) = patches.row(out.kept[i]);
  return out;
}

}  // namespace hmsn::nn
