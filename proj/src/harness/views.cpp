#include "hmsn/harness/views.hpp"

#include <numeric>

namespace hmsn::harness {

nn::Image augment(const nn::Image& image, bool flip, int pad, Rng& rng) {
  nn::Image out(image.height, image.width, image.channels);
  bool mirror = false;
  if (flip) mirror = std::bernoulli_distribution(0.5)(rng);
  int dy = 0, dx = 0;
  if (pad > 0) {
    std::uniform_int_distribution<int> shift(-pad, pad);
    dy = shift(rng);
    dx = shift(rng);
  }
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const int sy = y + dy;
      int sx = x + dx;
      if (sy < 0 || sy >= image.height || sx < 0 || sx >= image.width) continue;
      if (mirror) sx = image.width - 1 - sx;
      for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  return out;
}

nn::TokenView full_view(const nn::Image& image, int patch) {
  nn::TokenView v;
  v.patches = nn::patchify(image, patch);
  v.positions.resize(static_cast<std::size_t>(v.patches.rows()));
  std::iota(v.positions.begin(), v.positions.end(), 0);
  return v;
}

ViewEntry make_views(const nn::Image& image, const ViewRecipe& recipe, int patch, Rng& rng) {
  const int grid_rows = image.height / patch;
  const int grid_cols = image.width / patch;
  ViewEntry e;
  e.target = full_view(augment(image, recipe.flip, recipe.crop_pad, rng), patch);
  auto add = [&](const nn::MaskSpec& spec) {
    const Tensor patches = nn::patchify(augment(image, recipe.flip, recipe.crop_pad, rng), patch);
    nn::MaskedPatches m = nn::apply_mask(patches, grid_rows, grid_cols, spec, rng);
    e.anchors.push_back({std::move(m.patches), std::move(m.kept)});
  };
  for (int i = 0; i < recipe.random_views; ++i) add(nn::MaskSpec::random(recipe.random_keep));
  for (int i = 0; i < recipe.focal_views; ++i) add(nn::MaskSpec::focal(recipe.focal_patches, recipe.focal_patches));
  return e;
}

}  // namespace hmsn::harness
