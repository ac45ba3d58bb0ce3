#pragma once

#include "hmsn/harness/config.hpp"
#include "hmsn/nn/encoder.hpp"
#include "hmsn/nn/patches.hpp"

#include <vector>

namespace hmsn::harness {

// Random horizontal flip, then a random crop of the zero-padded image back to
// the original size.
nn::Image augment(const nn::Image& image, bool flip, int pad, Rng& rng);

struct ViewEntry {
  nn::TokenView target;                // augmented, unmasked
  std::vector<nn::TokenView> anchors;  // random-mask views first, then focal
};

ViewEntry make_views(const nn::Image& image, const ViewRecipe& recipe, int patch, Rng& rng);

// Every patch of an unaugmented image, as used for evaluation.
nn::TokenView full_view(const nn::Image& image, int patch);

}  // namespace hmsn::harness
