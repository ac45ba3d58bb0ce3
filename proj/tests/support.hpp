#pragma once

#include "hmsn/tensor.hpp"

#include <cmath>
#include <random>

namespace testing_support {

using hmsn::Rng;
using hmsn::Tensor;
using hmsn::Vec;

inline Vec gaussian(int d, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> n(0.0, stddev);
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = n(rng);
  return v;
}

// Uniform direction with norm drawn uniformly from [0, max_norm].
inline Vec ball_point(int d, Rng& rng, double max_norm) {
  Vec v = gaussian(d, rng);
  v.normalize();
  return v * std::uniform_real_distribution<double>(0.0, max_norm)(rng);
}

inline Tensor ball_rows(int rows, int d, Rng& rng, double max_norm) {
  Tensor t(rows, d);
  for (int r = 0; r < rows; ++r) t.row(r) = ball_point(d, rng, max_norm).transpose();
  return t;
}

inline Tensor gaussian_tensor(int rows, int cols, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> n(0.0, stddev);
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = n(rng);
  return t;
}

}  // namespace testing_support
