#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace hmsn {

// Row-major so that a batch of points is a stack of rows and reshapes keep
// the natural element order.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

using Rng = std::mt19937_64;

// Independent stream for (seed, a, b); used to make per-step randomness a
// pure function of the step index so resumed runs replay exactly.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

inline Tensor as_row(const Vec& v) { return Tensor(v.transpose()); }
inline Vec row_of(const Tensor& t, Eigen::Index r) { return t.row(r).transpose(); }

}  // namespace hmsn
