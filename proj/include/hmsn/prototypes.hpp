#pragma once

// Prototype banks. Learnable banks live inside the ball (HMSN) or in plain
// Euclidean space (MSN baseline); ideal banks are fixed unit vectors on the
// boundary sphere, scored with the Busemann function.

#include "hmsn/geometry.hpp"

#include <string>
#include <vector>

namespace hmsn::prototypes {

using geometry::Curvature;

enum class BankMode { LearnableBall, LearnableEuclidean, IdealBoundary };

const char* mode_name(BankMode mode);
BankMode parse_mode(const std::string& name);

struct PrototypeBank {
  BankMode mode = BankMode::LearnableBall;
  Tensor vectors;  // K x d
  Curvature curvature;

  int size() const { return static_cast<int>(vectors.rows()); }
  int dim() const { return static_cast<int>(vectors.cols()); }
  // Mean Euclidean norm of the rows.
  double mean_norm() const;
  // Throws if the bank breaks its mode's invariant.
  void validate() const;
};

// Rows i.i.d. Normal(0, stddev^2), then kept inside the ball.
PrototypeBank init_learnable(int count, int dim, Rng& rng, double stddev = 0.01, Curvature k = Curvature{});
PrototypeBank init_euclidean(int count, int dim, Rng& rng, double stddev = 0.01);

struct PlacementOptions {
  double alpha = 10.0;
  int iterations = 2000;
  double lr = 0.1;
  int restarts = 8;
};

struct Placement {
  PrototypeBank bank;
  // Max off-diagonal cosine of the best configuration found so far, one
  // entry per iteration of the winning restart.
  std::vector<double> max_cosine_trace;
};

// d = 2: K equally spaced angles. d >= 3: separation by projected descent on
// a pairwise repulsion energy, best of several restarts.
Placement place_ideal_traced(int count, int dim, Rng& rng, const PlacementOptions& options = {});
PrototypeBank place_ideal(int count, int dim, Rng& rng, const PlacementOptions& options = {});

// log(|q - z|^2 / (1 - |z|^2)) on the unit ball.
double busemann(const Vec& q, const Vec& z);

double max_offdiag_cosine(const Tensor& unit_rows);
// Smallest angle (radians) between any two rows.
double min_pairwise_angle(const Tensor& rows);

}  // namespace hmsn::prototypes
