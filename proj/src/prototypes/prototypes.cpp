#include "hmsn/prototypes.hpp"

#include "hmsn/errors.hpp"
#include "hmsn/nn/params.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace hmsn::prototypes {

const char* mode_name(BankMode mode) {
  switch (mode) {
    case BankMode::LearnableBall: return "learnable-ball";
    case BankMode::LearnableEuclidean: return "learnable-euclidean";
    case BankMode::IdealBoundary: return "ideal-boundary";
  }
  return "learnable-ball";
}

BankMode parse_mode(const std::string& name) {
  if (name == "learnable-ball") return BankMode::LearnableBall;
  if (name == "learnable-euclidean") return BankMode::LearnableEuclidean;
  if (name == "ideal-boundary") return BankMode::IdealBoundary;
  throw Error("unknown prototype bank mode '" + name + "'");
}

double PrototypeBank::mean_norm() const {
  if (vectors.rows() == 0) return 0.0;
  return vectors.rowwise().norm().mean();
}

void PrototypeBank::validate() const {
  if (vectors.rows() < 2) throw ConfigError("a prototype bank needs K > 1 prototypes");
  if (!vectors.allFinite()) throw Error("prototype bank contains non-finite values");
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
    const Vec row = row_of(vectors, r);
    if (mode == BankMode::LearnableBall) geometry::check_in_ball(row, curvature, "prototype");
    if (mode == BankMode::IdealBoundary && std::abs(row.norm() - 1.0) > 1e-12)
      throw BoundaryViolation("ideal prototype is not a unit vector");
  }
}

PrototypeBank init_learnable(int count, int dim, Rng& rng, double stddev, Curvature k) {
  if (count < 2) throw ConfigError("a prototype bank needs K > 1 prototypes");
  if (dim < 2) throw ConfigError("prototype dimension must be at least 2");
  PrototypeBank bank{BankMode::LearnableBall, nn::normal_tensor(count, dim, stddev, rng), k};
  for (Eigen::Index r = 0; r < bank.vectors.rows(); ++r)
    bank.vectors.row(r) = geometry::project_to_ball(row_of(bank.vectors, r), k).transpose();
  return bank;
}

PrototypeBank init_euclidean(int count, int dim, Rng& rng, double stddev) {
  if (count < 2) throw ConfigError("a prototype bank needs K > 1 prototypes");
  return {BankMode::LearnableEuclidean, nn::normal_tensor(count, dim, stddev, rng), Curvature{}};
}

double max_offdiag_cosine(const Tensor& q) {
  Tensor gram = q * q.transpose();
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < gram.rows(); ++i)
    for (Eigen::Index j = 0; j < gram.cols(); ++j)
      if (i != j) worst = std::max(worst, gram(i, j));
  return worst;
}

double min_pairwise_angle(const Tensor& rows) {
  Tensor unit = rows;
  for (Eigen::Index r = 0; r < unit.rows(); ++r) unit.row(r).normalize();
  return std::acos(std::clamp(max_offdiag_cosine(unit), -1.0, 1.0));
}

namespace {

void normalize_rows(Tensor& q) {
  for (Eigen::Index r = 0; r < q.rows(); ++r) q.row(r).normalize();
}

}  // namespace

Placement place_ideal_traced(int count, int dim, Rng& rng, const PlacementOptions& opt) {
  if (count < 2) throw ConfigError("a prototype bank needs K > 1 prototypes");
  if (dim < 2) throw ConfigError("prototype dimension must be at least 2");
  Placement out;
  out.bank.mode = BankMode::IdealBoundary;
  out.bank.curvature = Curvature{1.0};

  if (dim == 2) {
    out.bank.vectors.resize(count, 2);
    for (int j = 0; j < count; ++j) {
      const double a = 2.0 * std::numbers::pi * j / count;
      out.bank.vectors(j, 0) = std::cos(a);
      out.bank.vectors(j, 1) = std::sin(a);
    }
    out.max_cosine_trace.push_back(max_offdiag_cosine(out.bank.vectors));
    return out;
  }

  // Descent on log(sum_{i<j} exp(alpha <q_i, q_j>)), rows renormalized after
  // each step. The log keeps the step bounded without moving the minimizers.
  double best = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < opt.restarts; ++restart) {
    Tensor q = nn::normal_tensor(count, dim, 1.0, rng);
    normalize_rows(q);
    Tensor incumbent = q;
    double inc_cos = max_offdiag_cosine(q);
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(opt.iterations));
    for (int it = 0; it < opt.iterations; ++it) {
      Tensor gram = q * q.transpose();
      const double shift = opt.alpha * max_offdiag_cosine(q);
      Tensor w = (opt.alpha * gram.array() - shift).exp();
      w.diagonal().setZero();
      const double total = w.sum() / 2.0;
      Tensor grad = (opt.alpha / total / 2.0) * (w * q);
      q -= opt.lr * grad;
      normalize_rows(q);
      const double m = max_offdiag_cosine(q);
      if (m < inc_cos) {
        inc_cos = m;
        incumbent = q;
      }
      trace.push_back(inc_cos);
    }
    if (inc_cos < best) {
      best = inc_cos;
      out.bank.vectors = incumbent;
      out.max_cosine_trace = std::move(trace);
    }
  }
  return out;
}

PrototypeBank place_ideal(int count, int dim, Rng& rng, const PlacementOptions& options) {
  return place_ideal_traced(count, dim, rng, options).bank;
}

double busemann(const Vec& q, const Vec& z) {
  if (std::abs(q.norm() - 1.0) > 1e-9) throw BoundaryViolation("busemann: ideal point is not a unit vector");
  const double z2 = z.squaredNorm();
  if (!(z2 < 1.0)) throw BoundaryViolation("busemann: point is not inside the unit ball");
  return std::log((q - z).squaredNorm() / (1.0 - z2));
}

}  // namespace hmsn::prototypes
