#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgtwr {

enum class KernelFamily { gaussian, bisquare };
enum class TemporalSymmetry { symmetric, forward };
enum class CombineOp { multiplicative, additive };

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInputError : Error {
  using Error::Error;
};

/// Data/schema problems detected while loading user input.
struct SchemaError : Error {
  using Error::Error;
};

/// A focal point whose combined weight vector is identically zero.
struct DegenerateNeighborhoodError : Error {
  std::size_t focal;
  explicit DegenerateNeighborhoodError(std::size_t focal_index)
      : Error("degenerate neighborhood at focal point " + std::to_string(focal_index)),
        focal(focal_index) {}
};

/// Rank-deficient weighted design at a focal point.
struct SingularFitError : Error {
  std::size_t focal;
  std::size_t effective_n;
  SingularFitError(std::size_t focal_index, std::size_t eff_n)
      : Error("singular local fit at focal point " + std::to_string(focal_index) +
              " (effective sample size " + std::to_string(eff_n) + ")"),
        focal(focal_index),
        effective_n(eff_n) {}
};

/// Local condition number above the configured ceiling.
struct LocalCollinearityError : Error {
  std::size_t focal;
  double condition;
  LocalCollinearityError(std::size_t focal_index, double cond)
      : Error("local collinearity at focal point " + std::to_string(focal_index) +
              " (condition " + std::to_string(cond) + ")"),
        focal(focal_index),
        condition(cond) {}
};

/// Sample too large for exact hat-matrix inference.
struct InferenceCapError : Error {
  using Error::Error;
};

/// Non-positive residual degrees of freedom.
struct InferenceInfeasibleError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Bandwidths
// ---------------------------------------------------------------------------

/// A kernel scale. `value` is a distance (non-adaptive) or a neighbor count
/// (adaptive). A bandwidth flagged `global_sentinel` is the OLS-limit grid
/// maximum: it short-circuits to uniform weights and drops its dimension from
/// the spatio-temporal combination entirely.
struct Bandwidth {
  double value = 0.0;
  bool global_sentinel = false;

  static Bandwidth global(double nominal) { return Bandwidth{nominal, true}; }
  static Bandwidth of(double v) { return Bandwidth{v, false}; }

  bool is_global() const { return global_sentinel; }

  friend bool operator==(const Bandwidth& a, const Bandwidth& b) {
    return a.value == b.value && a.global_sentinel == b.global_sentinel;
  }
};

// ---------------------------------------------------------------------------
// Kernel configuration
// ---------------------------------------------------------------------------

struct KernelSpec {
  KernelFamily spatial_family = KernelFamily::gaussian;
  bool spatial_adaptive = true;
  KernelFamily temporal_family = KernelFamily::gaussian;
  bool temporal_adaptive = false;
  bool cyclic = false;
  double cycle_length = 0.0;
  TemporalSymmetry symmetry = TemporalSymmetry::symmetric;
  CombineOp combine = CombineOp::multiplicative;
  /// Keep only the m largest combined weights per focal point (0 = no cap).
  std::size_t max_neighbors = 0;

  void validate() const {
    if (cyclic && !(cycle_length > 0.0 && std::isfinite(cycle_length)))
      throw InvalidInputError("cyclic kernel requires a positive finite cycle length");
    if (cyclic && symmetry == TemporalSymmetry::forward)
      throw InvalidInputError("forward temporal symmetry is incompatible with a cyclic kernel");
  }
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Observations with planar coordinates, a numeric timestamp, a design matrix
/// whose first column is the intercept, and a response.
struct Dataset {
  Eigen::MatrixX2d coords;                    // n x 2
  Eigen::VectorXd times;                      // n
  Eigen::MatrixXd X;                          // n x K, column 0 == 1
  Eigen::VectorXd y;                          // n
  std::vector<std::string> covariate_names;   // K entries, [0] == "intercept"

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t k() const { return static_cast<std::size_t>(X.cols()); }

  void validate() const;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace mgtwr
