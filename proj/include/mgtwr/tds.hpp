#pragma once

#include "mgtwr/local_regression.hpp"
#include "mgtwr/types.hpp"

#include <cstdint>
#include <optional>

namespace mgtwr {

// ---------------------------------------------------------------------------
// Bandwidth grids
// ---------------------------------------------------------------------------

/// Ordered candidate scales per dimension, strictly decreasing. Element 0 is
/// the OLS-limit global sentinel; the finest level keeps at least K+2
/// effective neighbors at every focal point.
struct BandwidthGrid {
  std::vector<Bandwidth> spatial;
  std::vector<Bandwidth> temporal;
  std::vector<std::string> warnings;

  std::size_t spatial_levels() const { return spatial.size(); }
  std::size_t temporal_levels() const { return temporal.size(); }
};

/// Geometric sequence from hi down to lo with `levels` entries; endpoints are
/// exact.
std::vector<double> geometric_levels(double hi, double lo, std::size_t levels);

/// Builds the candidate grid. `temporal_levels` defaults to `levels`; passing
/// 1 pins the temporal dimension at its sentinel (the spatial-only model).
BandwidthGrid build_grid(const Dataset& data, std::size_t levels, const KernelSpec& spec,
                         std::size_t temporal_levels = 0);

// ---------------------------------------------------------------------------
// Calibration state and configuration
// ---------------------------------------------------------------------------

/// Per-covariate position on the grid plus the current backfit decomposition.
struct ScaleState {
  std::vector<std::size_t> spatial_index;   // per covariate
  std::vector<std::size_t> temporal_index;  // per covariate
  Eigen::MatrixXd beta;                     // n x K local coefficients
  Eigen::MatrixXd partial;                  // n x K, column k = beta_k .* x_k

  bool at_spatial_max(std::size_t k) const { return spatial_index[k] == 0; }
  bool at_temporal_max(std::size_t k) const { return temporal_index[k] == 0; }
};

enum class OrderStrategy { fixed_cyclic, random, importance };

struct TdsConfig {
  std::size_t grid_levels = 20;  // M
  OrderStrategy order = OrderStrategy::importance;
  double delta_rmse_tol = 1e-5;  // relative per-sweep improvement threshold
  std::size_t patience = 2;      // consecutive below-threshold sweeps required
  std::size_t max_iterations = 200;
  std::uint64_t seed = 0;
  double max_condition = 1e10;
  bool spatial_only = false;  // pin the temporal grid at its sentinel

  void validate() const {
    if (grid_levels < 3) throw InvalidInputError("grid_levels must be at least 3");
    if (patience < 1) throw InvalidInputError("patience must be at least 1");
  }
};

// ---------------------------------------------------------------------------
// Candidate moves
// ---------------------------------------------------------------------------

struct CandidatePair {
  std::size_t spatial;
  std::size_t temporal;
  friend bool operator==(const CandidatePair& a, const CandidatePair& b) {
    return a.spatial == b.spatial && a.temporal == b.temporal;
  }
};

/// Candidate pairs for covariate k: per dimension, the current level, its
/// grid neighbors, and the finest level active among the other covariates;
/// the cross product of both sets, deduplicated, ordered coarse to fine.
/// Always contains the incumbent pair; never more than 16 entries.
std::vector<CandidatePair> candidate_set(std::size_t k, const std::vector<std::size_t>& spatial_index,
                                         const std::vector<std::size_t>& temporal_index,
                                         const BandwidthGrid& grid);

struct DescentStep {
  CandidatePair best{0, 0};
  double best_aicc = kInf;
  bool moved = false;
  bool stuck = false;  // every candidate scored +inf
  UnivariateSmooth smooth;
};

/// Evaluates every candidate pair by the univariate AICc of the partial
/// residual smoothed against x_k and returns the argmin. Ties and the stuck
/// case keep the coarsest candidate (candidates are ordered coarse to fine).
DescentStep steepest_descent_step(std::size_t k, const ScaleState& state,
                                  const Eigen::VectorXd& partial_residual, WeightCache& cache,
                                  const BandwidthGrid& grid);

/// Scale-normalized contribution scores: mean_i |beta_k(i) x_ik| / sd(x_k)
/// (sd := 1 for the intercept). Drives the importance update order.
Eigen::VectorXd importance_scores(const ScaleState& state, const Eigen::MatrixXd& X);

// ---------------------------------------------------------------------------
// Backfitting results
// ---------------------------------------------------------------------------

struct SweepMove {
  std::size_t sweep;
  std::size_t covariate;
  std::size_t old_spatial, old_temporal;
  std::size_t new_spatial, new_temporal;
  double aicc;
  bool moved;
};

struct SweepSummary {
  std::size_t sweep;
  double rmse;
  double delta_rel;
  std::vector<std::size_t> order;
};

struct CovariateScale {
  Bandwidth spatial;
  Bandwidth temporal;
  std::size_t spatial_index = 0;
  std::size_t temporal_index = 0;
  bool at_spatial_max = false;
  bool at_temporal_max = false;
};

struct FitResult {
  std::vector<CovariateScale> scales;  // per covariate
  Eigen::MatrixXd beta;                // n x K
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  double rmse = 0.0;
  double aicc = kNaN;  // filled when hat-matrix inference runs
  bool converged = false;
  std::size_t sweeps = 0;
  std::vector<SweepMove> moves;
  std::vector<SweepSummary> sweep_log;
  std::vector<std::string> diagnostics;
  BandwidthGrid grid;
  KernelSpec spec;
  TdsConfig config;
};

/// Top-Down Scale multiscale backfitting. Starts every covariate at the grid
/// maxima with OLS coefficients and descends by per-covariate steepest
/// discrete moves until the relative sweep-RMSE improvement stays below
/// delta_rmse_tol for `patience` consecutive sweeps. Non-convergence within
/// max_iterations is reported through the converged flag, never thrown.
FitResult backfit(const Dataset& data, const KernelSpec& spec, const TdsConfig& config);
FitResult backfit(const Dataset& data, const KernelSpec& spec, const TdsConfig& config,
                  const BandwidthGrid& grid);

/// Spatial multiscale model: the temporal dimension never enters the weights.
FitResult fit_mgwr(const Dataset& data, const KernelSpec& spec, const TdsConfig& config);

}  // namespace mgtwr
