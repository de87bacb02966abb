#pragma once

#include "mgtwr/types.hpp"
#include "mgtwr/weight_cache.hpp"

namespace mgtwr {

struct WlsOptions {
  /// Reject candidates whose weighted cross-product condition number exceeds
  /// this ceiling.
  double max_condition = 1e10;
  /// Singularity threshold on singular values of the weighted design:
  /// sigma_min < rtol * sigma_max counts as rank deficient.
  double singular_rtol = 1e-10;
};

struct WlsResult {
  Eigen::VectorXd beta;  // length K
  double leverage = 0.0; // focal row of the local hat operator
};

/// Weighted least squares of y on X with weights w, evaluated at one focal
/// row. Throws SingularFitError or LocalCollinearityError.
WlsResult wls_at(std::size_t focal_index, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& w, const WlsOptions& opts = {});

struct LocalFit {
  Eigen::MatrixXd beta;      // n x K local coefficients
  Eigen::VectorXd hat_diag;  // leverage per focal point
  Eigen::VectorXd residuals;
  double trS = 0.0;
  double rss = 0.0;
  double aicc = 0.0;
};

/// Single-scale GTWR: one bandwidth pair shared by every coefficient.
LocalFit gtwr_fit(const Dataset& data, const Bandwidth& h_s, const Bandwidth& h_t,
                  const KernelSpec& spec, const WlsOptions& opts = {});
LocalFit gtwr_fit(WeightCache& cache, const Bandwidth& h_s, const Bandwidth& h_t,
                  const WlsOptions& opts = {});

/// Corrected AIC for a linear smoother with trace trS. Returns +inf once the
/// penalty denominator n - 2 - trS is non-positive; candidates scored +inf
/// lose every comparison, which is how degenerate scales are routed around.
double aicc(double rss, std::size_t n, double trS);

struct UnivariateSmooth {
  Eigen::VectorXd beta;      // fitted coefficient per focal point
  Eigen::VectorXd hat_diag;  // smoother leverage per focal point
};

/// Local WLS of `target` on the single regressor `x_k` (no added intercept)
/// at every focal point under the given bandwidth pair.
UnivariateSmooth univariate_smooth(const Eigen::VectorXd& target, const Eigen::VectorXd& x_k,
                                   const Dataset& data, const Bandwidth& h_s,
                                   const Bandwidth& h_t, const KernelSpec& spec);
UnivariateSmooth univariate_smooth(WeightCache& cache, const Eigen::VectorXd& target,
                                   const Eigen::VectorXd& x_k, const Bandwidth& h_s,
                                   const Bandwidth& h_t);

struct ConditionCheck {
  bool pass = true;
  double condition = 1.0;
};

/// 2-norm condition number of the weighted design's cross-product.
ConditionCheck local_condition_guard(const Eigen::MatrixXd& weighted_design, double threshold);

struct OlsFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  double rss = 0.0;
  Eigen::VectorXd se;  // conventional OLS standard errors
};

OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Single-scale out-of-sample prediction by re-estimation: each prediction
/// location/time is treated as a focal point of a local fit on the training
/// data. Optionally returns the local coefficients per prediction row.
Eigen::VectorXd gtwr_predict_reestimate(const Dataset& train, const Bandwidth& h_s,
                                        const Bandwidth& h_t, const KernelSpec& spec,
                                        const Eigen::MatrixX2d& coords_new,
                                        const Eigen::VectorXd& times_new,
                                        const Eigen::MatrixXd& X_new,
                                        Eigen::MatrixXd* beta_out = nullptr,
                                        const WlsOptions& opts = {});

}  // namespace mgtwr
