#pragma once

#include "mgtwr/tds.hpp"
#include "mgtwr/types.hpp"

namespace mgtwr {

enum class InferenceMethod { exact, local_approx };

struct InferenceResult {
  double trS = kNaN;
  double sigma2_hat = kNaN;
  Eigen::MatrixXd se;      // n x K
  Eigen::MatrixXd t_stats; // n x K
  Eigen::MatrixXd p_raw;   // n x K
  Eigen::MatrixXd p_fdr;   // n x K
  InferenceMethod method = InferenceMethod::exact;
  std::vector<std::string> flags;
};

/// Linear maps accumulated by replaying converged backfitting at the final
/// bandwidths. R_k maps y to the partial fit of covariate k, C_k maps y to
/// its coefficient field, and S = sum_k R_k is the full smoother.
struct SmootherLedger {
  std::vector<Eigen::MatrixXd> R;
  std::vector<Eigen::MatrixXd> C;
  Eigen::MatrixXd S;
  double trS = 0.0;
  bool converged = false;
  std::size_t sweeps = 0;
};

/// Replays the backfitting fixed point of the fitted model, updating
/// R_k <- A_k (I - sum_{j != k} R_j) until the implied fitted values settle.
/// A_k is the univariate smoother of covariate k at its converged pair.
/// Throws InferenceCapError when n exceeds `cap` (O(n^2) memory).
SmootherLedger accumulate_hat(const Dataset& data, const FitResult& fit, std::size_t cap = 5000,
                              double tol = 1e-10, std::size_t max_sweeps = 1000);

/// Hat-matrix standard errors: sigma2 = rss / (n - trS - p_f), variance of
/// each coefficient from the composed coefficient-map rows. Set `t_reference`
/// to score p-values against Student's t with n - trS - p_f degrees of
/// freedom instead of the standard normal.
InferenceResult exact_se(const SmootherLedger& ledger, const Dataset& data, const FitResult& fit,
                         std::size_t p_f = 0, bool t_reference = false);

/// The univariate approximation: each covariate's final smoother is treated
/// as an independent regression, ignoring cross-covariate degrees-of-freedom
/// loss. Kept for comparison against the exact method.
InferenceResult local_approx_se(const Dataset& data, const FitResult& fit,
                                bool t_reference = false);

/// Benjamini-Yekutieli step-up adjustment applied per covariate column.
Eigen::MatrixXd fdr_adjust(const Eigen::MatrixXd& p_raw);

struct SignificanceRow {
  std::string covariate;
  double mean_se = 0.0;
  double pct_sig_raw[3] = {0, 0, 0};  // 10%, 5%, 1%
  double pct_sig_fdr[3] = {0, 0, 0};
};

std::vector<SignificanceRow> significance_table(const InferenceResult& inf,
                                                const std::vector<std::string>& names);

}  // namespace mgtwr
