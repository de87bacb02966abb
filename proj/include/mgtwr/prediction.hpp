#pragma once

#include "mgtwr/tds.hpp"
#include "mgtwr/types.hpp"

namespace mgtwr {

/// Everything needed to extrapolate a fitted multiscale model to new points:
/// training locations/times, per-covariate coefficient fields, the learned
/// bandwidth pairs, the estimation-time kernel configuration, and the
/// sharpening exponent. No bandwidth is re-optimized at prediction time.
struct PredictionModel {
  Eigen::MatrixX2d coords;
  Eigen::VectorXd times;
  Eigen::MatrixXd beta;                // n x K training coefficients
  std::vector<CovariateScale> scales;  // per covariate
  KernelSpec spec;
  double gamma = 8.0;
  std::vector<std::string> covariate_names;
  std::vector<unsigned char> is_global;  // covariates at both sentinels
  Eigen::VectorXd global_coef;           // scalar reused for global covariates

  std::size_t n() const { return static_cast<std::size_t>(beta.rows()); }
  std::size_t k() const { return static_cast<std::size_t>(beta.cols()); }
};

PredictionModel make_prediction_model(const Dataset& data, const FitResult& fit,
                                      double gamma = 8.0);

/// Normalized kernel pre-weights from every training point to the prediction
/// point under covariate k's learned scales. When compact support leaves the
/// point isolated, the nearest training point receives weight one and
/// `extrapolation_warning` (if given) is set.
Eigen::VectorXd preweights(const PredictionModel& model, std::size_t k,
                           const Eigen::Vector2d& xy, double t,
                           bool* extrapolation_warning = nullptr);

/// Power transform and renormalization of a normalized weight row. The
/// computation runs relative to the row maximum, so the argmax keeps weight
/// even when every other entry underflows; `underflow_warning` reports a row
/// collapsing to its argmax because of underflow.
Eigen::VectorXd sharpen(const Eigen::VectorXd& w, double gamma,
                        bool* underflow_warning = nullptr);

/// Sharpened-weight average of training coefficients; global covariates reuse
/// their scalar.
double extrapolate_coefficient(const PredictionModel& model, std::size_t k,
                               const Eigen::Vector2d& xy, double t);

struct PredictOutput {
  Eigen::VectorXd yhat;
  Eigen::MatrixXd coefficients;  // m x K extrapolated coefficients
  std::size_t extrapolation_warnings = 0;
};

PredictOutput predict(const PredictionModel& model, const Eigen::MatrixXd& X_new,
                      const Eigen::MatrixX2d& coords_new, const Eigen::VectorXd& times_new);

/// Sharpening exponent selected by k-fold cross-validation on the training
/// sample; ties within numerical noise prefer the default 8.
double cv_gamma(const PredictionModel& model, const Dataset& train, std::size_t folds = 5,
                const std::vector<double>& grid = {1, 2, 4, 6, 8, 12, 18, 24},
                std::uint64_t seed = 0);

}  // namespace mgtwr
