#pragma once

#include "mgtwr/tds.hpp"
#include "mgtwr/types.hpp"

#include <cstdint>

namespace mgtwr {

struct DgpConfig {
  std::size_t n = 1000;
  double snr = 0.9;
  int years = 4;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.2;

  void validate() const {
    if (n <= 50) throw InvalidInputError("simulation needs n > 50");
    if (!(snr > 0.0)) throw InvalidInputError("snr must be positive");
    if (years < 1) throw InvalidInputError("years must be at least 1");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
      throw InvalidInputError("holdout fraction must lie in (0, 1)");
  }
};

/// A simulated sample plus its ground truth. Timestamps combine year and
/// day-of-year as (year-1)*365 + day; the coefficient surfaces depend on the
/// day only, so seasonal phases repeat identically across years.
struct SimulatedDataset {
  Dataset data;
  Eigen::MatrixXd beta_true;  // n x 4
  Eigen::VectorXd eta;        // noiseless signal
  Eigen::VectorXd day;        // day of year, integer valued
  Eigen::VectorXi year;
  std::vector<unsigned char> holdout;  // 1 = held out
  double sigma2 = 0.0;
  double beta1_shift = 0.0;  // min subtracted to keep beta1 nonnegative
};

// Coefficient surfaces. beta1 is reported before the nonnegativity shift.
double dgp_beta1_raw(double u, double v, double day);
double dgp_beta2(double u_cor, double v_cor);
double dgp_beta3(double u, double v);
double dgp_beta4(double u, double v);

SimulatedDataset gen_dataset(const DgpConfig& config);

/// Rows of `data` selected by `take[i] != 0`.
Dataset select_rows(const Dataset& data, const std::vector<unsigned char>& take);

// ---------------------------------------------------------------------------
// Benchmark harness
// ---------------------------------------------------------------------------

enum class Estimator { ols, gwr, gtwr, gtwr_cyclic, mgwr_tds, mgtwr_tds, mgtwr_tds_cyclic };

std::string estimator_name(Estimator e);
Estimator estimator_from_name(const std::string& name);

struct BenchmarkConfig {
  DgpConfig dgp;
  std::vector<Estimator> estimators = {Estimator::ols,       Estimator::gwr,
                                       Estimator::gtwr,      Estimator::gtwr_cyclic,
                                       Estimator::mgwr_tds,  Estimator::mgtwr_tds,
                                       Estimator::mgtwr_tds_cyclic};
  std::size_t replications = 50;
  TdsConfig tds;
  double gamma = 8.0;
  double cycle_length = 365.0;
};

struct EstimatorStats {
  Estimator estimator;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  Eigen::Vector4d beta_rmse_mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d beta_rmse_sd = Eigen::Vector4d::Zero();
  double mean_beta_rmse_mean = 0.0;
  double mean_beta_rmse_sd = 0.0;
  double outsample_rmse_mean = 0.0;
  double outsample_rmse_sd = 0.0;
  std::vector<std::string> failures;  // one note per failed replication
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<EstimatorStats> rows;
};

/// Runs the simulation protocol: per replication, draw a sample, split off
/// the holdout, fit every estimator on the training part, score coefficient
/// recovery on training points against the ground truth and prediction
/// accuracy on the holdout. Failures are recorded and excluded from means.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

std::string format_report(const BenchmarkReport& report);
std::string report_csv(const BenchmarkReport& report);

}  // namespace mgtwr
