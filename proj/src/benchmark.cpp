#include "mgtwr/dgp.hpp"
#include "mgtwr/local_regression.hpp"
#include "mgtwr/prediction.hpp"
#include "mgtwr/threading.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mgtwr {

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::ols: return "OLS";
    case Estimator::gwr: return "GWR";
    case Estimator::gtwr: return "GTWR";
    case Estimator::gtwr_cyclic: return "GTWR_cyclic";
    case Estimator::mgwr_tds: return "MGWR_tds";
    case Estimator::mgtwr_tds: return "MGTWR_tds";
    case Estimator::mgtwr_tds_cyclic: return "MGTWR_tds_cyclic";
  }
  return "?";
}

Estimator estimator_from_name(const std::string& name) {
  for (Estimator e : {Estimator::ols, Estimator::gwr, Estimator::gtwr, Estimator::gtwr_cyclic,
                      Estimator::mgwr_tds, Estimator::mgtwr_tds, Estimator::mgtwr_tds_cyclic})
    if (estimator_name(e) == name) return e;
  throw InvalidInputError("unknown estimator '" + name + "'");
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t rep) {
  // splitmix64 step over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (rep + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct RepScores {
  Eigen::Vector4d beta_rmse = Eigen::Vector4d::Zero();
  double mean_beta_rmse = 0.0;
  double outsample_rmse = 0.0;
  bool ok = false;
  std::string failure;
};

double column_rmse(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
  return std::sqrt((est - truth).squaredNorm() / static_cast<double>(truth.size()));
}

KernelSpec base_spec(bool cyclic, double cycle_length) {
  KernelSpec spec;
  spec.spatial_family = KernelFamily::gaussian;
  spec.spatial_adaptive = true;
  spec.temporal_family = KernelFamily::gaussian;
  spec.temporal_adaptive = false;
  spec.cyclic = cyclic;
  spec.cycle_length = cyclic ? cycle_length : 0.0;
  return spec;
}

// Single-bandwidth (or bandwidth-pair) selection by multivariate AICc over
// the grid; ties keep the coarser pair.
struct GridChoice {
  Bandwidth h_s, h_t;
};

GridChoice select_single_scale(const Dataset& train, const KernelSpec& spec, std::size_t levels,
                               bool temporal_varies, const WlsOptions& opts) {
  const BandwidthGrid grid = build_grid(train, levels, spec, temporal_varies ? levels : 1);
  WeightCache cache(train, spec);
  GridChoice best{grid.spatial[0], grid.temporal[0]};
  double best_aicc = kInf;
  bool found = false;
  for (const Bandwidth& hs : grid.spatial) {
    for (const Bandwidth& ht : grid.temporal) {
      double score = kInf;
      try {
        score = gtwr_fit(cache, hs, ht, opts).aicc;
      } catch (const Error&) {
        score = kInf;
      }
      if (std::isfinite(score) && (!found || score < best_aicc)) {
        found = true;
        best_aicc = score;
        best = {hs, ht};
      }
    }
  }
  if (!found) throw SingularFitError(0, train.n());
  return best;
}

RepScores score_estimator(Estimator est, const SimulatedDataset& sim, const Dataset& train,
                          const Dataset& test, const Eigen::MatrixXd& beta_true_train,
                          const BenchmarkConfig& config, std::uint64_t rep_seed) {
  RepScores out;
  const WlsOptions wls_opts{config.tds.max_condition, 1e-10};
  try {
    Eigen::MatrixXd beta_train;
    Eigen::VectorXd yhat_test;

    switch (est) {
      case Estimator::ols: {
        const OlsFit fit = ols_fit(train.X, train.y);
        beta_train = fit.beta.transpose().replicate(train.X.rows(), 1);
        yhat_test = test.X * fit.beta;
        break;
      }
      case Estimator::gwr:
      case Estimator::gtwr:
      case Estimator::gtwr_cyclic: {
        const bool temporal = est != Estimator::gwr;
        const KernelSpec spec =
            base_spec(est == Estimator::gtwr_cyclic, config.cycle_length);
        const GridChoice choice =
            select_single_scale(train, spec, config.tds.grid_levels, temporal, wls_opts);
        const LocalFit fit = gtwr_fit(train, choice.h_s, choice.h_t, spec, wls_opts);
        beta_train = fit.beta;
        yhat_test = gtwr_predict_reestimate(train, choice.h_s, choice.h_t, spec, test.coords,
                                            test.times, test.X, nullptr, wls_opts);
        break;
      }
      case Estimator::mgwr_tds:
      case Estimator::mgtwr_tds:
      case Estimator::mgtwr_tds_cyclic: {
        const KernelSpec spec =
            base_spec(est == Estimator::mgtwr_tds_cyclic, config.cycle_length);
        TdsConfig tds = config.tds;
        tds.seed = rep_seed;
        tds.spatial_only = est == Estimator::mgwr_tds;
        const FitResult fit = backfit(train, spec, tds);
        beta_train = fit.beta;
        const PredictionModel model = make_prediction_model(train, fit, config.gamma);
        yhat_test = predict(model, test.X, test.coords, test.times).yhat;
        break;
      }
    }

    for (int k = 0; k < 4; ++k)
      out.beta_rmse[k] = column_rmse(beta_train.col(k), beta_true_train.col(k));
    out.mean_beta_rmse = out.beta_rmse.mean();
    out.outsample_rmse = column_rmse(yhat_test, test.y);
    out.ok = true;
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  (void)sim;
  return out;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  config.dgp.validate();
  config.tds.validate();
  const std::size_t reps = config.replications;
  const std::size_t n_est = config.estimators.size();
  if (reps == 0 || n_est == 0) throw InvalidInputError("benchmark needs estimators and replications");

  std::vector<std::vector<RepScores>> scores(n_est, std::vector<RepScores>(reps));

  parallel_for(reps, [&](std::size_t rep) {
    const std::uint64_t rep_seed = mix_seed(config.dgp.seed, rep);
    DgpConfig dgp = config.dgp;
    dgp.seed = rep_seed;
    const SimulatedDataset sim = gen_dataset(dgp);

    std::vector<unsigned char> keep(sim.holdout.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = sim.holdout[i] ? 0 : 1;
    const Dataset train = select_rows(sim.data, keep);
    const Dataset test = select_rows(sim.data, sim.holdout);

    Eigen::MatrixXd beta_true_train(train.X.rows(), 4);
    std::size_t r = 0;
    for (std::size_t i = 0; i < sim.data.n(); ++i)
      if (keep[i]) beta_true_train.row(r++) = sim.beta_true.row(i);

    for (std::size_t e = 0; e < n_est; ++e)
      scores[e][rep] =
          score_estimator(config.estimators[e], sim, train, test, beta_true_train, config, rep_seed);
  });

  BenchmarkReport report;
  report.config = config;
  report.rows.resize(n_est);
  for (std::size_t e = 0; e < n_est; ++e) {
    EstimatorStats& st = report.rows[e];
    st.estimator = config.estimators[e];
    Eigen::Vector4d sum = Eigen::Vector4d::Zero(), sum2 = Eigen::Vector4d::Zero();
    double msum = 0, msum2 = 0, osum = 0, osum2 = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const RepScores& sc = scores[e][rep];
      if (!sc.ok) {
        ++st.failed;
        st.failures.push_back("replication " + std::to_string(rep) + ": " + sc.failure);
        continue;
      }
      ++st.succeeded;
      sum += sc.beta_rmse;
      sum2 += sc.beta_rmse.cwiseProduct(sc.beta_rmse);
      msum += sc.mean_beta_rmse;
      msum2 += sc.mean_beta_rmse * sc.mean_beta_rmse;
      osum += sc.outsample_rmse;
      osum2 += sc.outsample_rmse * sc.outsample_rmse;
    }
    if (st.succeeded > 0) {
      const double m = static_cast<double>(st.succeeded);
      st.beta_rmse_mean = sum / m;
      st.mean_beta_rmse_mean = msum / m;
      st.outsample_rmse_mean = osum / m;
      if (st.succeeded > 1) {
        const auto var4 = (sum2 / m - st.beta_rmse_mean.cwiseProduct(st.beta_rmse_mean))
                              .cwiseMax(0.0) * (m / (m - 1.0));
        st.beta_rmse_sd = var4.cwiseSqrt();
        st.mean_beta_rmse_sd = std::sqrt(std::max(
            0.0, (msum2 / m - st.mean_beta_rmse_mean * st.mean_beta_rmse_mean) * m / (m - 1.0)));
        st.outsample_rmse_sd = std::sqrt(std::max(
            0.0, (osum2 / m - st.outsample_rmse_mean * st.outsample_rmse_mean) * m / (m - 1.0)));
      }
    }
  }
  return report;
}

std::string format_report(const BenchmarkReport& report) {
  std::ostringstream os;
  char line[512];
  std::snprintf(line, sizeof(line), "Monte Carlo benchmark: SNR=%g, n=%zu, %zu replications\n",
                report.config.dgp.snr, report.config.dgp.n, report.config.replications);
  os << line;
  std::snprintf(line, sizeof(line), "%-18s %9s %9s %9s %9s %10s %12s %6s\n", "Estimator", "beta1",
                "beta2", "beta3", "beta4", "mean beta", "outsample Y", "fails");
  os << line;
  for (const auto& st : report.rows) {
    std::snprintf(line, sizeof(line), "%-18s %9.3f %9.3f %9.3f %9.3f %10.3f %12.3f %6zu\n",
                  estimator_name(st.estimator).c_str(), st.beta_rmse_mean[0], st.beta_rmse_mean[1],
                  st.beta_rmse_mean[2], st.beta_rmse_mean[3], st.mean_beta_rmse_mean,
                  st.outsample_rmse_mean, st.failed);
    os << line;
  }
  return os.str();
}

std::string report_csv(const BenchmarkReport& report) {
  std::ostringstream os;
  os << "estimator,replications_ok,replications_failed,beta1_rmse_mean,beta1_rmse_sd,"
        "beta2_rmse_mean,beta2_rmse_sd,beta3_rmse_mean,beta3_rmse_sd,beta4_rmse_mean,"
        "beta4_rmse_sd,mean_beta_rmse_mean,mean_beta_rmse_sd,outsample_rmse_mean,"
        "outsample_rmse_sd\n";
  char num[64];
  for (const auto& st : report.rows) {
    os << estimator_name(st.estimator) << ',' << st.succeeded << ',' << st.failed;
    const double vals[] = {st.beta_rmse_mean[0],    st.beta_rmse_sd[0],
                           st.beta_rmse_mean[1],    st.beta_rmse_sd[1],
                           st.beta_rmse_mean[2],    st.beta_rmse_sd[2],
                           st.beta_rmse_mean[3],    st.beta_rmse_sd[3],
                           st.mean_beta_rmse_mean,  st.mean_beta_rmse_sd,
                           st.outsample_rmse_mean,  st.outsample_rmse_sd};
    for (double v : vals) {
      std::snprintf(num, sizeof(num), "%.17g", v);
      os << ',' << num;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace mgtwr
