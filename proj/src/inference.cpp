#include "mgtwr/inference.hpp"

#include "mgtwr/threading.hpp"
#include "mgtwr/weight_cache.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mgtwr {

namespace {

// Coefficient-extractor rows for covariate k at its converged pair:
// D_k(i,j) = w_ij x_jk / sum_l w_il x_lk^2, so beta_k = D_k * target and the
// partial-fit smoother is A_k = diag(x_k) D_k.
Eigen::MatrixXd coefficient_extractor(WeightCache& cache, const Eigen::VectorXd& x_k,
                                      const Bandwidth& h_s, const Bandwidth& h_t) {
  const Dataset& data = cache.data();
  const std::size_t n = data.n();
  Eigen::MatrixXd D(n, n);
  cache.ensure(h_s, h_t);

  if (h_s.is_global() && h_t.is_global()) {
    const double sxx = x_k.squaredNorm();
    if (!(sxx > 0.0)) throw SingularFitError(0, n);
    const Eigen::RowVectorXd row = x_k.transpose() / sxx;
    for (std::size_t i = 0; i < n; ++i) D.row(i) = row;
    return D;
  }

  parallel_for(n, [&](std::size_t i) {
    thread_local Eigen::VectorXd w;
    cache.fill(i, h_s, h_t, w);
    double sxx = 0.0;
    for (std::size_t j = 0; j < n; ++j) sxx += w[j] * x_k[j] * x_k[j];
    if (!(sxx > 0.0))
      throw SingularFitError(i, static_cast<std::size_t>((w.array() > 0.0).count()));
    for (std::size_t j = 0; j < n; ++j) D(i, j) = w[j] * x_k[j] / sxx;
  });
  return D;
}

double normal_two_sided_p(double t) {
  if (!std::isfinite(t)) return std::isnan(t) ? kNaN : 0.0;
  return std::erfc(std::abs(t) / std::sqrt(2.0));
}

Eigen::MatrixXd p_values(const Eigen::MatrixXd& t_stats, bool t_reference, double df) {
  Eigen::MatrixXd p(t_stats.rows(), t_stats.cols());
  if (t_reference) {
    const boost::math::students_t dist(df);
    for (Eigen::Index i = 0; i < t_stats.size(); ++i) {
      const double t = t_stats(i);
      p(i) = std::isfinite(t) ? 2.0 * boost::math::cdf(dist, -std::abs(t))
                              : (std::isnan(t) ? kNaN : 0.0);
    }
  } else {
    for (Eigen::Index i = 0; i < t_stats.size(); ++i) p(i) = normal_two_sided_p(t_stats(i));
  }
  return p;
}

}  // namespace

SmootherLedger accumulate_hat(const Dataset& data, const FitResult& fit, std::size_t cap,
                              double tol, std::size_t max_sweeps) {
  data.validate();
  const std::size_t n = data.n();
  const std::size_t K = data.k();
  if (n > cap)
    throw InferenceCapError("exact inference disabled for n=" + std::to_string(n) + " > cap " +
                            std::to_string(cap) + "; use prediction-only mode or raise the cap");
  if (fit.scales.size() != K) throw InvalidInputError("fit does not match the dataset");

  WeightCache cache(data, fit.spec);
  std::vector<Eigen::MatrixXd> D(K);
  for (std::size_t k = 0; k < K; ++k)
    D[k] = coefficient_extractor(cache, data.X.col(static_cast<Eigen::Index>(k)),
                                 fit.scales[k].spatial, fit.scales[k].temporal);

  SmootherLedger ledger;
  ledger.R.assign(K, Eigen::MatrixXd::Zero(n, n));
  ledger.C.assign(K, Eigen::MatrixXd::Zero(n, n));

  Eigen::VectorXd yhat_prev = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd others(n, n);
  const double y_scale = std::max(1.0, data.y.cwiseAbs().maxCoeff());

  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (std::size_t k = 0; k < K; ++k) {
      others.setZero();
      for (std::size_t j = 0; j < K; ++j)
        if (j != k) others += ledger.R[j];
      // C_k = D_k (I - sum_{j!=k} R_j)
      ledger.C[k].noalias() = D[k] - D[k] * others;
      const Eigen::VectorXd& x_k = data.X.col(static_cast<Eigen::Index>(k));
      ledger.R[k] = x_k.asDiagonal() * ledger.C[k];
    }
    Eigen::MatrixXd S = ledger.R[0];
    for (std::size_t j = 1; j < K; ++j) S += ledger.R[j];
    const Eigen::VectorXd yhat = S * data.y;
    const double change = (yhat - yhat_prev).cwiseAbs().maxCoeff() / y_scale;
    yhat_prev = yhat;
    ledger.sweeps = sweep;
    if (change < tol) {
      ledger.converged = true;
      ledger.S = std::move(S);
      break;
    }
    if (sweep == max_sweeps) ledger.S = std::move(S);
  }
  ledger.trS = ledger.S.trace();
  return ledger;
}

InferenceResult exact_se(const SmootherLedger& ledger, const Dataset& data, const FitResult& fit,
                         std::size_t p_f, bool t_reference) {
  const std::size_t n = data.n();
  const std::size_t K = data.k();
  const double df = static_cast<double>(n) - ledger.trS - static_cast<double>(p_f);
  if (!(df > 0.0))
    throw InferenceInfeasibleError("non-positive residual degrees of freedom (n - trS - p_f = " +
                                   std::to_string(df) + ")");

  InferenceResult out;
  out.method = InferenceMethod::exact;
  out.trS = ledger.trS;
  out.sigma2_hat = fit.residuals.squaredNorm() / df;
  out.se.resize(n, K);
  out.t_stats.resize(n, K);
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::VectorXd v = ledger.C[k].rowwise().squaredNorm();
    out.se.col(static_cast<Eigen::Index>(k)) = (out.sigma2_hat * v.array()).sqrt();
  }
  out.t_stats = fit.beta.cwiseQuotient(out.se);
  out.p_raw = p_values(out.t_stats, t_reference, df);
  out.p_fdr = fdr_adjust(out.p_raw);
  if (!ledger.converged) out.flags.push_back("hat-matrix replay hit its sweep cap");
  return out;
}

InferenceResult local_approx_se(const Dataset& data, const FitResult& fit, bool t_reference) {
  data.validate();
  const std::size_t n = data.n();
  const std::size_t K = data.k();
  if (fit.scales.size() != K) throw InvalidInputError("fit does not match the dataset");

  WeightCache cache(data, fit.spec);
  const double rss = fit.residuals.squaredNorm();

  InferenceResult out;
  out.method = InferenceMethod::local_approx;
  out.se.resize(n, K);
  out.t_stats.resize(n, K);
  double min_df = kInf;

  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::VectorXd& x_k = data.X.col(static_cast<Eigen::Index>(k));
    const Bandwidth& hs = fit.scales[k].spatial;
    const Bandwidth& ht = fit.scales[k].temporal;
    cache.ensure(hs, ht);

    // Streamed rows: no n x n storage for the approximation.
    Eigen::VectorXd v(n), lev(n);
    if (hs.is_global() && ht.is_global()) {
      const double sxx = x_k.squaredNorm();
      if (!(sxx > 0.0)) throw SingularFitError(0, n);
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = 1.0 / sxx;
        lev[i] = x_k[i] * x_k[i] / sxx;
      }
    } else {
      parallel_for(n, [&](std::size_t i) {
        thread_local Eigen::VectorXd w;
        cache.fill(i, hs, ht, w);
        double sxx = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) sxx += w[j] * x_k[j] * x_k[j];
        if (!(sxx > 0.0))
          throw SingularFitError(i, static_cast<std::size_t>((w.array() > 0.0).count()));
        for (std::size_t j = 0; j < n; ++j) {
          const double d = w[j] * x_k[j] / sxx;
          s2 += d * d;
        }
        v[i] = s2;
        lev[i] = w[i] * x_k[i] * x_k[i] / sxx;
      });
    }

    const double df_k = static_cast<double>(n) - lev.sum();
    min_df = std::min(min_df, df_k);
    double sigma2_k = df_k > 0.0 ? rss / df_k : kInf;
    if (rss == 0.0) {
      sigma2_k = 0.0;
      out.flags.push_back("covariate " + std::to_string(k) +
                          ": zero residual variance, SE reported as 0");
    }
    out.se.col(static_cast<Eigen::Index>(k)) = (sigma2_k * v.array()).sqrt();
  }

  out.sigma2_hat = min_df > 0.0 ? rss / min_df : kInf;
  out.trS = kNaN;
  out.t_stats = fit.beta.cwiseQuotient(out.se);
  out.p_raw = p_values(out.t_stats, t_reference, std::max(1.0, min_df));
  out.p_fdr = fdr_adjust(out.p_raw);
  return out;
}

Eigen::MatrixXd fdr_adjust(const Eigen::MatrixXd& p_raw) {
  const Eigen::Index n = p_raw.rows();
  const Eigen::Index K = p_raw.cols();
  Eigen::MatrixXd adj(n, K);
  double harmonic = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i) harmonic += 1.0 / static_cast<double>(i);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < K; ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (p_raw(a, k) != p_raw(b, k)) return p_raw(a, k) < p_raw(b, k);
      return a < b;
    });
    double running = 1.0;
    for (Eigen::Index r = n; r >= 1; --r) {
      const Eigen::Index i = order[static_cast<std::size_t>(r - 1)];
      const double scaled =
          p_raw(i, k) * static_cast<double>(n) * harmonic / static_cast<double>(r);
      running = std::min(running, std::min(1.0, scaled));
      adj(i, k) = running;
    }
  }
  return adj;
}

std::vector<SignificanceRow> significance_table(const InferenceResult& inf,
                                                const std::vector<std::string>& names) {
  const Eigen::Index n = inf.se.rows();
  const Eigen::Index K = inf.se.cols();
  const double levels[3] = {0.10, 0.05, 0.01};
  std::vector<SignificanceRow> rows(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) {
    SignificanceRow& row = rows[static_cast<std::size_t>(k)];
    row.covariate = static_cast<std::size_t>(k) < names.size()
                        ? names[static_cast<std::size_t>(k)]
                        : "x" + std::to_string(k);
    row.mean_se = inf.se.col(k).mean();
    for (int a = 0; a < 3; ++a) {
      row.pct_sig_raw[a] =
          100.0 * (inf.p_raw.col(k).array() < levels[a]).count() / static_cast<double>(n);
      row.pct_sig_fdr[a] =
          100.0 * (inf.p_fdr.col(k).array() < levels[a]).count() / static_cast<double>(n);
    }
  }
  return rows;
}

}  // namespace mgtwr
