#include "mgtwr/local_regression.hpp"

#include "mgtwr/kernels.hpp"
#include "mgtwr/threading.hpp"

#include <cmath>

namespace mgtwr {

namespace {

// Solve the weighted normal equations through an eigendecomposition of the
// cross-product. Eigenvalues of X'WX are the squared singular values of
// sqrt(W)X, so the rank and condition checks translate directly.
struct NormalEq {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
  double cond = 1.0;
  bool singular = false;
};

NormalEq decompose(const Eigen::MatrixXd& xtwx, double singular_rtol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xtwx);
  NormalEq out;
  out.vectors = es.eigenvectors();
  out.values = es.eigenvalues();
  const double max_ev = out.values.maxCoeff();
  const double min_ev = out.values.minCoeff();
  const double floor_ev = singular_rtol * singular_rtol * max_ev;
  out.singular = !(max_ev > 0.0) || min_ev <= floor_ev;
  out.cond = out.singular ? kInf : max_ev / min_ev;
  return out;
}

}  // namespace

WlsResult wls_at(std::size_t focal_index, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& w, const WlsOptions& opts) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  if (y.size() != n || w.size() != n)
    throw InvalidInputError("wls_at: inconsistent array lengths");

  const Eigen::Index effective = (w.array() > 0.0).count();
  if (effective < k) throw SingularFitError(focal_index, static_cast<std::size_t>(effective));

  const Eigen::MatrixXd xtw = X.transpose() * w.asDiagonal();
  const Eigen::MatrixXd xtwx = xtw * X;
  const NormalEq eq = decompose(xtwx, opts.singular_rtol);
  if (eq.singular) throw SingularFitError(focal_index, static_cast<std::size_t>(effective));
  if (eq.cond > opts.max_condition) throw LocalCollinearityError(focal_index, eq.cond);

  const Eigen::VectorXd xtwy = xtw * y;
  WlsResult out;
  out.beta = eq.vectors * (eq.values.cwiseInverse().asDiagonal() * (eq.vectors.transpose() * xtwy));
  const Eigen::VectorXd xi = X.row(focal_index).transpose();
  const Eigen::VectorXd vx = eq.vectors.transpose() * xi;
  out.leverage = w[focal_index] * (vx.array().square() / eq.values.array()).sum();
  return out;
}

double aicc(double rss, std::size_t n, double trS) {
  const double nd = static_cast<double>(n);
  const double denom = nd - 2.0 - trS;
  if (!(denom > 0.0)) return kInf;
  return nd * std::log(rss / nd) + nd * std::log(2.0 * M_PI) + nd * (nd + trS) / denom;
}

LocalFit gtwr_fit(WeightCache& cache, const Bandwidth& h_s, const Bandwidth& h_t,
                  const WlsOptions& opts) {
  const Dataset& data = cache.data();
  const std::size_t n = data.n();
  const std::size_t k = data.k();
  cache.ensure(h_s, h_t);

  LocalFit fit;
  fit.beta.resize(n, k);
  fit.hat_diag.resize(n);
  parallel_for(n, [&](std::size_t i) {
    thread_local Eigen::VectorXd w;
    cache.fill(i, h_s, h_t, w);
    const WlsResult r = wls_at(i, data.X, data.y, w, opts);
    fit.beta.row(i) = r.beta.transpose();
    fit.hat_diag[i] = r.leverage;
  });

  fit.residuals = data.y - (data.X.array() * fit.beta.array()).rowwise().sum().matrix();
  fit.trS = fit.hat_diag.sum();
  fit.rss = fit.residuals.squaredNorm();
  fit.aicc = aicc(fit.rss, n, fit.trS);
  return fit;
}

LocalFit gtwr_fit(const Dataset& data, const Bandwidth& h_s, const Bandwidth& h_t,
                  const KernelSpec& spec, const WlsOptions& opts) {
  data.validate();
  WeightCache cache(data, spec);
  return gtwr_fit(cache, h_s, h_t, opts);
}

UnivariateSmooth univariate_smooth(WeightCache& cache, const Eigen::VectorXd& target,
                                   const Eigen::VectorXd& x_k, const Bandwidth& h_s,
                                   const Bandwidth& h_t) {
  const std::size_t n = cache.data().n();
  if (static_cast<std::size_t>(target.size()) != n ||
      static_cast<std::size_t>(x_k.size()) != n)
    throw InvalidInputError("univariate_smooth: inconsistent array lengths");
  cache.ensure(h_s, h_t);

  UnivariateSmooth out;
  out.beta.resize(n);
  out.hat_diag.resize(n);

  if (h_s.is_global() && h_t.is_global()) {
    // Uniform weights: one global scalar fit shared by every focal point.
    double sxx = 0.0, sxt = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sxx += x_k[j] * x_k[j];
      sxt += x_k[j] * target[j];
    }
    if (!(sxx > 0.0)) throw SingularFitError(0, n);
    const double b = sxt / sxx;
    for (std::size_t i = 0; i < n; ++i) {
      out.beta[i] = b;
      out.hat_diag[i] = x_k[i] * x_k[i] / sxx;
    }
    return out;
  }

  parallel_for(n, [&](std::size_t i) {
    thread_local Eigen::VectorXd w;
    cache.fill(i, h_s, h_t, w);
    double sxx = 0.0, sxt = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double wx = w[j] * x_k[j];
      sxx += wx * x_k[j];
      sxt += wx * target[j];
    }
    if (!(sxx > 0.0))
      throw SingularFitError(i, static_cast<std::size_t>((w.array() > 0.0).count()));
    out.beta[i] = sxt / sxx;
    out.hat_diag[i] = w[i] * x_k[i] * x_k[i] / sxx;
  });
  return out;
}

UnivariateSmooth univariate_smooth(const Eigen::VectorXd& target, const Eigen::VectorXd& x_k,
                                   const Dataset& data, const Bandwidth& h_s,
                                   const Bandwidth& h_t, const KernelSpec& spec) {
  WeightCache cache(data, spec);
  return univariate_smooth(cache, target, x_k, h_s, h_t);
}

ConditionCheck local_condition_guard(const Eigen::MatrixXd& weighted_design, double threshold) {
  const Eigen::MatrixXd cross = weighted_design.transpose() * weighted_design;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cross);
  const double max_ev = es.eigenvalues().maxCoeff();
  const double min_ev = es.eigenvalues().minCoeff();
  ConditionCheck out;
  out.condition = (min_ev > 0.0 && max_ev > 0.0) ? max_ev / min_ev : kInf;
  out.pass = out.condition <= threshold;
  return out;
}

OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  if (n <= k) throw InvalidInputError("ols_fit requires n > K");
  OlsFit out;
  const Eigen::MatrixXd xtx = X.transpose() * X;
  const NormalEq eq = decompose(xtx, 1e-12);
  if (eq.singular) throw SingularFitError(0, static_cast<std::size_t>(n));
  const Eigen::VectorXd xty = X.transpose() * y;
  out.beta = eq.vectors * (eq.values.cwiseInverse().asDiagonal() * (eq.vectors.transpose() * xty));
  out.fitted = X * out.beta;
  out.residuals = y - out.fitted;
  out.rss = out.residuals.squaredNorm();
  const double sigma2 = out.rss / static_cast<double>(n - k);
  const Eigen::MatrixXd xtx_inv =
      eq.vectors * eq.values.cwiseInverse().asDiagonal() * eq.vectors.transpose();
  out.se = (sigma2 * xtx_inv.diagonal().array()).sqrt();
  return out;
}

Eigen::VectorXd gtwr_predict_reestimate(const Dataset& train, const Bandwidth& h_s,
                                        const Bandwidth& h_t, const KernelSpec& spec,
                                        const Eigen::MatrixX2d& coords_new,
                                        const Eigen::VectorXd& times_new,
                                        const Eigen::MatrixXd& X_new, Eigen::MatrixXd* beta_out,
                                        const WlsOptions& opts) {
  const std::size_t m = static_cast<std::size_t>(coords_new.rows());
  if (times_new.size() != coords_new.rows() || X_new.rows() != coords_new.rows() ||
      X_new.cols() != train.X.cols())
    throw InvalidInputError("prediction arrays do not match the training design");

  Eigen::VectorXd yhat(m);
  Eigen::MatrixXd betas(m, train.k());
  parallel_for(m, [&](std::size_t o) {
    const Eigen::VectorXd w = st_weights(coords_new.row(o).transpose(), times_new[o], train,
                                         h_s, h_t, spec, o);
    // Same normal-equation route as wls_at, centered on an off-sample point.
    const Eigen::MatrixXd xtw = train.X.transpose() * w.asDiagonal();
    const Eigen::MatrixXd xtwx = xtw * train.X;
    const NormalEq eq = decompose(xtwx, opts.singular_rtol);
    if (eq.singular)
      throw SingularFitError(o, static_cast<std::size_t>((w.array() > 0.0).count()));
    if (eq.cond > opts.max_condition) throw LocalCollinearityError(o, eq.cond);
    const Eigen::VectorXd beta =
        eq.vectors * (eq.values.cwiseInverse().asDiagonal() * (eq.vectors.transpose() * (xtw * train.y)));
    betas.row(o) = beta.transpose();
    yhat[o] = X_new.row(o).dot(beta);
  });
  if (beta_out) *beta_out = std::move(betas);
  return yhat;
}

}  // namespace mgtwr
