#include "mgtwr/kernels.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace mgtwr {

double spatial_weight(double d, double h, KernelFamily family) {
  if (!std::isfinite(d) || !std::isfinite(h) || d < 0.0 || h <= 0.0)
    throw InvalidInputError("spatial_weight requires finite d >= 0 and h > 0");
  const double u = d / h;
  switch (family) {
    case KernelFamily::gaussian:
      return std::exp(-0.5 * u * u);
    case KernelFamily::bisquare: {
      if (u >= 1.0) return 0.0;
      const double v = 1.0 - u * u;
      return v * v;
    }
  }
  return 0.0;
}

double adaptive_to_distance(const Eigen::Vector2d& focal, const Eigen::MatrixX2d& coords,
                            std::size_t k) {
  const std::size_t n = static_cast<std::size_t>(coords.rows());
  if (k < 2 || k > n)
    throw InvalidInputError("adaptive bandwidth k must satisfy 2 <= k <= n (got " +
                            std::to_string(k) + ", n=" + std::to_string(n) + ")");
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j)
    d[j] = detail::euclid(focal.x(), focal.y(), coords(j, 0), coords(j, 1));
  std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
  return d[k - 1];
}

double cyclic_distance(double t_i, double t_j, double cycle_length) {
  if (!(cycle_length > 0.0) || !std::isfinite(cycle_length))
    throw InvalidInputError("cycle length must be positive and finite");
  if (!std::isfinite(t_i) || !std::isfinite(t_j))
    throw InvalidInputError("cyclic_distance requires finite timestamps");
  const double g = std::fmod(std::abs(t_i - t_j), cycle_length);
  return std::min(g, cycle_length - g);
}

double temporal_weight(double t_i, double t_j, double h_t, const KernelSpec& spec) {
  if (spec.symmetry == TemporalSymmetry::forward && t_j > t_i) return 0.0;
  const double gap = spec.cyclic ? cyclic_distance(t_i, t_j, spec.cycle_length)
                                 : std::abs(t_i - t_j);
  return spatial_weight(gap, h_t, spec.temporal_family);
}

namespace detail {

void cap_to_top(Eigen::VectorXd& w, std::size_t m) {
  const std::size_t n = static_cast<std::size_t>(w.size());
  if (m == 0 || m >= n) return;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::nth_element(idx.begin(), idx.begin() + m, idx.end(), [&](std::size_t a, std::size_t b) {
    if (w[a] != w[b]) return w[a] > w[b];
    return a < b;
  });
  Eigen::VectorXd capped = Eigen::VectorXd::Zero(w.size());
  for (std::size_t r = 0; r < m; ++r) capped[idx[r]] = w[idx[r]];
  w = std::move(capped);
}

namespace {

double kth_temporal_distance(double focal_t, const Eigen::VectorXd& times, std::size_t k,
                             const KernelSpec& spec) {
  const std::size_t n = static_cast<std::size_t>(times.size());
  if (k < 2 || k > n)
    throw InvalidInputError("adaptive temporal bandwidth k must satisfy 2 <= k <= n");
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j)
    d[j] = spec.cyclic ? cyclic_distance(focal_t, times[j], spec.cycle_length)
                       : std::abs(focal_t - times[j]);
  std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
  return d[k - 1];
}

}  // namespace
}  // namespace detail

Eigen::VectorXd st_weights(const Eigen::Vector2d& focal_xy, double focal_t, const Dataset& data,
                           const Bandwidth& h_s, const Bandwidth& h_t, const KernelSpec& spec,
                           std::size_t focal_index) {
  spec.validate();
  const std::size_t n = data.n();
  Eigen::VectorXd w(n);

  double hs = h_s.value;
  if (!h_s.is_global() && spec.spatial_adaptive)
    hs = adaptive_to_distance(focal_xy, data.coords,
                              static_cast<std::size_t>(std::llround(h_s.value)));
  double ht = h_t.value;
  if (!h_t.is_global() && spec.temporal_adaptive)
    ht = detail::kth_temporal_distance(focal_t, data.times,
                                       static_cast<std::size_t>(std::llround(h_t.value)), spec);

  for (std::size_t j = 0; j < n; ++j) {
    double ws = 1.0, wt = 1.0;
    if (!h_s.is_global()) {
      const double d = detail::euclid(focal_xy.x(), focal_xy.y(), data.coords(j, 0),
                                      data.coords(j, 1));
      ws = spatial_weight(d, hs, spec.spatial_family);
    }
    if (!h_t.is_global()) wt = temporal_weight(focal_t, data.times[j], ht, spec);

    if (h_s.is_global() && h_t.is_global())
      w[j] = 1.0;
    else if (h_s.is_global())
      w[j] = wt;
    else if (h_t.is_global())
      w[j] = ws;
    else {
      w[j] = detail::combine_weights(ws, wt, spec.combine);
      // Causality binds the combined weight, not only the temporal factor.
      if (spec.symmetry == TemporalSymmetry::forward && data.times[j] > focal_t) w[j] = 0.0;
    }
  }

  detail::cap_to_top(w, spec.max_neighbors);
  if ((w.array() != 0.0).count() == 0) throw DegenerateNeighborhoodError(focal_index);
  return w;
}

void Dataset::validate() const {
  const auto rows = X.rows();
  const auto cols = X.cols();
  if (rows == 0 || cols == 0) throw InvalidInputError("empty dataset");
  if (coords.rows() != rows || times.size() != rows || y.size() != rows)
    throw InvalidInputError("dataset arrays have inconsistent lengths");
  if (rows <= cols)
    throw InvalidInputError("dataset needs n > K (n=" + std::to_string(rows) +
                            ", K=" + std::to_string(cols) + ")");
  if (!coords.allFinite() || !times.allFinite() || !X.allFinite() || !y.allFinite())
    throw InvalidInputError("dataset contains non-finite entries");
  if ((X.col(0).array() != 1.0).any())
    throw InvalidInputError("design matrix column 0 must be the constant intercept");
  for (Eigen::Index c = 1; c < cols; ++c) {
    const double lo = X.col(c).minCoeff();
    const double hi = X.col(c).maxCoeff();
    if (lo == hi) {
      const std::string name = static_cast<std::size_t>(c) < covariate_names.size()
                                   ? covariate_names[static_cast<std::size_t>(c)]
                                   : std::to_string(c);
      throw InvalidInputError("covariate '" + name + "' is constant; only the intercept may be");
    }
  }
  if (!covariate_names.empty() && covariate_names.size() != static_cast<std::size_t>(cols))
    throw InvalidInputError("covariate name list does not match design matrix width");
}

}  // namespace mgtwr
