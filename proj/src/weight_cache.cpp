#include "mgtwr/weight_cache.hpp"

#include "mgtwr/kernels.hpp"
#include "mgtwr/threading.hpp"

#include <algorithm>
#include <vector>

namespace mgtwr {

WeightCache::WeightCache(const Dataset& data, const KernelSpec& spec, std::size_t dense_limit)
    : data_(data), spec_(spec), dense_(data.n() <= dense_limit) {
  spec_.validate();
  if (!dense_) return;
  const std::size_t n = data_.n();
  dist_s_.resize(n, n);
  dist_t_.resize(n, n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      dist_s_(i, j) = detail::euclid(data_.coords(i, 0), data_.coords(i, 1), data_.coords(j, 0),
                                     data_.coords(j, 1));
      dist_t_(i, j) = spec_.cyclic
                          ? cyclic_distance(data_.times[i], data_.times[j], spec_.cycle_length)
                          : std::abs(data_.times[i] - data_.times[j]);
    }
  });
}

double WeightCache::spatial_h_for(std::size_t i, const Bandwidth& h) const {
  if (!spec_.spatial_adaptive) return h.value;
  const std::size_t k = static_cast<std::size_t>(std::llround(h.value));
  if (dense_) {
    // k-th smallest entry of the focal's distance row, self included.
    std::vector<double> row(dist_s_.row(i).data(), dist_s_.row(i).data() + data_.n());
    if (k < 2 || k > row.size())
      throw InvalidInputError("adaptive bandwidth k must satisfy 2 <= k <= n");
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    return row[k - 1];
  }
  return adaptive_to_distance(data_.coords.row(i).transpose(), data_.coords, k);
}

double WeightCache::temporal_h_for(std::size_t i, const Bandwidth& h) const {
  if (!spec_.temporal_adaptive) return h.value;
  const std::size_t k = static_cast<std::size_t>(std::llround(h.value));
  const std::size_t n = data_.n();
  if (k < 2 || k > n)
    throw InvalidInputError("adaptive temporal bandwidth k must satisfy 2 <= k <= n");
  std::vector<double> row(n);
  for (std::size_t j = 0; j < n; ++j)
    row[j] = dense_ ? dist_t_(i, j)
                    : (spec_.cyclic ? cyclic_distance(data_.times[i], data_.times[j],
                                                      spec_.cycle_length)
                                    : std::abs(data_.times[i] - data_.times[j]));
  std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
  return row[k - 1];
}

void WeightCache::build_spatial(const Bandwidth& h) {
  const std::size_t n = data_.n();
  RowMat w(n, n);
  parallel_for(n, [&](std::size_t i) {
    const double hi = spatial_h_for(i, h);
    for (std::size_t j = 0; j < n; ++j)
      w(i, j) = spatial_weight(dist_s_(i, j), hi, spec_.spatial_family);
  });
  w_spatial_.emplace(h.value, std::move(w));
}

void WeightCache::build_temporal(const Bandwidth& h) {
  const std::size_t n = data_.n();
  RowMat w(n, n);
  parallel_for(n, [&](std::size_t i) {
    const double hi = temporal_h_for(i, h);
    for (std::size_t j = 0; j < n; ++j)
      w(i, j) = spatial_weight(dist_t_(i, j), hi, spec_.temporal_family);
  });
  w_temporal_.emplace(h.value, std::move(w));
}

void WeightCache::ensure(const Bandwidth& h_s, const Bandwidth& h_t) {
  if (!dense_) return;
  if (!h_s.is_global() && !w_spatial_.count(h_s.value)) build_spatial(h_s);
  if (!h_t.is_global() && !w_temporal_.count(h_t.value)) build_temporal(h_t);
}

const double* WeightCache::spatial_row(std::size_t i, const Bandwidth& h,
                                       Eigen::VectorXd& scratch) const {
  if (dense_) {
    const auto it = w_spatial_.find(h.value);
    if (it == w_spatial_.end()) throw Error("weight cache: spatial level not ensured");
    return it->second.row(i).data();
  }
  const std::size_t n = data_.n();
  const double hi = spatial_h_for(i, h);
  scratch.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double d = detail::euclid(data_.coords(i, 0), data_.coords(i, 1), data_.coords(j, 0),
                                    data_.coords(j, 1));
    scratch[j] = spatial_weight(d, hi, spec_.spatial_family);
  }
  return scratch.data();
}

const double* WeightCache::temporal_row(std::size_t i, const Bandwidth& h,
                                        Eigen::VectorXd& scratch) const {
  if (dense_) {
    const auto it = w_temporal_.find(h.value);
    if (it == w_temporal_.end()) throw Error("weight cache: temporal level not ensured");
    return it->second.row(i).data();
  }
  const std::size_t n = data_.n();
  const double hi = temporal_h_for(i, h);
  scratch.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double d = spec_.cyclic
                         ? cyclic_distance(data_.times[i], data_.times[j], spec_.cycle_length)
                         : std::abs(data_.times[i] - data_.times[j]);
    scratch[j] = spatial_weight(d, hi, spec_.temporal_family);
  }
  return scratch.data();
}

void WeightCache::fill(std::size_t i, const Bandwidth& h_s, const Bandwidth& h_t,
                       Eigen::VectorXd& out) const {
  const std::size_t n = data_.n();
  out.resize(n);

  if (h_s.is_global() && h_t.is_global()) {
    out.setOnes();
    return;
  }

  thread_local Eigen::VectorXd scratch_s, scratch_t;
  if (h_s.is_global()) {
    const double* wt = temporal_row(i, h_t, scratch_t);
    std::copy(wt, wt + n, out.data());
  } else if (h_t.is_global()) {
    const double* ws = spatial_row(i, h_s, scratch_s);
    std::copy(ws, ws + n, out.data());
  } else {
    const double* ws = spatial_row(i, h_s, scratch_s);
    const double* wt = temporal_row(i, h_t, scratch_t);
    if (spec_.combine == CombineOp::multiplicative)
      for (std::size_t j = 0; j < n; ++j) out[j] = ws[j] * wt[j];
    else
      for (std::size_t j = 0; j < n; ++j) out[j] = 0.5 * (ws[j] + wt[j]);
  }

  if (spec_.symmetry == TemporalSymmetry::forward && !h_t.is_global()) {
    const double ti = data_.times[i];
    for (std::size_t j = 0; j < n; ++j)
      if (data_.times[j] > ti) out[j] = 0.0;
  }

  detail::cap_to_top(out, spec_.max_neighbors);
  if (out.maxCoeff() <= 0.0) throw DegenerateNeighborhoodError(i);
}

}  // namespace mgtwr
