#pragma once

#include "mgtwr/types.hpp"

#include <map>

namespace mgtwr {

/// Caches per-bandwidth kernel weight matrices for one (dataset, spec) pair so
/// repeated candidate evaluations reuse them. For samples above
/// `dense_limit` rows nothing is cached and weights are recomputed per focal
/// point; both paths evaluate the same arithmetic and agree bitwise.
///
/// Usage: call ensure() for a bandwidth pair (single-threaded), then fill()
/// rows from any thread.
class WeightCache {
 public:
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  WeightCache(const Dataset& data, const KernelSpec& spec, std::size_t dense_limit = 6000);

  WeightCache(const WeightCache&) = delete;
  WeightCache& operator=(const WeightCache&) = delete;

  /// Builds (if needed) the weight matrices backing the pair.
  void ensure(const Bandwidth& h_s, const Bandwidth& h_t);

  /// Writes the combined weight row of focal point i into `out` (resized to
  /// n). Requires a prior ensure() of the same pair when caching is active.
  /// Throws DegenerateNeighborhoodError if the row is identically zero.
  void fill(std::size_t i, const Bandwidth& h_s, const Bandwidth& h_t,
            Eigen::VectorXd& out) const;

  const Dataset& data() const { return data_; }
  const KernelSpec& spec() const { return spec_; }
  bool dense() const { return dense_; }

 private:
  const double* spatial_row(std::size_t i, const Bandwidth& h, Eigen::VectorXd& scratch) const;
  const double* temporal_row(std::size_t i, const Bandwidth& h, Eigen::VectorXd& scratch) const;
  void build_spatial(const Bandwidth& h);
  void build_temporal(const Bandwidth& h);
  double spatial_h_for(std::size_t i, const Bandwidth& h) const;
  double temporal_h_for(std::size_t i, const Bandwidth& h) const;

  const Dataset& data_;
  KernelSpec spec_;
  bool dense_;
  RowMat dist_s_;   // spatial separations (dense mode)
  RowMat dist_t_;   // temporal separations, cyclic already applied (dense mode)
  std::map<double, RowMat> w_spatial_;
  std::map<double, RowMat> w_temporal_;
};

}  // namespace mgtwr
