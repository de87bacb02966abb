#pragma once

#include "mgtwr/types.hpp"

namespace mgtwr {

/// Kernel weight for a spatial separation d under bandwidth h (a distance).
/// gaussian: exp(-0.5 (d/h)^2); bisquare: (1 - (d/h)^2)^2 for d < h, else 0.
double spatial_weight(double d, double h, KernelFamily family);

/// Distance from `focal` to its k-th nearest point in `coords` (the focal
/// itself counts when it is one of the rows). Requires 2 <= k <= n.
double adaptive_to_distance(const Eigen::Vector2d& focal, const Eigen::MatrixX2d& coords,
                            std::size_t k);

/// Circular separation of two timestamps on a cycle of length C, in [0, C/2].
double cyclic_distance(double t_i, double t_j, double cycle_length);

/// Temporal kernel weight of observation j for a focal time t_i. Cyclic specs
/// measure the gap on the circle; forward specs zero strictly-future points.
double temporal_weight(double t_i, double t_j, double h_t, const KernelSpec& spec);

/// Combined spatio-temporal weights from a focal location/time to every
/// observation. Adaptive bandwidths are neighbor counts and are resolved to
/// distances against `data` before kernel evaluation. A global-sentinel
/// bandwidth drops its dimension from the combination (both global = uniform
/// weights). Weights are not row-normalized. Throws
/// DegenerateNeighborhoodError when the result is identically zero;
/// `focal_index` is used in that report when given.
Eigen::VectorXd st_weights(const Eigen::Vector2d& focal_xy, double focal_t, const Dataset& data,
                           const Bandwidth& h_s, const Bandwidth& h_t, const KernelSpec& spec,
                           std::size_t focal_index = static_cast<std::size_t>(-1));

namespace detail {

inline double euclid(double ax, double ay, double bx, double by) {
  const double dx = ax - bx;
  const double dy = ay - by;
  return std::sqrt(dx * dx + dy * dy);
}

inline double combine_weights(double w_s, double w_t, CombineOp op) {
  return op == CombineOp::multiplicative ? w_s * w_t : 0.5 * (w_s + w_t);
}

/// Keep the m largest entries of w, zero the rest. Ties at the cutoff are
/// resolved toward lower indices.
void cap_to_top(Eigen::VectorXd& w, std::size_t m);

}  // namespace detail

}  // namespace mgtwr
