#include "mgtwr/tds.hpp"

#include "mgtwr/kernels.hpp"
#include "mgtwr/threading.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace mgtwr {

// ---------------------------------------------------------------------------
// Grid construction
// ---------------------------------------------------------------------------

std::vector<double> geometric_levels(double hi, double lo, std::size_t levels) {
  if (!(hi > lo) || !(lo > 0.0)) throw InvalidInputError("geometric_levels requires hi > lo > 0");
  if (levels < 2) throw InvalidInputError("geometric_levels requires at least 2 levels");
  std::vector<double> out(levels);
  const double ratio = lo / hi;
  for (std::size_t j = 0; j < levels; ++j)
    out[j] = hi * std::pow(ratio, static_cast<double>(j) / static_cast<double>(levels - 1));
  out.front() = hi;
  out.back() = lo;
  return out;
}

namespace {

// Largest over focal points of the distance to the m-th nearest value,
// self included; the finest scale keeping every neighborhood populated.
double neighborhood_floor(const std::vector<std::vector<double>>& dist_rows, std::size_t m) {
  double floor_h = 0.0;
  for (auto row : dist_rows) {
    std::nth_element(row.begin(), row.begin() + (m - 1), row.end());
    floor_h = std::max(floor_h, row[m - 1]);
  }
  return floor_h;
}

std::vector<Bandwidth> adaptive_levels(std::size_t n, std::size_t k_min, std::size_t levels,
                                       std::vector<std::string>& warnings,
                                       const std::string& dim) {
  std::vector<Bandwidth> out;
  if (k_min >= n) {
    warnings.push_back(dim + " grid shortened to the sentinel: sample too small for k_min=" +
                       std::to_string(k_min));
    out.push_back(Bandwidth::global(static_cast<double>(n)));
    return out;
  }
  const std::vector<double> raw =
      geometric_levels(static_cast<double>(n), static_cast<double>(k_min), levels);
  std::vector<std::size_t> counts;
  for (double v : raw) {
    const std::size_t c = static_cast<std::size_t>(std::llround(v));
    if (counts.empty() || c < counts.back()) counts.push_back(c);
  }
  if (counts.size() < levels)
    warnings.push_back(dim + " grid shortened to " + std::to_string(counts.size()) +
                       " distinct neighbor counts (requested " + std::to_string(levels) + ")");
  out.reserve(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    Bandwidth b = Bandwidth::of(static_cast<double>(counts[j]));
    if (j == 0) b.global_sentinel = true;
    out.push_back(b);
  }
  return out;
}

std::vector<Bandwidth> distance_levels(double hi, double lo, std::size_t levels,
                                       std::vector<std::string>& warnings,
                                       const std::string& dim) {
  std::vector<Bandwidth> out;
  if (!(hi > 0.0) || !(lo > 0.0) || !(hi > lo * (1.0 + 1e-12))) {
    warnings.push_back(dim + " grid shortened to the sentinel: degenerate scale range [" +
                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out.push_back(Bandwidth::global(hi > 0.0 ? hi : 1.0));
    return out;
  }
  const std::vector<double> raw = geometric_levels(hi, lo, levels);
  out.reserve(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    Bandwidth b = Bandwidth::of(raw[j]);
    if (j == 0) b.global_sentinel = true;
    out.push_back(b);
  }
  return out;
}

}  // namespace

BandwidthGrid build_grid(const Dataset& data, std::size_t levels, const KernelSpec& spec,
                         std::size_t temporal_levels) {
  if (levels < 3) throw InvalidInputError("grid needs at least 3 levels");
  spec.validate();
  if (temporal_levels == 0) temporal_levels = levels;
  const std::size_t n = data.n();
  const std::size_t k_floor = data.k() + 2;
  BandwidthGrid grid;

  // Spatial dimension.
  if (spec.spatial_adaptive) {
    grid.spatial = adaptive_levels(n, k_floor, levels, grid.warnings, "spatial");
  } else {
    const double span_x = data.coords.col(0).maxCoeff() - data.coords.col(0).minCoeff();
    const double span_y = data.coords.col(1).maxCoeff() - data.coords.col(1).minCoeff();
    const double hi = std::sqrt(span_x * span_x + span_y * span_y);
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        rows[i][j] = detail::euclid(data.coords(i, 0), data.coords(i, 1), data.coords(j, 0),
                                    data.coords(j, 1));
    // Slack keeps the k-th neighbor strictly inside a bisquare support.
    const double lo = neighborhood_floor(rows, std::min(k_floor, n)) * 1.0001;
    grid.spatial = distance_levels(hi, lo, levels, grid.warnings, "spatial");
  }

  // Temporal dimension.
  if (temporal_levels == 1) {
    const double nominal = spec.temporal_adaptive
                               ? static_cast<double>(n)
                               : std::max(1.0, data.times.maxCoeff() - data.times.minCoeff());
    grid.temporal.push_back(Bandwidth::global(nominal));
  } else if (spec.temporal_adaptive) {
    grid.temporal = adaptive_levels(n, k_floor, temporal_levels, grid.warnings, "temporal");
  } else {
    const double hi = spec.cyclic ? spec.cycle_length / 2.0
                                  : data.times.maxCoeff() - data.times.minCoeff();
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    double min_positive = kInf;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double d = spec.cyclic
                             ? cyclic_distance(data.times[i], data.times[j], spec.cycle_length)
                             : std::abs(data.times[i] - data.times[j]);
        rows[i][j] = d;
        if (d > 0.0) min_positive = std::min(min_positive, d);
      }
    double lo = neighborhood_floor(rows, std::min(k_floor, n));
    if (!(lo > 0.0)) lo = std::isfinite(min_positive) ? min_positive : 0.0;
    lo *= 1.0001;
    grid.temporal = distance_levels(hi, lo, temporal_levels, grid.warnings, "temporal");
  }

  return grid;
}

// ---------------------------------------------------------------------------
// Candidate construction
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> axis_candidates(std::size_t k, const std::vector<std::size_t>& index,
                                         std::size_t levels) {
  std::set<std::size_t> c;
  const std::size_t cur = index[k];
  c.insert(cur);
  if (cur > 0) c.insert(cur - 1);
  if (cur + 1 < levels) c.insert(cur + 1);
  // Finest scale active among the other covariates: the smallest bandwidth
  // value, i.e. the largest grid index.
  bool any = false;
  std::size_t finest = 0;
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (j == k) continue;
    finest = any ? std::max(finest, index[j]) : index[j];
    any = true;
  }
  if (any) c.insert(finest);
  return {c.begin(), c.end()};
}

}  // namespace

std::vector<CandidatePair> candidate_set(std::size_t k,
                                         const std::vector<std::size_t>& spatial_index,
                                         const std::vector<std::size_t>& temporal_index,
                                         const BandwidthGrid& grid) {
  const auto cs = axis_candidates(k, spatial_index, grid.spatial_levels());
  const auto ct = axis_candidates(k, temporal_index, grid.temporal_levels());
  std::vector<CandidatePair> out;
  out.reserve(cs.size() * ct.size());
  for (std::size_t is : cs)
    for (std::size_t it : ct) out.push_back({is, it});
  return out;
}

// ---------------------------------------------------------------------------
// Steepest discrete descent
// ---------------------------------------------------------------------------

DescentStep steepest_descent_step(std::size_t k, const ScaleState& state,
                                  const Eigen::VectorXd& partial_residual, WeightCache& cache,
                                  const BandwidthGrid& grid) {
  const Dataset& data = cache.data();
  const std::size_t n = data.n();
  const Eigen::VectorXd x_k = data.X.col(static_cast<Eigen::Index>(k));
  const auto cands = candidate_set(k, state.spatial_index, state.temporal_index, grid);
  const CandidatePair current{state.spatial_index[k], state.temporal_index[k]};

  DescentStep step;
  step.best = current;
  step.best_aicc = kInf;
  bool found = false;

  for (const auto& cand : cands) {
    const Bandwidth& hs = grid.spatial[cand.spatial];
    const Bandwidth& ht = grid.temporal[cand.temporal];
    double score = kInf;
    UnivariateSmooth sm;
    try {
      sm = univariate_smooth(cache, partial_residual, x_k, hs, ht);
      const double rss = (partial_residual - sm.beta.cwiseProduct(x_k)).squaredNorm();
      score = aicc(rss, n, sm.hat_diag.sum());
    } catch (const Error&) {
      score = kInf;
    }
    // Strict improvement only: candidates are ordered coarse to fine, so the
    // coarsest scale wins ties.
    if (std::isfinite(score) && (!found || score < step.best_aicc)) {
      found = true;
      step.best_aicc = score;
      step.best = cand;
      step.smooth = std::move(sm);
    }
  }

  step.stuck = !found;
  step.moved = found && !(step.best == current);
  return step;
}

// ---------------------------------------------------------------------------
// Importance schedule
// ---------------------------------------------------------------------------

Eigen::VectorXd importance_scores(const ScaleState& state, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  Eigen::VectorXd scores(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    double s_k = 1.0;
    if (c != 0) {
      const double mean = X.col(c).mean();
      const double var = (X.col(c).array() - mean).square().sum() / static_cast<double>(n);
      s_k = std::sqrt(var);
      if (!(s_k > 0.0))
        throw InvalidInputError("constant non-intercept covariate has no importance scale");
    }
    scores[c] = state.beta.col(c).cwiseProduct(X.col(c)).cwiseAbs().mean() / s_k;
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Backfitting
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> make_schedule(OrderStrategy strategy, const ScaleState& state,
                                       const Eigen::MatrixXd& X, std::mt19937_64& rng) {
  const std::size_t k = static_cast<std::size_t>(X.cols());
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  switch (strategy) {
    case OrderStrategy::fixed_cyclic:
      break;
    case OrderStrategy::random:
      std::shuffle(order.begin(), order.end(), rng);
      break;
    case OrderStrategy::importance: {
      const Eigen::VectorXd scores = importance_scores(state, X);
      // Intercept first to anchor the scale, then decreasing contribution.
      std::stable_sort(order.begin() + 1, order.end(), [&](std::size_t a, std::size_t b) {
        return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
      });
      break;
    }
  }
  return order;
}

double rmse_of(const Eigen::VectorXd& resid) {
  return std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
}

}  // namespace

FitResult backfit(const Dataset& data, const KernelSpec& spec, const TdsConfig& config,
                  const BandwidthGrid& grid) {
  data.validate();
  spec.validate();
  config.validate();
  if (grid.spatial.empty() || grid.temporal.empty())
    throw InvalidInputError("bandwidth grid has an empty dimension");

  const std::size_t n = data.n();
  const std::size_t K = data.k();
  WeightCache cache(data, spec);

  ScaleState state;
  state.spatial_index.assign(K, 0);
  state.temporal_index.assign(K, 0);
  state.beta.resize(n, K);
  state.partial.resize(n, K);

  // OLS limit: every covariate at the grid maxima with the global fit.
  const OlsFit ols = ols_fit(data.X, data.y);
  for (std::size_t k = 0; k < K; ++k) {
    state.beta.col(k).setConstant(ols.beta[static_cast<Eigen::Index>(k)]);
    state.partial.col(k) = state.beta.col(k).cwiseProduct(data.X.col(static_cast<Eigen::Index>(k)));
  }

  FitResult result;
  result.grid = grid;
  result.spec = spec;
  result.config = config;

  Eigen::VectorXd fitted = state.partial.rowwise().sum();
  double prev_rmse = rmse_of(data.y - fitted);
  std::mt19937_64 rng(config.seed);
  std::size_t below_tol = 0;

  for (std::size_t sweep = 1; sweep <= config.max_iterations; ++sweep) {
    const auto order = make_schedule(config.order, state, data.X, rng);
    const double sweep_start_rmse = rmse_of(data.y - fitted);

    for (std::size_t k : order) {
      const Eigen::VectorXd e_k = data.y - (fitted - state.partial.col(k));
      const DescentStep step = steepest_descent_step(k, state, e_k, cache, result.grid);

      SweepMove move{sweep,        k,
                     state.spatial_index[k], state.temporal_index[k],
                     step.best.spatial,      step.best.temporal,
                     step.best_aicc,         step.moved};
      result.moves.push_back(move);

      if (step.stuck) {
        result.diagnostics.push_back("sweep " + std::to_string(sweep) + ": covariate " +
                                     std::to_string(k) +
                                     " stuck (all candidates infeasible); scale kept");
        continue;
      }

      state.spatial_index[k] = step.best.spatial;
      state.temporal_index[k] = step.best.temporal;
      state.beta.col(k) = step.smooth.beta;
      const Eigen::VectorXd new_partial =
          state.beta.col(k).cwiseProduct(data.X.col(static_cast<Eigen::Index>(k)));
      fitted += new_partial - state.partial.col(k);
      state.partial.col(k) = new_partial;
    }

    const double cur_rmse = rmse_of(data.y - fitted);
    if (cur_rmse > sweep_start_rmse + 1e-9)
      result.diagnostics.push_back("sweep " + std::to_string(sweep) +
                                   ": RMSE increased within the sweep (" +
                                   std::to_string(sweep_start_rmse) + " -> " +
                                   std::to_string(cur_rmse) + ")");

    const double delta_rel = prev_rmse > 0.0 ? (prev_rmse - cur_rmse) / prev_rmse : 0.0;
    result.sweep_log.push_back({sweep, cur_rmse, delta_rel, order});
    result.sweeps = sweep;
    prev_rmse = cur_rmse;

    below_tol = delta_rel < config.delta_rmse_tol ? below_tol + 1 : 0;
    if (below_tol >= config.patience) {
      result.converged = true;
      break;
    }
  }

  result.beta = state.beta;
  result.fitted = fitted;
  result.residuals = data.y - fitted;
  result.rmse = rmse_of(result.residuals);
  result.scales.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    CovariateScale& s = result.scales[k];
    s.spatial_index = state.spatial_index[k];
    s.temporal_index = state.temporal_index[k];
    s.spatial = result.grid.spatial[s.spatial_index];
    s.temporal = result.grid.temporal[s.temporal_index];
    s.at_spatial_max = state.at_spatial_max(k);
    s.at_temporal_max = state.at_temporal_max(k);
  }
  return result;
}

FitResult backfit(const Dataset& data, const KernelSpec& spec, const TdsConfig& config) {
  config.validate();
  const BandwidthGrid grid =
      build_grid(data, config.grid_levels, spec, config.spatial_only ? 1 : config.grid_levels);
  return backfit(data, spec, config, grid);
}

FitResult fit_mgwr(const Dataset& data, const KernelSpec& spec, const TdsConfig& config) {
  TdsConfig c = config;
  c.spatial_only = true;
  return backfit(data, spec, c);
}

}  // namespace mgtwr
