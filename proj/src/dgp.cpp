#include "mgtwr/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mgtwr {

double dgp_beta1_raw(double u, double v, double day) {
  const double dbar = std::abs(day - 182.5) / 182.5;
  return (1.0 - dbar) * (3.0 * (u + v) - 1.0) + dbar * (3.0 * (-u + v));
}

double dgp_beta2(double u_cor, double v_cor) {
  return 84.0 * u_cor * v_cor * (1.0 - u_cor) * (1.0 - v_cor);
}

double dgp_beta3(double u, double v) { return 1.0 + 2.0 * u + 2.0 * v; }

double dgp_beta4(double u, double v) {
  return 4.0 * std::sin(2.0 * M_PI * u) * std::cos(2.0 * M_PI * v);
}

SimulatedDataset gen_dataset(const DgpConfig& config) {
  config.validate();
  const std::size_t n = config.n;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> day_draw(1, 365);
  std::uniform_int_distribution<int> year_draw(1, config.years);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SimulatedDataset sim;
  sim.data.coords.resize(n, 2);
  sim.data.times.resize(n);
  sim.data.X.resize(n, 4);
  sim.data.y.resize(n);
  sim.data.covariate_names = {"intercept", "x1", "x2", "x3"};
  sim.beta_true.resize(n, 4);
  sim.eta.resize(n);
  sim.day.resize(n);
  sim.year.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    sim.data.coords(i, 0) = unit(rng);
    sim.data.coords(i, 1) = unit(rng);
  }
  for (std::size_t i = 0; i < n; ++i) sim.day[i] = static_cast<double>(day_draw(rng));
  for (std::size_t i = 0; i < n; ++i) sim.year[i] = year_draw(rng);
  sim.data.X.col(0).setOnes();
  for (Eigen::Index c = 1; c < 4; ++c)
    for (std::size_t i = 0; i < n; ++i) sim.data.X(i, c) = gauss(rng);

  for (std::size_t i = 0; i < n; ++i)
    sim.data.times[i] = static_cast<double>(sim.year[i] - 1) * 365.0 + sim.day[i];

  // Time-perturbed spatial proxies, normalized over the generated sample.
  Eigen::VectorXd su(n), sv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::abs(sim.day[i] - 210.0) / 210.0;
    su[i] = sim.data.coords(i, 0) + s;
    sv[i] = sim.data.coords(i, 1) + s;
  }
  const double su_max = su.maxCoeff();
  const double sv_min = sv.minCoeff();
  const double sv_max = sv.maxCoeff();

  for (std::size_t i = 0; i < n; ++i) {
    const double u = sim.data.coords(i, 0);
    const double v = sim.data.coords(i, 1);
    const double u_cor = su[i] / su_max;
    const double v_cor = (sv[i] - sv_min) / (sv_max - sv_min);
    sim.beta_true(i, 0) = dgp_beta1_raw(u, v, sim.day[i]);
    sim.beta_true(i, 1) = dgp_beta2(u_cor, v_cor);
    sim.beta_true(i, 2) = dgp_beta3(u, v);
    sim.beta_true(i, 3) = dgp_beta4(u, v);
  }
  sim.beta1_shift = sim.beta_true.col(0).minCoeff();
  sim.beta_true.col(0).array() -= sim.beta1_shift;

  for (std::size_t i = 0; i < n; ++i)
    sim.eta[i] = sim.beta_true(i, 0) + sim.beta_true(i, 1) * sim.data.X(i, 1) +
                 sim.beta_true(i, 2) * sim.data.X(i, 2) + sim.beta_true(i, 3) * sim.data.X(i, 3);

  const double eta_mean = sim.eta.mean();
  const double eta_var = (sim.eta.array() - eta_mean).square().sum() / static_cast<double>(n);
  sim.sigma2 = eta_var / config.snr;
  const double sigma = std::sqrt(sim.sigma2);
  for (std::size_t i = 0; i < n; ++i) sim.data.y[i] = sim.eta[i] + sigma * gauss(rng);

  // Random holdout of floor(fraction * n) observations.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t m = static_cast<std::size_t>(config.holdout_fraction * static_cast<double>(n));
  sim.holdout.assign(n, 0);
  for (std::size_t r = 0; r < m; ++r) sim.holdout[perm[r]] = 1;

  return sim;
}

Dataset select_rows(const Dataset& data, const std::vector<unsigned char>& take) {
  if (take.size() != data.n()) throw InvalidInputError("selection mask length mismatch");
  const std::size_t m =
      static_cast<std::size_t>(std::count_if(take.begin(), take.end(), [](auto b) { return b != 0; }));
  Dataset out;
  out.coords.resize(m, 2);
  out.times.resize(m);
  out.X.resize(m, data.X.cols());
  out.y.resize(m);
  out.covariate_names = data.covariate_names;
  std::size_t r = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (!take[i]) continue;
    out.coords.row(r) = data.coords.row(i);
    out.times[r] = data.times[i];
    out.X.row(r) = data.X.row(i);
    out.y[r] = data.y[i];
    ++r;
  }
  return out;
}

}  // namespace mgtwr
