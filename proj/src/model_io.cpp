#include "mgtwr/model_io.hpp"

#include <json.hpp>

#include <fstream>

namespace mgtwr {

using nlohmann::json;

namespace {

json spec_to_json_obj(const KernelSpec& spec) {
  return json{{"spatial_family", spec.spatial_family == KernelFamily::gaussian ? "gaussian" : "bisquare"},
              {"spatial_adaptive", spec.spatial_adaptive},
              {"temporal_family", spec.temporal_family == KernelFamily::gaussian ? "gaussian" : "bisquare"},
              {"temporal_adaptive", spec.temporal_adaptive},
              {"cyclic", spec.cyclic},
              {"cycle_length", spec.cycle_length},
              {"symmetry", spec.symmetry == TemporalSymmetry::forward ? "forward" : "symmetric"},
              {"combine", spec.combine == CombineOp::additive ? "additive" : "multiplicative"},
              {"max_neighbors", spec.max_neighbors}};
}

KernelFamily family_from(const std::string& s) {
  if (s == "gaussian") return KernelFamily::gaussian;
  if (s == "bisquare") return KernelFamily::bisquare;
  throw SchemaError("unknown kernel family '" + s + "'");
}

KernelSpec spec_from_json_obj(const json& j) {
  KernelSpec spec;
  spec.spatial_family = family_from(j.at("spatial_family").get<std::string>());
  spec.spatial_adaptive = j.at("spatial_adaptive").get<bool>();
  spec.temporal_family = family_from(j.at("temporal_family").get<std::string>());
  spec.temporal_adaptive = j.at("temporal_adaptive").get<bool>();
  spec.cyclic = j.at("cyclic").get<bool>();
  spec.cycle_length = j.at("cycle_length").get<double>();
  const std::string sym = j.at("symmetry").get<std::string>();
  if (sym != "symmetric" && sym != "forward") throw SchemaError("unknown symmetry '" + sym + "'");
  spec.symmetry = sym == "forward" ? TemporalSymmetry::forward : TemporalSymmetry::symmetric;
  const std::string comb = j.at("combine").get<std::string>();
  if (comb != "multiplicative" && comb != "additive")
    throw SchemaError("unknown combination operator '" + comb + "'");
  spec.combine = comb == "additive" ? CombineOp::additive : CombineOp::multiplicative;
  spec.max_neighbors = j.at("max_neighbors").get<std::size_t>();
  spec.validate();
  return spec;
}

json bandwidth_to_json(const Bandwidth& b) {
  return json{{"value", b.value}, {"global", b.global_sentinel}};
}

Bandwidth bandwidth_from_json(const json& j) {
  Bandwidth b;
  b.value = j.at("value").get<double>();
  b.global_sentinel = j.at("global").get<bool>();
  return b;
}

}  // namespace

std::string kernel_spec_to_json(const KernelSpec& spec) { return spec_to_json_obj(spec).dump(); }

KernelSpec kernel_spec_from_json(const std::string& json_text) {
  return spec_from_json_obj(json::parse(json_text));
}

void save_model(const std::string& path, const PredictionModel& model,
                const ModelSummary& summary) {
  json j;
  j["format"] = "mgtwr-model";
  j["format_version"] = kModelFormatVersion;
  j["kernel"] = spec_to_json_obj(model.spec);
  j["gamma"] = model.gamma;
  j["covariates"] = model.covariate_names;
  j["n"] = model.n();

  json scales = json::array();
  for (std::size_t k = 0; k < model.k(); ++k) {
    const CovariateScale& s = model.scales[k];
    scales.push_back(json{{"covariate", model.covariate_names[k]},
                          {"spatial", bandwidth_to_json(s.spatial)},
                          {"temporal", bandwidth_to_json(s.temporal)},
                          {"spatial_index", s.spatial_index},
                          {"temporal_index", s.temporal_index},
                          {"at_spatial_max", s.at_spatial_max},
                          {"at_temporal_max", s.at_temporal_max},
                          {"global", static_cast<bool>(model.is_global[k])},
                          {"global_coef", model.global_coef[static_cast<Eigen::Index>(k)]}});
  }
  j["scales"] = scales;

  json coords = json::array(), times = json::array(), beta = json::array();
  for (std::size_t i = 0; i < model.n(); ++i) {
    coords.push_back({model.coords(i, 0), model.coords(i, 1)});
    times.push_back(model.times[static_cast<Eigen::Index>(i)]);
    json row = json::array();
    for (std::size_t k = 0; k < model.k(); ++k) row.push_back(model.beta(i, k));
    beta.push_back(std::move(row));
  }
  j["coords"] = std::move(coords);
  j["times"] = std::move(times);
  j["beta"] = std::move(beta);

  j["fit"] = json{{"converged", summary.converged},
                  {"rmse", summary.rmse},
                  {"aicc", summary.aicc},
                  {"sweeps", summary.sweeps}};

  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("'" + path + "' is not a valid model archive: " + e.what());
  }
  if (j.value("format", "") != "mgtwr-model")
    throw SchemaError("'" + path + "' is not a model archive");
  const int version = j.value("format_version", -1);
  if (version != kModelFormatVersion)
    throw SchemaError("unsupported model format version " + std::to_string(version));

  LoadedModel out;
  PredictionModel& m = out.model;
  m.spec = spec_from_json_obj(j.at("kernel"));
  m.gamma = j.at("gamma").get<double>();
  m.covariate_names = j.at("covariates").get<std::vector<std::string>>();
  const std::size_t n = j.at("n").get<std::size_t>();
  const std::size_t K = m.covariate_names.size();

  m.scales.resize(K);
  m.is_global.assign(K, 0);
  m.global_coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  const json& scales = j.at("scales");
  if (scales.size() != K) throw SchemaError("model scales do not match the covariate list");
  for (std::size_t k = 0; k < K; ++k) {
    const json& s = scales[k];
    m.scales[k].spatial = bandwidth_from_json(s.at("spatial"));
    m.scales[k].temporal = bandwidth_from_json(s.at("temporal"));
    m.scales[k].spatial_index = s.at("spatial_index").get<std::size_t>();
    m.scales[k].temporal_index = s.at("temporal_index").get<std::size_t>();
    m.scales[k].at_spatial_max = s.at("at_spatial_max").get<bool>();
    m.scales[k].at_temporal_max = s.at("at_temporal_max").get<bool>();
    m.is_global[k] = s.at("global").get<bool>() ? 1 : 0;
    m.global_coef[static_cast<Eigen::Index>(k)] = s.at("global_coef").get<double>();
  }

  const json& coords = j.at("coords");
  const json& times = j.at("times");
  const json& beta = j.at("beta");
  if (coords.size() != n || times.size() != n || beta.size() != n)
    throw SchemaError("model arrays do not match the declared sample size");
  m.coords.resize(static_cast<Eigen::Index>(n), 2);
  m.times.resize(static_cast<Eigen::Index>(n));
  m.beta.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < n; ++i) {
    m.coords(static_cast<Eigen::Index>(i), 0) = coords[i][0].get<double>();
    m.coords(static_cast<Eigen::Index>(i), 1) = coords[i][1].get<double>();
    m.times[static_cast<Eigen::Index>(i)] = times[i].get<double>();
    if (beta[i].size() != K) throw SchemaError("model coefficient row width mismatch");
    for (std::size_t k = 0; k < K; ++k)
      m.beta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = beta[i][k].get<double>();
  }

  const json& fit = j.at("fit");
  out.summary.converged = fit.at("converged").get<bool>();
  out.summary.rmse = fit.at("rmse").is_null() ? kNaN : fit.at("rmse").get<double>();
  out.summary.aicc = fit.at("aicc").is_null() ? kNaN : fit.at("aicc").get<double>();
  out.summary.sweeps = fit.at("sweeps").get<std::size_t>();
  return out;
}

}  // namespace mgtwr
