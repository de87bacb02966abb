#pragma once

#include "mgtwr/prediction.hpp"

#include <string>

namespace mgtwr {

inline constexpr int kModelFormatVersion = 1;

struct ModelSummary {
  bool converged = true;
  double rmse = kNaN;
  double aicc = kNaN;
  std::size_t sweeps = 0;
};

/// Versioned JSON archive holding the prediction model (coordinates, times,
/// coefficient matrix, bandwidth table, kernel configuration, gamma) plus a
/// short fit summary. Stable across minor versions.
void save_model(const std::string& path, const PredictionModel& model,
                const ModelSummary& summary);

struct LoadedModel {
  PredictionModel model;
  ModelSummary summary;
};

LoadedModel load_model(const std::string& path);

/// KernelSpec <-> JSON text fragments shared by the archive and the CLI echo.
std::string kernel_spec_to_json(const KernelSpec& spec);
KernelSpec kernel_spec_from_json(const std::string& json_text);

}  // namespace mgtwr
