#pragma once

#include "rrmh/models/diffusion.hpp"
#include "rrmh/models/ect.hpp"
#include "rrmh/models/linear_gaussian.hpp"
#include "rrmh/target.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rrmh::models {

/// Testbed selection and its knobs. Fields irrelevant to `kind` are ignored.
struct ModelConfig {
  std::string kind = "linear_gaussian";
  /// Seed for synthetic data (true parameter draws, observation noise).
  std::uint64_t data_seed = 2024;
  /// Observation noise sd; model default when empty.
  std::optional<double> noise_sd;
  std::optional<std::vector<double>> x_true;

  // linear_gaussian
  LinearGaussianOptions linear;

  // diffusion
  DiffusionOptions diffusion;

  // ect
  bool ect_calibrate = true;
  double ect_snr = 1000.0;
  bool ect_use_mesh_files = true;
};

/// A forward pair together with the data and densities of one inverse problem.
struct Problem {
  std::shared_ptr<const ForwardModel> model;
  PriorSpec prior;
  NoiseModel noise;
  DataVector d_obs;
  ParameterVector x_true;
  ParameterVector x_init;
  /// Conjugate posterior when the testbed has one.
  std::optional<GaussianPosterior> oracle;
};

Problem build_problem(const ModelConfig& cfg);

/// Directory holding the shipped mesh files.
std::string data_dir();

/// Defaults used by build_problem.
inline constexpr double kLinearNoiseSd = 0.1;
inline constexpr double kDiffusionNoiseSd = 2e-4;
std::vector<double> diffusion_default_truth();
std::vector<double> ect_default_truth();

}  // namespace rrmh::models
