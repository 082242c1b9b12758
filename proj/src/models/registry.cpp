#include "rrmh/models/registry.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>

namespace rrmh::models {

std::string data_dir() {
  if (const char* env = std::getenv("RRMH_DATA_DIR")) return env;
#ifdef RRMH_DATA_DIR
  return RRMH_DATA_DIR;
#else
  return "data";
#endif
}

std::vector<double> diffusion_default_truth() { return {0.4, -0.6, 0.5, -0.3, 0.6, 0.2, -0.4}; }

std::vector<double> ect_default_truth() { return {3.0, 2.0, 1.5, 2.5, 4.0}; }

namespace {

ParameterVector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

ParameterVector truth_or(const ModelConfig& cfg, const std::vector<double>& fallback, Index d) {
  ParameterVector x = to_vector(cfg.x_true ? *cfg.x_true : fallback);
  require_dim(x.size(), d, "x_true");
  return x;
}

Problem linear_problem(const ModelConfig& cfg) {
  auto model = std::make_shared<LinearGaussianModel>(cfg.linear);
  const Index d = model->param_dim(), m = model->data_dim();
  const double sd = cfg.noise_sd.value_or(kLinearNoiseSd);
  RandomStream rng(cfg.data_seed);
  PriorSpec prior = PriorSpec::gaussian(Vector::Zero(d), Matrix::Identity(d, d));
  ParameterVector x_true = cfg.x_true ? truth_or(cfg, {}, d) : prior.sample(rng);
  DataVector d_obs = model->exact(x_true) + sd * rng.normal_vector(m);
  NoiseModel noise = NoiseModel::isotropic(m, sd);
  auto oracle = conjugate_posterior(model->a(), noise.covariance(), d_obs, Vector::Zero(d),
                                    Matrix::Identity(d, d));
  return Problem{model, prior, noise, d_obs, x_true, Vector::Zero(d), oracle};
}

Problem diffusion_problem(const ModelConfig& cfg) {
  auto model = std::make_shared<DiffusionModel>(cfg.diffusion);
  const Index d = model->param_dim(), m = model->data_dim();
  const double sd = cfg.noise_sd.value_or(kDiffusionNoiseSd);
  RandomStream rng(cfg.data_seed);
  std::vector<double> fallback = diffusion_default_truth();
  fallback.resize(static_cast<std::size_t>(d), 0.0);
  ParameterVector x_true = truth_or(cfg, fallback, d);
  DataVector d_obs = model->exact(x_true) + sd * rng.normal_vector(m);
  PriorSpec prior = PriorSpec::uniform_box(Vector::Constant(d, -1.0), Vector::Constant(d, 1.0));
  return Problem{model, prior, NoiseModel::isotropic(m, sd), d_obs, x_true, Vector::Zero(d), {}};
}

Problem ect_problem(const ModelConfig& cfg) {
  EctOptions opts;
  if (cfg.ect_use_mesh_files) {
    const std::filesystem::path dir = std::filesystem::path(data_dir()) / "meshes";
    const auto fine = dir / "ect_fine.mesh";
    const auto coarse = dir / "ect_coarse.mesh";
    if (std::filesystem::exists(fine) && std::filesystem::exists(coarse)) {
      opts.fine_mesh_path = fine.string();
      opts.coarse_mesh_path = coarse.string();
    }
  }
  auto model = std::make_shared<EctModel>(opts);
  const Index d = model->param_dim(), m = model->data_dim();
  RandomStream rng(cfg.data_seed);
  ParameterVector x_true = truth_or(cfg, ect_default_truth(), d);
  const DataVector clean = model->exact(x_true);
  const double sd = cfg.noise_sd.value_or(std::sqrt(clean.squaredNorm() / static_cast<double>(m)) /
                                          cfg.ect_snr);
  DataVector d_obs = clean + sd * rng.normal_vector(m);
  if (cfg.ect_calibrate) {
    const ParameterVector e0 = ect_empty_frame(), e1 = ect_inclusion_frame();
    const DataVector obs0 = model->exact(e0) + sd * rng.normal_vector(m);
    const DataVector obs1 = model->exact(e1) + sd * rng.normal_vector(m);
    model->set_calibration(fit_gain_offset(model->reduced_raw(e0), model->reduced_raw(e1), obs0, obs1));
  }
  PriorSpec prior = PriorSpec::uniform_box(Vector::Constant(d, 1.0), Vector::Constant(d, 5.0));
  return Problem{model, prior, NoiseModel::isotropic(m, sd), d_obs, x_true,
                 Vector::Constant(d, 3.0), {}};
}

}  // namespace

Problem build_problem(const ModelConfig& cfg) {
  if (cfg.kind == "linear_gaussian") return linear_problem(cfg);
  if (cfg.kind == "diffusion") return diffusion_problem(cfg);
  if (cfg.kind == "ect") return ect_problem(cfg);
  throw ConfigError("/model/kind", "unknown model '" + cfg.kind + "'");
}

}  // namespace rrmh::models
