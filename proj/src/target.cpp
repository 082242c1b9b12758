#include "rrmh/target.hpp"

#include <cmath>

namespace rrmh {

namespace {

bool is_symmetric(const Matrix& a, double rel_tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Eigen::LLT<Matrix> factor_spd(const Matrix& a, const char* what) {
  if (!is_symmetric(a)) throw Error(std::string(what) + ": matrix is not symmetric");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(std::string(what) + ": matrix is not positive definite");
  }
  const Vector diag = Matrix(llt.matrixL()).diagonal();
  if (!(diag.array() > 0.0).all() || !diag.allFinite()) {
    throw Error(std::string(what) + ": non-positive factorization pivot");
  }
  return llt;
}

}  // namespace

NoiseModel::NoiseModel(Matrix covariance) : cov_(std::move(covariance)) {
  if (cov_.rows() == 0) throw DimensionError("noise covariance is empty");
  llt_ = factor_spd(cov_, "noise covariance");
}

NoiseModel NoiseModel::isotropic(Index m, double sd) {
  return NoiseModel(Matrix::Identity(m, m) * (sd * sd));
}

NoiseModel NoiseModel::diagonal(const Vector& sd) {
  return NoiseModel(Matrix(sd.array().square().matrix().asDiagonal()));
}

double NoiseModel::quadratic_form(const Vector& r) const {
  require_dim(r.size(), dim(), "noise residual");
  const Vector w = llt_.matrixL().solve(r);
  return w.squaredNorm();
}

double gaussian_log_likelihood(const DataVector& d_sim, const DataVector& d_obs,
                               const NoiseModel& noise) {
  require_dim(d_sim.size(), noise.dim(), "simulated data");
  require_dim(d_obs.size(), noise.dim(), "observed data");
  require_finite(d_sim, "simulated data");
  require_finite(d_obs, "observed data");
  return -0.5 * noise.quadratic_form(d_sim - d_obs);
}

// ---------------------------------------------------------------- prior

PriorSpec PriorSpec::uniform_box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw DimensionError("prior bounds must be non-empty and of equal length");
  }
  for (Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i])) {
      throw Error("prior bounds: need finite lower < upper at component " + std::to_string(i));
    }
  }
  PriorSpec p;
  p.kind_ = PriorKind::uniform_box;
  p.lower_ = std::move(lower);
  p.upper_ = std::move(upper);
  p.mean_ = 0.5 * (p.lower_ + p.upper_);
  return p;
}

PriorSpec PriorSpec::gaussian(Vector mean, Matrix covariance) {
  require_dim(covariance.rows(), mean.size(), "prior covariance");
  const auto llt = factor_spd(covariance, "prior covariance");
  PriorSpec p;
  p.kind_ = PriorKind::gaussian;
  const Index d = mean.size();
  p.lower_ = Vector::Constant(d, -std::numeric_limits<double>::infinity());
  p.upper_ = Vector::Constant(d, std::numeric_limits<double>::infinity());
  p.mean_ = std::move(mean);
  p.cov_factor_ = llt.matrixL();
  p.precision_ = llt.solve(Matrix::Identity(d, d));
  p.precision_ = 0.5 * (p.precision_ + p.precision_.transpose());
  return p;
}

PriorSpec PriorSpec::smoothness_box(Vector lower, Vector upper, Matrix precision) {
  PriorSpec p = uniform_box(std::move(lower), std::move(upper));
  require_dim(precision.rows(), p.dim(), "smoothness precision");
  if (!is_symmetric(precision)) throw Error("smoothness precision is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(precision, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff())) {
    throw Error("smoothness precision is not positive semidefinite");
  }
  p.kind_ = PriorKind::smoothness_box;
  p.precision_ = std::move(precision);
  return p;
}

bool PriorSpec::in_support(const ParameterVector& x) const {
  if (x.size() != dim() || !x.allFinite()) return false;
  if (kind_ == PriorKind::gaussian) return true;
  return (x.array() >= lower_.array()).all() && (x.array() <= upper_.array()).all();
}

double PriorSpec::log_density(const ParameterVector& x) const {
  if (!in_support(x)) return kNegInf;
  switch (kind_) {
    case PriorKind::uniform_box: return log_offset_;
    case PriorKind::gaussian: {
      const Vector r = x - mean_;
      return log_offset_ - 0.5 * r.dot(precision_ * r);
    }
    case PriorKind::smoothness_box: return log_offset_ - 0.5 * x.dot(precision_ * x);
  }
  return kNegInf;
}

ParameterVector PriorSpec::sample(RandomStream& rng) const {
  const Index d = dim();
  auto box_draw = [&] {
    ParameterVector x(d);
    for (Index i = 0; i < d; ++i) x[i] = lower_[i] + (upper_[i] - lower_[i]) * rng.uniform();
    return x;
  };
  switch (kind_) {
    case PriorKind::uniform_box: return box_draw();
    case PriorKind::gaussian: return mean_ + cov_factor_ * rng.normal_vector(d);
    case PriorKind::smoothness_box:
      // Rejection from the box; exp(-1/2 x^T P x) <= 1 for PSD P.
      for (int attempt = 0; attempt < 1000000; ++attempt) {
        ParameterVector x = box_draw();
        if (rng.uniform() < std::exp(-0.5 * x.dot(precision_ * x))) return x;
      }
      throw Error("smoothness prior: rejection sampler exhausted");
  }
  return box_draw();
}

ParameterVector PriorSpec::center() const { return mean_; }

PriorSpec PriorSpec::shifted(double log_offset) const {
  PriorSpec p = *this;
  p.log_offset_ += log_offset;
  return p;
}

// ---------------------------------------------------------------- approx spec

void ApproxSpec::validate() const {
  if ((kind == ApproxKind::approx1 || kind == ApproxKind::approx3) && eem_source != EemSource::none) {
    throw Error(std::string(to_string(kind)) + " takes no error model (eem_source must be none)");
  }
  if (kind == ApproxKind::approx4 && eem_source != EemSource::posterior_adaptive) {
    throw Error("approx4 requires eem_source posterior-adaptive");
  }
  if (kind == ApproxKind::approx2 && eem_source == EemSource::none) {
    throw Error("approx2 requires an error model source");
  }
  if (gain_enabled && kind != ApproxKind::approx2) {
    throw Error("gain is only used by approx2");
  }
}

std::string_view to_string(ApproxKind kind) {
  switch (kind) {
    case ApproxKind::approx1: return "approx1";
    case ApproxKind::approx2: return "approx2";
    case ApproxKind::approx3: return "approx3";
    case ApproxKind::approx4: return "approx4";
  }
  return "?";
}

std::string_view to_string(EemSource source) {
  switch (source) {
    case EemSource::none: return "none";
    case EemSource::prior_fitted: return "prior-fitted";
    case EemSource::posterior_adaptive: return "posterior-adaptive";
  }
  return "?";
}

ApproxKind parse_approx_kind(std::string_view s) {
  if (s == "approx1") return ApproxKind::approx1;
  if (s == "approx2") return ApproxKind::approx2;
  if (s == "approx3") return ApproxKind::approx3;
  if (s == "approx4") return ApproxKind::approx4;
  throw Error("unknown approximation kind '" + std::string(s) + "'");
}

EemSource parse_eem_source(std::string_view s) {
  if (s == "none") return EemSource::none;
  if (s == "prior-fitted") return EemSource::prior_fitted;
  if (s == "posterior-adaptive") return EemSource::posterior_adaptive;
  throw Error("unknown eem source '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- densities

ExactEvaluation evaluate_exact(const ParameterVector& x, const ForwardPair& model,
                               const NoiseModel& noise, const PriorSpec& prior,
                               const DataVector& d_obs) {
  require_dim(x.size(), model.param_dim(), "parameter vector");
  ExactEvaluation e;
  const double lp = prior.log_density(x);
  if (lp == kNegInf) return e;
  auto out = model.exact_timed(x);
  e.log_lik = gaussian_log_likelihood(out.value, d_obs, noise);
  e.log_post = e.log_lik + lp;
  e.f_exact = std::move(out.value);
  e.elapsed = out.elapsed;
  return e;
}

double log_posterior(const ParameterVector& x, const ForwardPair& model, const NoiseModel& noise,
                     const PriorSpec& prior, const DataVector& d_obs) {
  return evaluate_exact(x, model, noise, prior, d_obs).log_post;
}

double eem_jitter(const Matrix& sigma_b) {
  if (sigma_b.rows() == 0) return 0.0;
  return 1e-10 * sigma_b.trace() / static_cast<double>(sigma_b.rows());
}

ApproxDensity::ApproxDensity(const ApproxSpec& spec, const EemState& eem, const NoiseModel& noise,
                             const PriorSpec& prior, const DataVector& d_obs)
    : spec_(spec), prior_(prior), d_obs_(d_obs) {
  spec_.validate();
  const Index m = noise.dim();
  require_dim(d_obs.size(), m, "observed data");
  gain_ = Vector::Ones(m);
  mu_ = Vector::Zero(m);
  Matrix cov = noise.covariance();
  if (spec_.uses_eem()) {
    require_dim(eem.dim(), m, "error model");
    if (spec_.kind == ApproxKind::approx2) {
      mu_ = eem.mu_b;
      if (spec_.gain_enabled) gain_ = eem.gain;
    }
    cov += eem.sigma_b;
    cov.diagonal().array() += eem_jitter(eem.sigma_b);
  }
  llt_ = factor_spd(cov, "Sigma_b + Sigma_e");
}

DataVector ApproxDensity::predicted(const DataVector& f_reduced_x,
                                    const CorrectionAnchor* anchor) const {
  if (spec_.state_dependent()) {
    if (anchor == nullptr) {
      throw Error(std::string(to_string(spec_.kind)) + " requires a correction anchor");
    }
    return local_correct(f_reduced_x, *anchor);
  }
  require_dim(f_reduced_x.size(), d_obs_.size(), "reduced output");
  return gain_.cwiseProduct(f_reduced_x) + mu_;
}

double ApproxDensity::log_likelihood(const DataVector& f_reduced_x,
                                     const CorrectionAnchor* anchor) const {
  const Vector r = predicted(f_reduced_x, anchor) - d_obs_;
  return -0.5 * llt_.matrixL().solve(r).squaredNorm();
}

double ApproxDensity::log_density(const ParameterVector& x, const DataVector& f_reduced_x,
                                  const CorrectionAnchor* anchor) const {
  const double lp = prior_.log_density(x);
  if (lp == kNegInf) return kNegInf;
  return log_likelihood(f_reduced_x, anchor) + lp;
}

double approx_log_posterior(const ParameterVector& x, const ApproxSpec& spec, const EemState& eem,
                            const std::optional<CorrectionAnchor>& anchor,
                            const ForwardPair& model, const NoiseModel& noise,
                            const PriorSpec& prior, const DataVector& d_obs) {
  require_dim(x.size(), model.param_dim(), "parameter vector");
  if (spec.state_dependent() && !anchor) {
    throw Error(std::string(to_string(spec.kind)) + " requires a correction anchor");
  }
  ApproxDensity density(spec, eem, noise, prior, d_obs);
  if (!prior.in_support(x)) return kNegInf;
  const DataVector f = model.reduced(x);
  return density.log_density(x, f, anchor ? &*anchor : nullptr);
}

}  // namespace rrmh
