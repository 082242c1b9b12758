#pragma once

#include "rrmh/core.hpp"
#include "rrmh/eem.hpp"
#include "rrmh/forward_pair.hpp"

#include <Eigen/Cholesky>

#include <memory>
#include <optional>
#include <string_view>

namespace rrmh {

/// Zero-mean Gaussian observation noise with a cached Cholesky factor.
class NoiseModel {
 public:
  explicit NoiseModel(Matrix covariance);

  static NoiseModel isotropic(Index m, double sd);
  static NoiseModel diagonal(const Vector& sd);

  Index dim() const { return cov_.rows(); }
  const Matrix& covariance() const { return cov_; }
  /// r^T Sigma^{-1} r
  double quadratic_form(const Vector& r) const;

 private:
  Matrix cov_;
  Eigen::LLT<Matrix> llt_;
};

/// -1/2 (d_sim - d_obs)^T Sigma_e^{-1} (d_sim - d_obs), normalizing constant dropped.
double gaussian_log_likelihood(const DataVector& d_sim, const DataVector& d_obs,
                               const NoiseModel& noise);

enum class PriorKind { uniform_box, gaussian, smoothness_box };

/// Prior density over parameters. Unnormalized; -inf outside the support.
///
/// uniform_box: constant on the box. gaussian: N(mean, covariance) on R^d.
/// smoothness_box: exp(-1/2 x^T P x) restricted to the box, P symmetric PSD.
class PriorSpec {
 public:
  static PriorSpec uniform_box(Vector lower, Vector upper);
  static PriorSpec gaussian(Vector mean, Matrix covariance);
  static PriorSpec smoothness_box(Vector lower, Vector upper, Matrix precision);

  PriorKind kind() const { return kind_; }
  Index dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  const Vector& mean() const { return mean_; }
  const Matrix& precision() const { return precision_; }

  bool in_support(const ParameterVector& x) const;
  double log_density(const ParameterVector& x) const;
  ParameterVector sample(RandomStream& rng) const;
  /// Box midpoint, or the mean for an unbounded Gaussian.
  ParameterVector center() const;

  /// Same prior with a constant added to the log-density.
  PriorSpec shifted(double log_offset) const;

 private:
  PriorKind kind_ = PriorKind::uniform_box;
  Vector lower_, upper_, mean_;
  Matrix precision_;
  Matrix cov_factor_;
  double log_offset_ = 0.0;
};

enum class ApproxKind { approx1, approx2, approx3, approx4 };
enum class EemSource { none, prior_fitted, posterior_adaptive };

/// Which approximate posterior defines pi*.
///
/// approx1: F* with Sigma_e. approx2: gain * F* + mu_b with Sigma_b + Sigma_e.
/// approx3: locally corrected F*_x with Sigma_e. approx4: F*_x with mu_b = 0
/// and Sigma_b + Sigma_e.
struct ApproxSpec {
  ApproxKind kind = ApproxKind::approx1;
  EemSource eem_source = EemSource::none;
  bool gain_enabled = false;

  static ApproxSpec approx1() { return {}; }
  static ApproxSpec approx2(EemSource source, bool gain = false) {
    return {ApproxKind::approx2, source, gain};
  }
  static ApproxSpec approx3() { return {ApproxKind::approx3, EemSource::none, false}; }
  static ApproxSpec approx4() {
    return {ApproxKind::approx4, EemSource::posterior_adaptive, false};
  }

  void validate() const;
  bool state_dependent() const {
    return kind == ApproxKind::approx3 || kind == ApproxKind::approx4;
  }
  bool uses_eem() const { return kind == ApproxKind::approx2 || kind == ApproxKind::approx4; }
  bool adaptive() const { return eem_source == EemSource::posterior_adaptive; }
};

std::string_view to_string(ApproxKind kind);
std::string_view to_string(EemSource source);
ApproxKind parse_approx_kind(std::string_view s);
EemSource parse_eem_source(std::string_view s);

/// Exact posterior evaluated at one point.
struct ExactEvaluation {
  double log_post = kNegInf;
  double log_lik = kNegInf;
  DataVector f_exact;
  std::chrono::nanoseconds elapsed{0};
};

/// Unnormalized log-posterior. Outside the prior support returns -inf
/// without calling F; otherwise exactly one exact-map evaluation.
double log_posterior(const ParameterVector& x, const ForwardPair& model, const NoiseModel& noise,
                     const PriorSpec& prior, const DataVector& d_obs);
ExactEvaluation evaluate_exact(const ParameterVector& x, const ForwardPair& model,
                               const NoiseModel& noise, const PriorSpec& prior,
                               const DataVector& d_obs);

/// Approximate density with its EEM snapshot factorized once.
///
/// Evaluation takes the reduced-map output at the point, so callers that
/// already hold F*(x) do not re-solve. The exact map is never called.
class ApproxDensity {
 public:
  ApproxDensity(const ApproxSpec& spec, const EemState& eem, const NoiseModel& noise,
                const PriorSpec& prior, const DataVector& d_obs);

  const ApproxSpec& spec() const { return spec_; }

  /// Predicted noise-free data used in the misfit: gain * F* + mu_b for
  /// approx2, F*_x for the state-dependent kinds, F* otherwise.
  DataVector predicted(const DataVector& f_reduced_x, const CorrectionAnchor* anchor) const;

  double log_density(const ParameterVector& x, const DataVector& f_reduced_x,
                     const CorrectionAnchor* anchor) const;
  /// Log-likelihood part only (prior excluded).
  double log_likelihood(const DataVector& f_reduced_x, const CorrectionAnchor* anchor) const;

 private:
  ApproxSpec spec_;
  Vector gain_;
  Vector mu_;
  Eigen::LLT<Matrix> llt_;
  PriorSpec prior_;
  DataVector d_obs_;
};

/// Jitter added to Sigma_b + Sigma_e before factorization: 1e-10 * trace(Sigma_b) / m.
double eem_jitter(const Matrix& sigma_b);

/// Unnormalized approximate log-posterior using only the reduced map.
/// Outside the prior support returns -inf without evaluating F*.
double approx_log_posterior(const ParameterVector& x, const ApproxSpec& spec, const EemState& eem,
                            const std::optional<CorrectionAnchor>& anchor,
                            const ForwardPair& model, const NoiseModel& noise,
                            const PriorSpec& prior, const DataVector& d_obs);

}  // namespace rrmh
