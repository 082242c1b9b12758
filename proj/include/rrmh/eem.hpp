#pragma once

#include "rrmh/core.hpp"
#include "rrmh/forward_pair.hpp"

#include <vector>

namespace rrmh {

class PriorSpec;

/// Enhanced-error-model parameters: b ~ N(mu_b, sigma_b), plus a per-component
/// gain applied to the reduced map output.
///
/// With `count == 0` the model is the identity modification (mu_b = 0,
/// sigma_b = 0). In zero-mean mode the first two residuals are held in
/// `pending` and sigma_b stays zero until the third arrives.
struct EemState {
  Vector mu_b;
  Matrix sigma_b;
  Vector gain;
  std::size_t count = 0;
  std::vector<Vector> pending;

  static EemState identity(Index m);

  Index dim() const { return mu_b.size(); }
  /// Symmetric, PSD (to tolerance), finite nonzero gain, zero moments at count 0.
  bool is_valid(double tol = 1e-9) const;
};

/// Current-state data used by the zeroth-order local correction.
struct CorrectionAnchor {
  ParameterVector x;
  DataVector f_exact;
  DataVector f_reduced;
};

/// B(x) = F(x) - F*(x). One evaluation of each map.
Vector residual(const ParameterVector& x, const ForwardPair& model);

/// F*_x(y) = F*(y) + (F(x) - F*(x)).
DataVector local_correct(const DataVector& f_reduced_y, const CorrectionAnchor& anchor);

/// Prior-fitted EEM from L prior draws (sample mean, L-1 covariance).
///
/// Draws whose forward solve fails are logged and replaced by fresh draws, up
/// to 10L attempts in total. With `fit_gain`, a per-component least-squares
/// slope of F on F* is fitted first and the residuals are F - gain * F*.
EemState fit_prior_eem(const ForwardPair& model, const PriorSpec& prior, std::size_t L,
                       RandomStream& rng, bool fit_gain = false);

/// Per-component least-squares slope of f_exact on f_reduced (with intercept).
/// Components with no spread in f_reduced get slope 1.
Vector fit_regression_gain(const std::vector<DataVector>& f_exact,
                           const std::vector<DataVector>& f_reduced);

/// Absorb one residual.
///
/// zero_mean: sigma_{n} = [(n-2) sigma_{n-1} + b b^T] / (n-1) with mu_b pinned
/// at zero, i.e. sigma_n = sum_k b_k b_k^T / (n-1) once n >= 3.
/// Otherwise: single-pass mean / unbiased covariance, equal to the batch
/// estimators over all absorbed residuals.
EemState update_posterior_eem(EemState state, const Vector& b, bool zero_mean);

/// Batch estimators matching update_posterior_eem; used by tests and reports.
EemState batch_eem(const std::vector<Vector>& residuals, bool zero_mean);

/// Componentwise two-point offset-gain calibration: the calibrated map
/// gain * sim + offset reproduces both observed frames.
struct GainOffset {
  Vector gain;
  Vector offset;

  DataVector apply(const DataVector& sim) const {
    return gain.cwiseProduct(sim) + offset;
  }
};

GainOffset fit_gain_offset(const DataVector& sim_empty, const DataVector& sim_full,
                           const DataVector& obs_empty, const DataVector& obs_full);

}  // namespace rrmh
