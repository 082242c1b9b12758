#include "rrmh/eem.hpp"

#include "rrmh/log.hpp"
#include "rrmh/target.hpp"

#include <cmath>

namespace rrmh {

EemState EemState::identity(Index m) {
  EemState s;
  s.mu_b = Vector::Zero(m);
  s.sigma_b = Matrix::Zero(m, m);
  s.gain = Vector::Ones(m);
  return s;
}

bool EemState::is_valid(double tol) const {
  const Index m = mu_b.size();
  if (sigma_b.rows() != m || sigma_b.cols() != m || gain.size() != m) return false;
  if (!mu_b.allFinite() || !sigma_b.allFinite() || !gain.allFinite()) return false;
  if ((gain.array() == 0.0).any()) return false;
  const double scale = std::max(1.0, sigma_b.cwiseAbs().maxCoeff());
  if ((sigma_b - sigma_b.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  if (count == 0 && (mu_b.any() || sigma_b.any())) return false;
  if (m > 0 && sigma_b.any()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma_b, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol * scale) return false;
  }
  return true;
}

Vector residual(const ParameterVector& x, const ForwardPair& model) {
  const DataVector fe = model.exact(x);
  const DataVector fr = model.reduced(x);
  return fe - fr;
}

DataVector local_correct(const DataVector& f_reduced_y, const CorrectionAnchor& anchor) {
  require_dim(anchor.f_reduced.size(), anchor.f_exact.size(), "correction anchor");
  require_dim(f_reduced_y.size(), anchor.f_exact.size(), "reduced output");
  return f_reduced_y + (anchor.f_exact - anchor.f_reduced);
}

EemState fit_prior_eem(const ForwardPair& model, const PriorSpec& prior, std::size_t L,
                       RandomStream& rng, bool fit_gain) {
  if (L < 2) throw Error("fit_prior_eem: need at least 2 prior draws");
  std::vector<DataVector> fe, fr;
  fe.reserve(L);
  fr.reserve(L);
  const std::size_t max_attempts = 10 * L;
  std::size_t attempts = 0;
  while (fe.size() < L && attempts < max_attempts) {
    ++attempts;
    const ParameterVector x = prior.sample(rng);
    try {
      DataVector e = model.exact(x);
      DataVector r = model.reduced(x);
      fe.push_back(std::move(e));
      fr.push_back(std::move(r));
    } catch (const SolverError& e) {
      log_warning(std::string("fit_prior_eem: skipping failed prior draw: ") + e.what());
    }
  }
  if (fe.size() < L) {
    throw SolverError("fit_prior_eem: too many solver failures (" + std::to_string(attempts) +
                      " attempts for " + std::to_string(L) + " draws)");
  }
  const Vector gain = fit_gain ? fit_regression_gain(fe, fr) : Vector::Ones(fe.front().size());
  std::vector<Vector> residuals;
  residuals.reserve(L);
  for (std::size_t i = 0; i < L; ++i) residuals.push_back(fe[i] - gain.cwiseProduct(fr[i]));
  EemState s = batch_eem(residuals, false);
  s.gain = gain;
  return s;
}

Vector fit_regression_gain(const std::vector<DataVector>& f_exact,
                           const std::vector<DataVector>& f_reduced) {
  if (f_exact.size() != f_reduced.size() || f_exact.size() < 2) {
    throw InsufficientDataError("fit_regression_gain: need at least 2 paired outputs");
  }
  const Index m = f_exact.front().size();
  const double n = static_cast<double>(f_exact.size());
  Vector me = Vector::Zero(m), mr = Vector::Zero(m);
  for (std::size_t i = 0; i < f_exact.size(); ++i) {
    me += f_exact[i];
    mr += f_reduced[i];
  }
  me /= n;
  mr /= n;
  Vector sxy = Vector::Zero(m), sxx = Vector::Zero(m);
  for (std::size_t i = 0; i < f_exact.size(); ++i) {
    const Vector dr = f_reduced[i] - mr;
    sxy += dr.cwiseProduct(f_exact[i] - me);
    sxx += dr.cwiseProduct(dr);
  }
  Vector g(m);
  for (Index k = 0; k < m; ++k) {
    g[k] = sxx[k] > 0.0 ? sxy[k] / sxx[k] : 1.0;
    if (g[k] == 0.0 || !std::isfinite(g[k])) g[k] = 1.0;
  }
  return g;
}

EemState update_posterior_eem(EemState state, const Vector& b, bool zero_mean) {
  const Index m = b.size();
  if (state.mu_b.size() == 0 && state.count == 0) state = EemState::identity(m);
  require_dim(m, state.dim(), "residual");
  require_finite(b, "residual");
  const std::size_t n = state.count + 1;
  const double nd = static_cast<double>(n);

  if (zero_mean) {
    state.mu_b.setZero();
    if (n < 3) {
      state.pending.push_back(b);
      state.sigma_b.setZero();
    } else if (n == 3) {
      Matrix s = b * b.transpose();
      for (const auto& p : state.pending) s += p * p.transpose();
      state.sigma_b = s / 2.0;
      state.pending.clear();
    } else {
      state.sigma_b = ((nd - 2.0) * state.sigma_b + b * b.transpose()) / (nd - 1.0);
    }
  } else {
    const Vector delta = b - state.mu_b;
    state.mu_b += delta / nd;
    if (n == 1) {
      state.sigma_b.setZero();
    } else {
      state.sigma_b = state.sigma_b * ((nd - 2.0) / (nd - 1.0)) + (delta * delta.transpose()) / nd;
    }
  }
  state.count = n;
  return state;
}

EemState batch_eem(const std::vector<Vector>& residuals, bool zero_mean) {
  if (residuals.empty()) throw InsufficientDataError("batch_eem: no residuals");
  const Index m = residuals.front().size();
  EemState s = EemState::identity(m);
  const std::size_t n = residuals.size();
  s.count = n;
  if (zero_mean) {
    if (n < 3) {
      s.pending = residuals;
      return s;
    }
    for (const auto& b : residuals) s.sigma_b += b * b.transpose();
    s.sigma_b /= static_cast<double>(n - 1);
    return s;
  }
  for (const auto& b : residuals) s.mu_b += b;
  s.mu_b /= static_cast<double>(n);
  if (n >= 2) {
    for (const auto& b : residuals) {
      const Vector r = b - s.mu_b;
      s.sigma_b += r * r.transpose();
    }
    s.sigma_b /= static_cast<double>(n - 1);
  }
  return s;
}

GainOffset fit_gain_offset(const DataVector& sim_empty, const DataVector& sim_full,
                           const DataVector& obs_empty, const DataVector& obs_full) {
  const Index m = sim_empty.size();
  require_dim(sim_full.size(), m, "sim_full");
  require_dim(obs_empty.size(), m, "obs_empty");
  require_dim(obs_full.size(), m, "obs_full");
  GainOffset g{Vector(m), Vector(m)};
  for (Index i = 0; i < m; ++i) {
    const double den = sim_full[i] - sim_empty[i];
    if (den == 0.0 || !std::isfinite(den)) {
      throw CalibrationError(i, "calibration degenerate at component " + std::to_string(i) +
                                    ": simulated frames coincide");
    }
    g.gain[i] = (obs_full[i] - obs_empty[i]) / den;
    g.offset[i] = (obs_empty[i] * sim_full[i] - obs_full[i] * sim_empty[i]) / den;
    if (!std::isfinite(g.gain[i]) || !std::isfinite(g.offset[i])) {
      throw CalibrationError(i, "calibration non-finite at component " + std::to_string(i));
    }
  }
  return g;
}

}  // namespace rrmh
