#pragma once

#include "rrmh/forward_pair.hpp"

#include <cstdint>

namespace rrmh::models {

struct LinearGaussianOptions {
  Index d = 4;
  Index m = 6;
  /// Elementwise relative perturbation of A used for the reduced matrix.
  double rel_error = 0.1;
  std::uint64_t seed = 7;
};

/// F(x) = A x, F*(x) = A* x with A* = A .* (1 + rel_error Z), Z iid N(0,1).
class LinearGaussianModel final : public ForwardModel {
 public:
  explicit LinearGaussianModel(const LinearGaussianOptions& opts = {});
  LinearGaussianModel(Matrix a, Matrix a_star);

  Index param_dim() const override { return a_.cols(); }
  Index data_dim() const override { return a_.rows(); }
  DataVector exact(const ParameterVector& x) const override;
  DataVector reduced(const ParameterVector& x) const override;
  std::string name() const override { return "linear_gaussian"; }

  const Matrix& a() const { return a_; }
  const Matrix& a_star() const { return a_star_; }

 private:
  Matrix a_, a_star_;
};

/// Conjugate posterior for y = A x + e, x ~ N(m0, S0), e ~ N(0, Se).
struct GaussianPosterior {
  Vector mean;
  Matrix covariance;
};

GaussianPosterior conjugate_posterior(const Matrix& a, const Matrix& noise_cov,
                                      const DataVector& d_obs, const Vector& prior_mean,
                                      const Matrix& prior_cov);

}  // namespace rrmh::models
