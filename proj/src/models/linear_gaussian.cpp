#include "rrmh/models/linear_gaussian.hpp"

#include <Eigen/Cholesky>

namespace rrmh::models {

LinearGaussianModel::LinearGaussianModel(const LinearGaussianOptions& opts) {
  if (opts.d <= 0 || opts.m <= 0) throw DimensionError("linear_gaussian: d and m must be positive");
  RandomStream rng(opts.seed);
  a_.resize(opts.m, opts.d);
  a_star_.resize(opts.m, opts.d);
  for (Index j = 0; j < opts.d; ++j) {
    for (Index i = 0; i < opts.m; ++i) a_(i, j) = rng.normal();
  }
  for (Index j = 0; j < opts.d; ++j) {
    for (Index i = 0; i < opts.m; ++i) a_star_(i, j) = a_(i, j) * (1.0 + opts.rel_error * rng.normal());
  }
}

LinearGaussianModel::LinearGaussianModel(Matrix a, Matrix a_star)
    : a_(std::move(a)), a_star_(std::move(a_star)) {
  if (a_.rows() != a_star_.rows() || a_.cols() != a_star_.cols()) {
    throw DimensionError("linear_gaussian: A and A* shapes differ");
  }
}

DataVector LinearGaussianModel::exact(const ParameterVector& x) const {
  require_dim(x.size(), a_.cols(), "linear_gaussian parameter");
  return a_ * x;
}

DataVector LinearGaussianModel::reduced(const ParameterVector& x) const {
  require_dim(x.size(), a_star_.cols(), "linear_gaussian parameter");
  return a_star_ * x;
}

GaussianPosterior conjugate_posterior(const Matrix& a, const Matrix& noise_cov,
                                      const DataVector& d_obs, const Vector& prior_mean,
                                      const Matrix& prior_cov) {
  const Eigen::LLT<Matrix> ne(noise_cov);
  const Eigen::LLT<Matrix> pr(prior_cov);
  const Index d = a.cols();
  const Matrix prec = a.transpose() * ne.solve(a) + pr.solve(Matrix::Identity(d, d));
  const Eigen::LLT<Matrix> pl(prec);
  GaussianPosterior post;
  post.covariance = pl.solve(Matrix::Identity(d, d));
  post.mean = pl.solve(a.transpose() * ne.solve(d_obs) + pr.solve(prior_mean));
  return post;
}

}  // namespace rrmh::models
