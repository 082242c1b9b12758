#pragma once

#include "rrmh/forward_pair.hpp"
#include "rrmh/models/linear_gaussian.hpp"
#include "rrmh/target.hpp"

#include <memory>

namespace testing {

using namespace rrmh;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// F = F* = identity on R^d.
inline std::shared_ptr<const ForwardModel> identity_model(Index d) {
  auto f = [](const ParameterVector& x) -> DataVector { return x; };
  return std::make_shared<FunctionForwardModel>(d, d, f, f, "identity");
}

/// Same map at both levels, chosen by the caller.
inline std::shared_ptr<const ForwardModel> same_model(Index d, Index m, FunctionForwardModel::Map f) {
  return std::make_shared<FunctionForwardModel>(d, m, f, f, "same");
}

inline std::shared_ptr<const models::LinearGaussianModel> linear_model() {
  return std::make_shared<models::LinearGaussianModel>(models::LinearGaussianOptions{});
}

inline double rel_diff(double a, double b) {
  const double s = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / s;
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double s = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / s;
}

}  // namespace testing
