#pragma once

#include "rrmh/forward_pair.hpp"

#include <vector>

namespace rrmh::models {

/// Grid and time-stepping resolution of one diffusion solve.
struct DiffusionGrid {
  int cells = 256;
  /// Implicit steps between consecutive observation times.
  int steps_per_interval = 40;
};

struct DiffusionOptions {
  DiffusionGrid fine{256, 40};
  DiffusionGrid coarse{16, 10};
  int n_basis = 7;
  std::vector<double> sensors{0.25, 0.5, 0.75};
  double obs_interval = 0.02;
  int n_times = 10;
};

/// u_t = (k u_s)_s on [0,1], u(0,t) = 1, u(1,t) = 0, u(s,0) = 0, with
/// log k(s) = sum_j x_j phi_j(s), phi_j(s) = cos(j pi s) / (j + 1).
///
/// Cell-centred finite volumes with harmonic face conductivities; BDF2 in
/// time after one implicit Euler start-up step. Output is time-major:
/// index t * n_sensors + s, t = 1..n_times at multiples of obs_interval.
DataVector diffusion_solve(const ParameterVector& x, const DiffusionGrid& grid,
                           const DiffusionOptions& opts);

/// Separation-of-variables solution for k = 1 at (s, t).
double diffusion_unit_series(double s, double t, int terms = 400);

class DiffusionModel final : public ForwardModel {
 public:
  explicit DiffusionModel(DiffusionOptions opts = {});

  Index param_dim() const override { return opts_.n_basis; }
  Index data_dim() const override;
  DataVector exact(const ParameterVector& x) const override;
  DataVector reduced(const ParameterVector& x) const override;
  std::string name() const override { return "diffusion"; }

  const DiffusionOptions& options() const { return opts_; }

 private:
  DiffusionOptions opts_;
};

}  // namespace rrmh::models
