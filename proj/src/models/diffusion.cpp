#include "rrmh/models/diffusion.hpp"

#include <cmath>
#include <numbers>

namespace rrmh::models {

namespace {

/// Tridiagonal system with fixed coefficients, pre-eliminated (Thomas).
class Tridiagonal {
 public:
  Tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    const std::size_t n = diag.size();
    inv_pivot_.resize(n);
    c_.resize(n);
    double piv = diag[0];
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) piv = diag[i] - lower_[i] * c_[i - 1];
      if (!(piv > 0.0) || !std::isfinite(piv)) throw SolverError("diffusion: singular time-step matrix");
      inv_pivot_[i] = 1.0 / piv;
      c_[i] = i + 1 < n ? upper_[i] * inv_pivot_[i] : 0.0;
    }
  }

  void solve(std::vector<double>& rhs) const {
    const std::size_t n = rhs.size();
    rhs[0] *= inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i) rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) * inv_pivot_[i];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c_[i] * rhs[i + 1];
  }

 private:
  std::vector<double> lower_, upper_, inv_pivot_, c_;
};

}  // namespace

DataVector diffusion_solve(const ParameterVector& x, const DiffusionGrid& grid,
                           const DiffusionOptions& opts) {
  require_dim(x.size(), opts.n_basis, "diffusion parameter");
  require_finite(x, "diffusion parameter");
  const int n = grid.cells;
  if (n < 2 || grid.steps_per_interval < 1) throw Error("diffusion: invalid grid");
  const double h = 1.0 / n;
  const double pi = std::numbers::pi;

  std::vector<double> k(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) * h;
    double logk = 0.0;
    for (int j = 0; j < opts.n_basis; ++j) logk += x[j] * std::cos(j * pi * s) / (j + 1.0);
    k[static_cast<std::size_t>(i)] = std::exp(logk);
  }

  // Face transmissibilities T_{i+1/2}; boundary faces sit h/2 from the centres.
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  t[0] = 2.0 * k[0] / h;
  t[static_cast<std::size_t>(n)] = 2.0 * k[static_cast<std::size_t>(n) - 1] / h;
  for (int i = 1; i < n; ++i) {
    const double a = k[static_cast<std::size_t>(i) - 1], b = k[static_cast<std::size_t>(i)];
    t[static_cast<std::size_t>(i)] = 2.0 * a * b / (a + b) / h;
  }

  const double dt = opts.obs_interval / grid.steps_per_interval;
  // (c h / dt) u^{n+1} + A u^{n+1} = rhs; c = 1 (Euler) or 3/2 (BDF2).
  auto make_system = [&](double c) {
    std::vector<double> lo(static_cast<std::size_t>(n), 0.0), di(static_cast<std::size_t>(n)),
        up(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      di[u] = c * h / dt + t[u] + t[u + 1];
      if (i > 0) lo[u] = -t[u];
      if (i + 1 < n) up[u] = -t[u + 1];
    }
    return Tridiagonal(std::move(lo), std::move(di), std::move(up));
  };
  const Tridiagonal euler = make_system(1.0);
  const Tridiagonal bdf2 = make_system(1.5);
  const double u_left = 1.0;  // u(0, t); u(1, t) = 0 adds nothing

  std::vector<double> u(static_cast<std::size_t>(n), 0.0), u_prev = u, rhs(u.size());
  const std::size_t ns = opts.sensors.size();
  DataVector out(static_cast<Index>(ns) * opts.n_times);

  const int total = grid.steps_per_interval * opts.n_times;
  for (int step = 1; step <= total; ++step) {
    if (step == 1) {
      for (int i = 0; i < n; ++i) rhs[static_cast<std::size_t>(i)] = h / dt * u[static_cast<std::size_t>(i)];
      rhs[0] += t[0] * u_left;
      euler.solve(rhs);
    } else {
      for (int i = 0; i < n; ++i) {
        const auto a = static_cast<std::size_t>(i);
        rhs[a] = h / dt * (2.0 * u[a] - 0.5 * u_prev[a]);
      }
      rhs[0] += t[0] * u_left;
      bdf2.solve(rhs);
    }
    u_prev.swap(u);
    u.swap(rhs);

    if (step % grid.steps_per_interval == 0) {
      const int ti = step / grid.steps_per_interval - 1;
      for (std::size_t si = 0; si < ns; ++si) {
        // Linear interpolation between cell centres (boundary values at the ends).
        const double s = opts.sensors[si];
        const double pos = s / h - 0.5;
        double val;
        if (pos <= 0.0) {
          val = u_left + (u[0] - u_left) * (s / (0.5 * h));
        } else if (pos >= n - 1) {
          val = u[static_cast<std::size_t>(n) - 1] * ((1.0 - s) / (0.5 * h));
        } else {
          const auto i0 = static_cast<std::size_t>(pos);
          const double w = pos - static_cast<double>(i0);
          val = (1.0 - w) * u[i0] + w * u[i0 + 1];
        }
        out[static_cast<Index>(ti) * static_cast<Index>(ns) + static_cast<Index>(si)] = val;
      }
    }
  }
  if (!out.allFinite()) throw SolverError("diffusion: non-finite solution");
  return out;
}

double diffusion_unit_series(double s, double t, int terms) {
  const double pi = std::numbers::pi;
  double u = 1.0 - s;
  for (int n = 1; n <= terms; ++n) {
    u -= 2.0 / (n * pi) * std::sin(n * pi * s) * std::exp(-n * n * pi * pi * t);
  }
  return u;
}

DiffusionModel::DiffusionModel(DiffusionOptions opts) : opts_(std::move(opts)) {
  if (opts_.n_basis < 1) throw Error("diffusion: need at least one basis function");
  if (opts_.sensors.empty() || opts_.n_times < 1) throw Error("diffusion: no observations");
  for (double s : opts_.sensors) {
    if (!(s > 0.0 && s < 1.0)) throw Error("diffusion: sensors must be interior");
  }
  if (opts_.fine.cells % opts_.coarse.cells != 0) {
    throw Error("diffusion: coarse cell count must divide the fine cell count");
  }
}

Index DiffusionModel::data_dim() const {
  return static_cast<Index>(opts_.sensors.size()) * opts_.n_times;
}

DataVector DiffusionModel::exact(const ParameterVector& x) const {
  return diffusion_solve(x, opts_.fine, opts_);
}

DataVector DiffusionModel::reduced(const ParameterVector& x) const {
  return diffusion_solve(x, opts_.coarse, opts_);
}

}  // namespace rrmh::models
