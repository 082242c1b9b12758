#include "rrmh/diagnostics.hpp"

#include "rrmh/log.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace rrmh {

namespace {

double series_mean(std::span<const double> s) {
  // Compensated sum.
  double sum = 0.0, comp = 0.0;
  for (double v : s) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(s.size());
}

// Unnormalized autocovariance sums s_k = sum_i c_i c_{i+k} for k <= max_lag,
// via a zero-padded FFT so long chains cost O(n log n).
std::vector<double> autocov_sums(const std::vector<double>& c, std::size_t max_lag) {
  const std::size_t n = c.size();
  std::size_t len = 1;
  while (len < 2 * n) len <<= 1;
  std::vector<double> padded(len, 0.0);
  std::copy(c.begin(), c.end(), padded.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);
  for (auto& z : spec) z = std::norm(z);
  std::vector<double> back;
  fft.inv(back, spec);
  back.resize(std::min(max_lag, n - 1) + 1);
  return back;
}

}  // namespace

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n == 0) throw InsufficientDataError("acf: empty series");
  max_lag = std::min(max_lag, n - 1);
  const double mu = series_mean(series);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = series[i] - mu;
  double c0 = 0.0;
  for (double v : c) c0 += v * v;
  std::vector<double> rho(max_lag + 1, 0.0);
  if (c0 == 0.0) {
    rho[0] = 1.0;
    return rho;
  }
  const std::vector<double> sums = autocov_sums(c, max_lag);
  for (std::size_t k = 0; k <= max_lag; ++k) rho[k] = sums[k] / sums[0];
  return rho;
}

IactResult iact(std::span<const double> series, double c) {
  const std::size_t n = series.size();
  if (n < 100) {
    throw InsufficientDataError("iact: need at least 100 values, got " + std::to_string(n));
  }
  const double mu = series_mean(series);
  std::vector<double> centered(n);
  double c0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = series[i] - mu;
    c0 += centered[i] * centered[i];
  }
  IactResult r;
  if (c0 == 0.0 || !std::isfinite(c0)) {
    r.degenerate = true;
    return r;
  }
  const std::vector<double> sums = autocov_sums(centered, n - 1);
  double tau = 1.0;
  std::size_t m = 0;
  while (m + 1 < n) {
    ++m;
    tau += 2.0 * sums[m] / sums[0];
    if (static_cast<double>(m) >= c * tau) break;
  }
  r.tau = tau;
  r.window = m;
  return r;
}

double ess(double n, double tau) {
  if (n < 0.0) throw Error("ess: negative sample count");
  if (!(tau >= 1.0)) {
    log_warning("ess: tau " + std::to_string(tau) + " below 1, clamped");
    tau = 1.0;
  }
  return n / tau;
}

SeriesStats mc_estimate(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n == 0) throw InsufficientDataError("mc_estimate: no samples");
  SeriesStats s;
  s.n_used = n;
  s.mean = series_mean(samples);
  double var = 0.0;
  for (double v : samples) var += (v - s.mean) * (v - s.mean);
  var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
  if (var == 0.0) {
    s.degenerate = true;
    s.ess = static_cast<double>(n);
    return s;
  }
  const IactResult t = iact(samples);
  s.iact = std::max(1.0, t.tau);
  s.degenerate = t.degenerate;
  s.ess = ess(static_cast<double>(n), s.iact);
  s.mc_stderr = std::sqrt(s.iact * var / static_cast<double>(n));
  return s;
}

AcceptanceSummary acceptance_summary(std::span<const StepFlags> steps) {
  if (steps.empty()) throw InsufficientDataError("acceptance_summary: empty record");
  AcceptanceSummary a;
  a.steps = steps.size();
  std::size_t s1 = 0, s2 = 0;
  double beta_sum = 0.0;
  std::size_t beta_n = 0;
  for (const auto& f : steps) {
    if (f.stage1_accepted) ++s1;
    if (f.stage2_evaluated) {
      ++a.promoted;
      if (f.stage2_accepted) ++s2;
      if (f.beta) {
        beta_sum += *f.beta;
        ++beta_n;
      }
    }
  }
  a.alpha_bar = static_cast<double>(s1) / static_cast<double>(a.steps);
  if (a.promoted > 0) a.beta_bar = static_cast<double>(s2) / static_cast<double>(a.promoted);
  if (beta_n > 0) a.beta_mean_prob = beta_sum / static_cast<double>(beta_n);
  return a;
}

double speedup(double tau_mh, double tau_da, double alpha_bar, double t_star, double t) {
  if (!(tau_mh > 0 && tau_da > 0 && alpha_bar >= 0 && t_star >= 0 && t > 0)) {
    throw Error("speedup: inputs must be positive");
  }
  return (tau_mh / tau_da) / (alpha_bar + t_star / t);
}

double speedup(double tau_mh, double tau_da, double alpha_bar, std::chrono::nanoseconds t_star,
               std::chrono::nanoseconds t) {
  return speedup(tau_mh, tau_da, alpha_bar, static_cast<double>(t_star.count()),
                 static_cast<double>(t.count()));
}

EstimateComparison compare_estimates(std::span<const double> realized,
                                     std::span<const double> shadow) {
  if (shadow.empty()) throw InsufficientDataError("compare_estimates: shadow chain not logged");
  EstimateComparison c;
  c.exact = mc_estimate(realized);
  c.approx = mc_estimate(shadow);
  c.gap = c.approx.mean - c.exact.mean;
  c.combined_stderr = std::hypot(c.exact.mc_stderr, c.approx.mc_stderr);
  if (c.combined_stderr > 0.0) {
    c.z = std::abs(c.gap) / c.combined_stderr;
  } else {
    c.z = c.gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return c;
}

Histogram histogram(std::span<const double> samples, std::size_t bins) {
  if (samples.empty() || bins == 0) throw InsufficientDataError("histogram: no data");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  h.counts.assign(bins, 0);
  for (double v : samples) {
    auto k = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    ++h.counts[std::min(k, bins - 1)];
  }
  return h;
}

}  // namespace rrmh
