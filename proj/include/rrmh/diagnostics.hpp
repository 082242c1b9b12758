#pragma once

#include "rrmh/core.hpp"

#include <chrono>
#include <optional>
#include <span>
#include <vector>

namespace rrmh {

struct IactResult {
  double tau = 1.0;
  /// Summation window M actually used.
  std::size_t window = 0;
  /// Series was constant; tau set to 1 by convention.
  bool degenerate = false;
};

/// Integrated autocorrelation time with Sokal's adaptive window: the sum
/// 1 + 2 sum_{i<=M} rho(i) stops at the smallest M with M >= c tau(M).
/// Throws InsufficientDataError for fewer than 100 values.
IactResult iact(std::span<const double> series, double c = 6.0);

/// Normalized autocorrelation for lags 0..max_lag.
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);

/// n / tau; tau below 1 is clamped to 1 with a warning.
double ess(double n, double tau);

struct SeriesStats {
  double mean = 0.0;
  double iact = 1.0;
  double ess = 0.0;
  double mc_stderr = 0.0;
  std::size_t n_used = 0;
  bool degenerate = false;
};

/// Sample mean with Monte Carlo standard error sqrt(tau Var / N).
SeriesStats mc_estimate(std::span<const double> samples);

struct AcceptanceSummary {
  double alpha_bar = 0.0;
  /// Stage-2 acceptance frequency among promoted proposals; empty if none.
  std::optional<double> beta_bar;
  /// Mean of the stage-2 acceptance probabilities; empty if none.
  std::optional<double> beta_mean_prob;
  std::size_t steps = 0;
  std::size_t promoted = 0;
};

/// Per-step flags needed by acceptance_summary.
struct StepFlags {
  bool stage1_accepted = false;
  bool stage2_evaluated = false;
  bool stage2_accepted = false;
  std::optional<double> beta;
};

AcceptanceSummary acceptance_summary(std::span<const StepFlags> steps);

/// (tau_mh / tau_da) / (alpha_bar + t_star / t).
double speedup(double tau_mh, double tau_da, double alpha_bar, double t_star, double t);
double speedup(double tau_mh, double tau_da, double alpha_bar, std::chrono::nanoseconds t_star,
               std::chrono::nanoseconds t);

/// One row of the exact-vs-skipping comparison.
struct EstimateComparison {
  SeriesStats exact;
  SeriesStats approx;
  double gap = 0.0;
  double combined_stderr = 0.0;
  /// |gap| / combined_stderr (0 when both are zero).
  double z = 0.0;
};

/// Compare the mean of a statistic over the realized chain with the mean over
/// the stage-2-skipping shadow chain.
EstimateComparison compare_estimates(std::span<const double> realized,
                                     std::span<const double> shadow);

/// Fixed-width histogram of a sample: returns bin edges (bins+1) and counts.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};
Histogram histogram(std::span<const double> samples, std::size_t bins);

}  // namespace rrmh
