#pragma once

#include "rrmh/chain.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace rrmh {

struct ReportOptions {
  double burn_in = 0.2;
  /// Index into the chain list of the MH baseline, if any.
  std::optional<std::size_t> baseline;
  /// Externally supplied costs (any common unit) overriding measured medians.
  std::optional<double> t_star;
  std::optional<double> t;
  std::size_t acf_lags = 200;
  std::size_t thin = 10;
  std::size_t bins = 30;
  /// Where plot-ready CSVs go; none written when empty.
  std::string artifact_dir;
};

/// Summaries per chain plus pairwise speedups against the baseline. Every
/// number is computed from the chain tables alone.
nlohmann::json make_report(const std::vector<ChainTable>& chains, const ReportOptions& opts);

/// Fixed-width text table of the report (one row per chain).
std::string report_table(const nlohmann::json& report);

}  // namespace rrmh
