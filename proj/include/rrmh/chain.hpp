#pragma once

#include "rrmh/config.hpp"
#include "rrmh/diagnostics.hpp"
#include "rrmh/samplers.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rrmh {

struct ChainRow {
  ParameterVector x;
  /// Exact log-posterior of the current state, present when F was evaluated this step.
  std::optional<double> log_post;
  /// Log-likelihood of the current state (always known).
  double log_lik = kNegInf;
  StepOutcome outcome;
  std::optional<ParameterVector> shadow_x;
};

/// Per-absorption trace of the error model.
struct EemTracePoint {
  std::size_t step = 0;
  std::size_t count = 0;
  double sigma_change = 0.0;  // ||Sigma_{n} - Sigma_{n-1}||_F
  double residual_sq = 0.0;   // ||b||^2
};

struct ChainRecord {
  std::string name;
  std::string config_hash;
  SamplerKind sampler = SamplerKind::mh;
  ApproxSpec approx;
  Index dim = 0;
  /// steps + 1 rows; row 0 is the initial state.
  std::vector<ChainRow> rows;
  std::size_t burn_in_rows = 0;

  EemState final_eem;
  EemState initial_eem;
  ProposalState final_proposal;
  std::uint64_t rng_counter = 0;

  std::uint64_t exact_calls = 0;
  std::uint64_t reduced_calls = 0;
  std::uint64_t shadow_exact_calls = 0;
  std::uint64_t shadow_reduced_calls = 0;
  std::uint64_t prior_fit_exact_calls = 0;

  std::vector<EemTracePoint> eem_trace;
  /// |change of a GCAM log scale| and the step_count it was applied at.
  std::vector<std::pair<std::size_t, double>> scale_trace;
  /// B_{x_{n-1}}(x_n) at stage-2 accepted transitions, with their step index.
  std::vector<std::pair<std::size_t, Vector>> accepted_residuals;

  std::optional<std::string> error;

  std::size_t steps() const { return rows.empty() ? 0 : rows.size() - 1; }
  std::size_t stage1_accepts() const;
  /// Step flags after burn-in.
  std::vector<StepFlags> flags(bool after_burn_in = true) const;
  /// Component i of x (or of the shadow chain) after burn-in.
  std::vector<double> component(Index i, bool shadow = false, bool after_burn_in = true) const;
  std::vector<double> log_lik_series(bool after_burn_in = true) const;
};

/// Execute one configured experiment. Deterministic given (config, seed).
/// A SolverError mid-run ends the chain early with `error` set.
ChainRecord run_chain(const ExperimentConfig& cfg);
ChainRecord run_chain(const ExperimentConfig& cfg, const models::Problem& problem);

/// Chain CSV: step, x0.., log_post, log_lik, stage1_accepted, stage2_evaluated,
/// stage2_accepted, alpha, beta, t_reduced_ns, t_exact_ns[, shadow_x0..].
void write_chain_csv(const ChainRecord& record, const std::string& path, bool timings = true);

/// State snapshot: proposal moments, error model, rng counter, call counts.
nlohmann::json state_json(const ChainRecord& record);
void write_state_json(const ChainRecord& record, const std::string& path);

nlohmann::json eem_to_json(const EemState& eem);
EemState eem_from_json(const nlohmann::json& j);

/// Chain file contents as read back from disk.
struct ChainTable {
  std::string path;
  Index dim = 0;
  bool has_shadow = false;
  std::vector<ChainRow> rows;
  /// Sampler inferred from the rows: "mh" when stage 2 is never evaluated.
  bool any_stage2 = false;
};

/// Throws FormatError naming the file and line on malformed input.
ChainTable read_chain_csv(const std::string& path);

}  // namespace rrmh
