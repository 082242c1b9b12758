#pragma once

#include "rrmh/models/registry.hpp"
#include "rrmh/proposal.hpp"
#include "rrmh/target.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace rrmh {

enum class SamplerKind { mh, da, ada };

std::string_view to_string(SamplerKind kind);

struct ProposalConfig {
  ProposalKind kind = ProposalKind::am;
  /// GCAM groups; empty means one group over all components.
  std::vector<std::vector<Index>> groups;
  double target_acceptance = 0.13;
  double mix_eps = 0.05;
  bool adapt = true;
  /// Adaptation (proposal and EEM) stops from this step on.
  std::optional<std::size_t> adapt_until;
};

/// One experiment. See README for the JSON schema.
struct ExperimentConfig {
  std::string name = "run";
  models::ModelConfig model;
  SamplerKind sampler = SamplerKind::mh;
  ApproxSpec approx;
  ProposalConfig proposal;
  std::size_t steps = 1000;
  double burn_in = 0.2;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  /// Prior draws for a prior-fitted error model.
  std::optional<std::size_t> prior_eem_draws;
  /// Also simulate the stage-2-skipping chain (DA/ADA only).
  bool shadow = false;
  /// Write wall-clock timings into the chain file. Off gives byte-identical reruns.
  bool record_timings = true;
  std::optional<ParameterVector> init;
  /// Test hook: the exact map fails after this many calls.
  std::optional<std::uint64_t> fail_after_exact_calls;

  /// The JSON this config was parsed from, with defaults filled in.
  nlohmann::json canonical;
};

/// Parse and validate; throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);

/// A plain config yields one entry. A config with a "suite" array yields one
/// entry per element, each merge-patched over the base (without "suite").
std::vector<ExperimentConfig> parse_suite(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);

/// FNV-1a 64-bit of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& canonical);

}  // namespace rrmh
