#pragma once

#include "rrmh/core.hpp"

#include <string_view>
#include <vector>

namespace rrmh {

enum class ProposalKind { am, gcam };

std::string_view to_string(ProposalKind kind);
ProposalKind parse_proposal_kind(std::string_view s);

struct ProposalGroup {
  std::vector<Index> indices;
  /// Steering multiplier on the group covariance, in log space.
  double log_scale = 0.0;
  std::size_t proposals = 0;
  std::size_t accepts = 0;
};

/// Adaptive random-walk proposal state.
///
/// For step_count n <= 2d the proposal is N(x, 0.1^2/d_g I); afterwards
/// N(x, (1-eps) 2.38^2/d_g Sigma_n + eps 0.1^2/d_g I) restricted to one
/// group g, with the group's covariance multiplied by exp(log_scale_g).
/// A single group spanning all components with log_scale 0 is plain AM.
struct ProposalState {
  ProposalKind kind = ProposalKind::am;
  Vector emp_mean;
  Matrix emp_cov;
  std::size_t samples = 0;
  double scale_main = 0.0;
  double scale_floor = 0.0;
  double mix_eps = 0.05;
  std::vector<ProposalGroup> groups;
  std::size_t step_count = 0;
  double target_acceptance = 0.13;
  bool steer = false;
  /// Most recent change of a group's log_scale (diminishing-adaptation trace).
  double last_log_scale_delta = 0.0;

  static ProposalState am(const ParameterVector& x0, double mix_eps = 0.05);
  static ProposalState gcam(const ParameterVector& x0, std::vector<std::vector<Index>> groups,
                            double target_acceptance = 0.13, double mix_eps = 0.05);

  Index dim() const { return emp_mean.size(); }
  void validate() const;

  /// Proposal covariance of group g (size d_g x d_g).
  Matrix group_covariance(std::size_t g) const;
  /// Full proposal covariance for a single-group state.
  Matrix covariance() const;
};

/// A random-walk increment (zero outside the chosen group).
struct ProposalDraw {
  std::size_t group = 0;
  Vector increment;
};

ProposalDraw draw_increment(const ProposalState& proposal, RandomStream& rng);

/// y ~ q_n(. | x) using the AM formula.
ParameterVector am_propose(const ProposalState& proposal, const ParameterVector& x,
                           RandomStream& rng);

/// Absorb a new chain state into the empirical moments and advance step_count.
ProposalState am_update(ProposalState proposal, const ParameterVector& x_new);

/// am_update plus, for GCAM, steering the proposing group's scale toward the
/// target acceptance: log_scale += n^-0.6 (accepted - target).
ProposalState gcam_update(ProposalState proposal, const ParameterVector& x_new, std::size_t group,
                          bool accepted);

/// Dispatches on kind.
ProposalState adapt_proposal(ProposalState proposal, const ParameterVector& x_new,
                             std::size_t group, bool accepted);

/// Steering step size n^-0.6.
double steering_rate(std::size_t n);

}  // namespace rrmh
