#pragma once

#include "rrmh/eem.hpp"
#include "rrmh/proposal.hpp"
#include "rrmh/target.hpp"

#include <chrono>
#include <functional>
#include <optional>

namespace rrmh {

/// Everything needed to evaluate the exact posterior through an instrumented
/// forward pair. Non-owning.
struct PosteriorView {
  const ForwardPair& model;
  const NoiseModel& noise;
  const PriorSpec& prior;
  const DataVector& d_obs;
};

/// Current chain state with cached forward outputs (recomputed on acceptance only).
struct ChainState {
  ParameterVector x;
  double log_post = kNegInf;
  double log_lik = kNegInf;
  DataVector f_exact;
  DataVector f_reduced;

  CorrectionAnchor anchor() const { return {x, f_exact, f_reduced}; }
};

/// Evaluate F (and F* when `with_reduced`) at x0.
ChainState initial_state(const ParameterVector& x0, const PosteriorView& view, bool with_reduced);

struct StepOutcome {
  bool stage1_accepted = false;
  bool stage2_evaluated = false;
  bool stage2_accepted = false;
  /// Stage-1 acceptance probability (the MH acceptance probability for MH).
  double alpha = 0.0;
  std::optional<double> beta;
  std::chrono::nanoseconds t_reduced{0};
  std::optional<std::chrono::nanoseconds> t_exact;
  std::size_t group = 0;
  /// The chain moved to the proposal.
  bool moved = false;
};

/// Randomness consumed by one step: proposal increment and two uniforms.
/// Every kernel draws all of it every step, so coupled chains stay aligned.
struct StepRandomness {
  ProposalDraw draw;
  double u1 = 0.0;
  double u2 = 0.0;
};

StepRandomness draw_step(const ProposalState& proposal, RandomStream& rng);

using ExactTarget = std::function<ExactEvaluation(const ParameterVector&)>;
using LogDensity = std::function<double(const ParameterVector&)>;

/// One Metropolis-Hastings step with a symmetric random-walk proposal.
/// Exactly one target evaluation.
std::pair<ChainState, StepOutcome> mh_step(const ChainState& state, const ExactTarget& target,
                                           const ProposalState& proposal, RandomStream& rng);
std::pair<ChainState, StepOutcome> mh_step(const ChainState& state, const LogDensity& target,
                                           const ProposalState& proposal, RandomStream& rng);
std::pair<ChainState, StepOutcome> mh_step_with(const ChainState& state, const ExactTarget& target,
                                                const StepRandomness& rnd);

/// Delayed-acceptance step, plus data the adaptive variant needs.
struct DaStep {
  ChainState state;
  StepOutcome outcome;
  ParameterVector proposal;
  /// Present when the proposal was promoted to stage 2.
  std::optional<DataVector> f_exact_y;
  std::optional<DataVector> f_reduced_y;
};

/// One delayed-acceptance step.
///
/// Stage 1 screens y with pi*_x (reduced map only). A promoted y is accepted
/// with beta = min{1, pi(y) alpha(y,x) / (pi(x) alpha(x,y))}, where the
/// reverse alpha(y,x) uses the approximation anchored at y.
std::pair<ChainState, StepOutcome> da_step(const ChainState& state, const ApproxDensity& approx,
                                           const PosteriorView& view,
                                           const ProposalState& proposal, RandomStream& rng);
DaStep da_step_with(const ChainState& state, const ApproxDensity& approx,
                    const PosteriorView& view, const StepRandomness& rnd);

/// Error-model residual for a promoted proposal: B_x(y) for the state-dependent
/// kinds, F(y) - gain * F*(y) otherwise.
Vector stage2_residual(const ApproxSpec& spec, const EemState& eem, const ChainState& from,
                       const DataVector& f_exact_y, const DataVector& f_reduced_y);

struct AdaptationSwitch {
  bool proposal = true;
  bool eem = true;
};

struct AdaStep {
  ChainState state;
  EemState eem;
  ProposalState proposal;
  StepOutcome outcome;
  std::optional<Vector> residual;
};

/// da_step, then absorb the stage-2 residual into the error model (when the
/// spec is posterior-adaptive) and update the proposal with the new state.
AdaStep ada_step(const ChainState& state, const ApproxSpec& spec, const EemState& eem,
                 const PosteriorView& view, const ProposalState& proposal, RandomStream& rng,
                 AdaptationSwitch adapt = {});
AdaStep ada_step_with(const ChainState& state, const ApproxSpec& spec, const EemState& eem,
                      const ApproxDensity& approx, const PosteriorView& view,
                      const ProposalState& proposal, const StepRandomness& rnd,
                      AdaptationSwitch adapt = {});

/// Chain that runs stage 1 only: MH on the approximate target, coupled to a
/// DA chain through shared StepRandomness.
struct ShadowState {
  ParameterVector x;
  DataVector f_reduced;
  /// F at x; maintained only for state-dependent approximations.
  DataVector f_exact;
};

ShadowState shadow_initial(const ChainState& main);
ShadowState shadow_step(const ShadowState& shadow, const ApproxDensity& approx,
                        const ForwardPair& model, const PriorSpec& prior,
                        const StepRandomness& rnd);

}  // namespace rrmh
