#include "rrmh/samplers.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace rrmh {

namespace {

double clamp_log_prob(double log_ratio) {
  if (std::isnan(log_ratio)) return log_ratio;
  return std::min(0.0, log_ratio);
}

double prob(double log_p) { return std::isnan(log_p) ? log_p : std::exp(log_p); }

}  // namespace

ChainState initial_state(const ParameterVector& x0, const PosteriorView& view, bool with_reduced) {
  ChainState s;
  s.x = x0;
  ExactEvaluation e = evaluate_exact(x0, view.model, view.noise, view.prior, view.d_obs);
  if (e.log_post == kNegInf) throw Error("initial state lies outside the prior support");
  s.log_post = e.log_post;
  s.log_lik = e.log_lik;
  s.f_exact = std::move(e.f_exact);
  if (with_reduced) s.f_reduced = view.model.reduced(x0);
  return s;
}

StepRandomness draw_step(const ProposalState& proposal, RandomStream& rng) {
  StepRandomness r;
  r.draw = draw_increment(proposal, rng);
  if (!r.draw.increment.allFinite()) {
    r.draw = draw_increment(proposal, rng);
    if (!r.draw.increment.allFinite()) throw NonFiniteError("proposal draw is non-finite");
  }
  r.u1 = rng.uniform();
  r.u2 = rng.uniform();
  return r;
}

// ---------------------------------------------------------------- MH

std::pair<ChainState, StepOutcome> mh_step_with(const ChainState& state, const ExactTarget& target,
                                                const StepRandomness& rnd) {
  StepOutcome out;
  out.group = rnd.draw.group;
  const ParameterVector y = state.x + rnd.draw.increment;
  ExactEvaluation e = target(y);
  if (e.f_exact.size() > 0) out.t_exact = e.elapsed;
  const double log_alpha = clamp_log_prob(e.log_post - state.log_post);
  if (std::isnan(log_alpha)) throw NonFiniteError("mh_step: acceptance ratio is NaN");
  out.alpha = prob(log_alpha);
  if (rnd.u1 < out.alpha) {
    out.stage1_accepted = true;
    out.moved = true;
    ChainState next;
    next.x = y;
    next.log_post = e.log_post;
    next.log_lik = e.log_lik;
    next.f_exact = std::move(e.f_exact);
    return {std::move(next), out};
  }
  return {state, out};
}

std::pair<ChainState, StepOutcome> mh_step(const ChainState& state, const ExactTarget& target,
                                           const ProposalState& proposal, RandomStream& rng) {
  return mh_step_with(state, target, draw_step(proposal, rng));
}

std::pair<ChainState, StepOutcome> mh_step(const ChainState& state, const LogDensity& target,
                                           const ProposalState& proposal, RandomStream& rng) {
  ExactTarget wrapped = [&](const ParameterVector& y) {
    ExactEvaluation e;
    e.log_post = target(y);
    e.log_lik = e.log_post;
    return e;
  };
  return mh_step(state, wrapped, proposal, rng);
}

// ---------------------------------------------------------------- DA

DaStep da_step_with(const ChainState& state, const ApproxDensity& approx,
                    const PosteriorView& view, const StepRandomness& rnd) {
  DaStep r;
  r.outcome.group = rnd.draw.group;
  r.proposal = state.x + rnd.draw.increment;
  const ParameterVector& y = r.proposal;
  const bool local = approx.spec().state_dependent();

  if (!view.prior.in_support(y)) {
    r.state = state;
    return r;
  }

  TimedOutput fr = view.model.reduced_timed(y);
  r.outcome.t_reduced = fr.elapsed;
  const CorrectionAnchor anchor_x = state.anchor();
  const CorrectionAnchor* ax = local ? &anchor_x : nullptr;
  const double log_alpha_xy = clamp_log_prob(approx.log_density(y, fr.value, ax) -
                                             approx.log_density(state.x, state.f_reduced, ax));
  if (std::isnan(log_alpha_xy)) throw NonFiniteError("da_step: stage-1 ratio is NaN");
  r.outcome.alpha = prob(log_alpha_xy);
  if (!(rnd.u1 < r.outcome.alpha)) {
    r.state = state;
    return r;
  }

  // Promoted.
  assert(r.outcome.alpha > 0.0);
  r.outcome.stage1_accepted = true;
  r.outcome.stage2_evaluated = true;
  ExactEvaluation e = evaluate_exact(y, view.model, view.noise, view.prior, view.d_obs);
  r.outcome.t_exact = e.elapsed;

  double log_alpha_yx = 0.0;
  if (local) {
    const CorrectionAnchor anchor_y{y, e.f_exact, fr.value};
    log_alpha_yx = clamp_log_prob(approx.log_density(state.x, state.f_reduced, &anchor_y) -
                                  approx.log_density(y, fr.value, &anchor_y));
  } else {
    log_alpha_yx = clamp_log_prob(approx.log_density(state.x, state.f_reduced, nullptr) -
                                  approx.log_density(y, fr.value, nullptr));
  }
  const double log_beta =
      clamp_log_prob(e.log_post - state.log_post + log_alpha_yx - log_alpha_xy);
  if (std::isnan(log_beta)) throw NonFiniteError("da_step: stage-2 ratio is NaN");
  r.outcome.beta = prob(log_beta);

  r.f_exact_y = e.f_exact;
  r.f_reduced_y = fr.value;
  if (rnd.u2 < *r.outcome.beta) {
    r.outcome.stage2_accepted = true;
    r.outcome.moved = true;
    r.state.x = y;
    r.state.log_post = e.log_post;
    r.state.log_lik = e.log_lik;
    r.state.f_exact = std::move(e.f_exact);
    r.state.f_reduced = std::move(fr.value);
  } else {
    r.state = state;
  }
  return r;
}

std::pair<ChainState, StepOutcome> da_step(const ChainState& state, const ApproxDensity& approx,
                                           const PosteriorView& view,
                                           const ProposalState& proposal, RandomStream& rng) {
  DaStep r = da_step_with(state, approx, view, draw_step(proposal, rng));
  return {std::move(r.state), r.outcome};
}

Vector stage2_residual(const ApproxSpec& spec, const EemState& eem, const ChainState& from,
                       const DataVector& f_exact_y, const DataVector& f_reduced_y) {
  if (spec.state_dependent()) return f_exact_y - local_correct(f_reduced_y, from.anchor());
  if (spec.gain_enabled) return f_exact_y - eem.gain.cwiseProduct(f_reduced_y);
  return f_exact_y - f_reduced_y;
}

AdaStep ada_step_with(const ChainState& state, const ApproxSpec& spec, const EemState& eem,
                      const ApproxDensity& approx, const PosteriorView& view,
                      const ProposalState& proposal, const StepRandomness& rnd,
                      AdaptationSwitch adapt) {
  DaStep da = da_step_with(state, approx, view, rnd);
  AdaStep r;
  r.outcome = da.outcome;
  r.eem = eem;
  if (da.outcome.stage2_evaluated) {
    r.residual = stage2_residual(spec, eem, state, *da.f_exact_y, *da.f_reduced_y);
    if (adapt.eem && spec.adaptive()) {
      r.eem = update_posterior_eem(eem, *r.residual, spec.kind == ApproxKind::approx4);
    }
  }
  r.proposal = adapt.proposal
                   ? adapt_proposal(proposal, da.state.x, da.outcome.group, da.outcome.stage1_accepted)
                   : proposal;
  r.state = std::move(da.state);
  return r;
}

AdaStep ada_step(const ChainState& state, const ApproxSpec& spec, const EemState& eem,
                 const PosteriorView& view, const ProposalState& proposal, RandomStream& rng,
                 AdaptationSwitch adapt) {
  ApproxDensity approx(spec, eem, view.noise, view.prior, view.d_obs);
  return ada_step_with(state, spec, eem, approx, view, proposal, draw_step(proposal, rng), adapt);
}

// ---------------------------------------------------------------- shadow

ShadowState shadow_initial(const ChainState& main) {
  return {main.x, main.f_reduced, main.f_exact};
}

ShadowState shadow_step(const ShadowState& shadow, const ApproxDensity& approx,
                        const ForwardPair& model, const PriorSpec& prior,
                        const StepRandomness& rnd) {
  const ParameterVector y = shadow.x + rnd.draw.increment;
  if (!prior.in_support(y)) return shadow;
  const DataVector fr = model.reduced(y);
  const bool local = approx.spec().state_dependent();
  const CorrectionAnchor anchor{shadow.x, shadow.f_exact, shadow.f_reduced};
  const CorrectionAnchor* a = local ? &anchor : nullptr;
  const double log_alpha = clamp_log_prob(approx.log_density(y, fr, a) -
                                          approx.log_density(shadow.x, shadow.f_reduced, a));
  if (!(rnd.u1 < prob(log_alpha))) return shadow;
  ShadowState next{y, fr, {}};
  if (local) next.f_exact = model.exact(y);
  return next;
}

}  // namespace rrmh
