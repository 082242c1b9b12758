#include "rrmh/proposal.hpp"

#include "rrmh/log.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <cmath>

namespace rrmh {

std::string_view to_string(ProposalKind kind) { return kind == ProposalKind::am ? "am" : "gcam"; }

ProposalKind parse_proposal_kind(std::string_view s) {
  if (s == "am") return ProposalKind::am;
  if (s == "gcam") return ProposalKind::gcam;
  throw Error("unknown proposal kind '" + std::string(s) + "'");
}

ProposalState ProposalState::am(const ParameterVector& x0, double mix_eps) {
  const Index d = x0.size();
  if (d == 0) throw DimensionError("proposal: empty parameter vector");
  std::vector<Index> all(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) all[static_cast<std::size_t>(i)] = i;
  ProposalState p = gcam(x0, {all}, 0.13, mix_eps);
  p.kind = ProposalKind::am;
  p.steer = false;
  return p;
}

ProposalState ProposalState::gcam(const ParameterVector& x0, std::vector<std::vector<Index>> groups,
                                  double target_acceptance, double mix_eps) {
  const Index d = x0.size();
  ProposalState p;
  p.kind = ProposalKind::gcam;
  p.emp_mean = x0;
  p.emp_cov = Matrix::Zero(d, d);
  p.samples = 1;
  p.scale_main = 2.38 * 2.38 / static_cast<double>(d);
  p.scale_floor = 0.1 * 0.1 / static_cast<double>(d);
  p.mix_eps = mix_eps;
  p.target_acceptance = target_acceptance;
  p.steer = true;
  for (auto& g : groups) p.groups.push_back(ProposalGroup{std::move(g)});
  p.validate();
  return p;
}

void ProposalState::validate() const {
  const Index d = dim();
  if (groups.empty()) throw Error("proposal: no groups");
  std::vector<int> seen(static_cast<std::size_t>(d), 0);
  for (const auto& g : groups) {
    if (g.indices.empty()) throw Error("proposal: empty group");
    for (Index i : g.indices) {
      if (i < 0 || i >= d) throw Error("proposal: group index out of range");
      ++seen[static_cast<std::size_t>(i)];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    throw Error("proposal: groups must partition the parameter indices exactly");
  }
  if (!(mix_eps > 0.0 && mix_eps <= 1.0)) throw Error("proposal: mix_eps must lie in (0, 1]");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw Error("proposal: target acceptance must lie in (0, 1)");
  }
}

Matrix ProposalState::group_covariance(std::size_t g) const {
  const auto& idx = groups.at(g).indices;
  const Index dg = static_cast<Index>(idx.size());
  const double main = 2.38 * 2.38 / static_cast<double>(dg);
  const double floor = 0.1 * 0.1 / static_cast<double>(dg);
  Matrix cov = Matrix::Identity(dg, dg) * floor;
  if (step_count > 2 * static_cast<std::size_t>(dim())) {
    Matrix block(dg, dg);
    for (Index a = 0; a < dg; ++a) {
      for (Index b = 0; b < dg; ++b) block(a, b) = emp_cov(idx[a], idx[b]);
    }
    cov = (1.0 - mix_eps) * main * block + mix_eps * floor * Matrix::Identity(dg, dg);
  }
  return cov * std::exp(groups[g].log_scale);
}

Matrix ProposalState::covariance() const {
  const Index d = dim();
  Matrix full = Matrix::Zero(d, d);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const Matrix c = group_covariance(g);
    const auto& idx = groups[g].indices;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = 0; b < idx.size(); ++b) {
        full(idx[a], idx[b]) = c(static_cast<Index>(a), static_cast<Index>(b));
      }
    }
  }
  return full;
}

ProposalDraw draw_increment(const ProposalState& proposal, RandomStream& rng) {
  ProposalDraw draw;
  draw.group = proposal.groups.size() > 1 ? rng.uniform_index(proposal.groups.size()) : 0;
  const auto& idx = proposal.groups[draw.group].indices;
  const Index dg = static_cast<Index>(idx.size());
  const Vector z = rng.normal_vector(dg);

  Matrix cov = proposal.group_covariance(draw.group);
  Eigen::LLT<Matrix> llt(cov);
  Vector step;
  if (llt.info() == Eigen::Success) {
    step = llt.matrixL() * z;
  } else {
    static std::atomic<int> warned{0};
    if (warned.fetch_add(1) < 5) log_warning("proposal covariance not factorizable; using floor term");
    const double floor = 0.1 * 0.1 / static_cast<double>(dg);
    step = std::sqrt(floor * std::exp(proposal.groups[draw.group].log_scale)) * z;
  }
  draw.increment = Vector::Zero(proposal.dim());
  for (Index a = 0; a < dg; ++a) draw.increment[idx[a]] = step[a];
  return draw;
}

ParameterVector am_propose(const ProposalState& proposal, const ParameterVector& x,
                           RandomStream& rng) {
  require_dim(x.size(), proposal.dim(), "proposal state");
  return x + draw_increment(proposal, rng).increment;
}

ProposalState am_update(ProposalState p, const ParameterVector& x_new) {
  require_dim(x_new.size(), p.dim(), "proposal update");
  const std::size_t n = p.samples + 1;
  const double nd = static_cast<double>(n);
  const Vector delta = x_new - p.emp_mean;
  p.emp_mean += delta / nd;
  if (n >= 2) p.emp_cov = p.emp_cov * ((nd - 2.0) / (nd - 1.0)) + (delta * delta.transpose()) / nd;
  p.samples = n;
  ++p.step_count;
  return p;
}

double steering_rate(std::size_t n) { return std::pow(static_cast<double>(std::max<std::size_t>(n, 1)), -0.6); }

ProposalState gcam_update(ProposalState p, const ParameterVector& x_new, std::size_t group,
                          bool accepted) {
  p = am_update(std::move(p), x_new);
  auto& g = p.groups.at(group);
  ++g.proposals;
  if (accepted) ++g.accepts;
  p.last_log_scale_delta = 0.0;
  if (p.steer) {
    const double delta =
        steering_rate(p.step_count) * ((accepted ? 1.0 : 0.0) - p.target_acceptance);
    g.log_scale += delta;
    p.last_log_scale_delta = delta;
  }
  return p;
}

ProposalState adapt_proposal(ProposalState p, const ParameterVector& x_new, std::size_t group,
                             bool accepted) {
  if (p.kind == ProposalKind::gcam) return gcam_update(std::move(p), x_new, group, accepted);
  auto& g = p.groups.at(group);
  ++g.proposals;
  if (accepted) ++g.accepts;
  return am_update(std::move(p), x_new);
}

}  // namespace rrmh
