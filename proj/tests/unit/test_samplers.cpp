#include "helpers.hpp"

#include "rrmh/diagnostics.hpp"
#include "rrmh/samplers.hpp"

#include <doctest.h>

#include <array>

using namespace rrmh;
using testing::vec;

namespace {

/// Fixed random-walk proposal with covariance s^2 I (adaptation not used).
ProposalState fixed_rw(Index d, double s) {
  ProposalState p = ProposalState::am(Vector::Zero(d), 1e-12);
  p.emp_cov = Matrix::Identity(d, d) * (s * s / (2.38 * 2.38 / static_cast<double>(d)));
  p.step_count = 1000000;
  return p;
}

/// Linear-Gaussian inverse problem with its own pair.
struct LinearProblem {
  std::shared_ptr<const models::LinearGaussianModel> model = testing::linear_model();
  ForwardPair pair{model};
  PriorSpec prior = PriorSpec::gaussian(Vector::Zero(4), Matrix::Identity(4, 4));
  NoiseModel noise = NoiseModel::isotropic(6, 0.5);
  DataVector d_obs;
  models::GaussianPosterior post;

  LinearProblem() {
    RandomStream rng(21);
    d_obs = model->exact(rng.normal_vector(4)) + 0.5 * rng.normal_vector(6);
    post = models::conjugate_posterior(model->a(), noise.covariance(), d_obs, Vector::Zero(4),
                                       Matrix::Identity(4, 4));
  }
  PosteriorView view() const { return {pair, noise, prior, d_obs}; }
};

}  // namespace

TEST_CASE("MH step basics") {
  const ProposalState q = fixed_rw(1, 1.0);
  ChainState s;
  s.x = vec({0.0});
  s.log_post = 0.0;

  SUBCASE("equal density accepts") {
    RandomStream rng(1);
    for (int k = 0; k < 50; ++k) {
      auto [next, out] = mh_step(s, LogDensity([](const ParameterVector&) { return 0.0; }), q, rng);
      CHECK(out.alpha == 1.0);
      CHECK(out.moved);
    }
  }
  SUBCASE("outside the support rejects") {
    RandomStream rng(2);
    for (int k = 0; k < 50; ++k) {
      auto [next, out] = mh_step(s, LogDensity([](const ParameterVector&) { return kNegInf; }), q, rng);
      CHECK(out.alpha == 0.0);
      CHECK_FALSE(out.moved);
      CHECK(next.x == s.x);
    }
  }
}

TEST_CASE("MH acceptance rate for a 1D standard normal at scale 2.38") {
  const ProposalState q = fixed_rw(1, 2.38);
  const LogDensity target = [](const ParameterVector& x) { return -0.5 * x.squaredNorm(); };
  ChainState s;
  s.x = vec({0.0});
  s.log_post = 0.0;
  RandomStream rng(3);
  int accepted = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    auto [next, out] = mh_step(s, target, q, rng);
    accepted += out.moved ? 1 : 0;
    s = std::move(next);
  }
  CHECK(std::abs(accepted / static_cast<double>(n) - 0.44) < 0.03);
}

TEST_CASE("MH detailed balance on a three-point grid") {
  const std::array<double, 3> pi{0.2, 0.3, 0.5};
  const ExactTarget target = [&](const ParameterVector& y) {
    ExactEvaluation e;
    const double v = y[0];
    if (v == 0.0 || v == 1.0 || v == 2.0) e.log_post = std::log(pi[static_cast<std::size_t>(v)]);
    e.log_lik = e.log_post;
    return e;
  };
  ChainState s;
  s.x = vec({1.0});
  s.log_post = std::log(pi[1]);
  RandomStream rng(4);
  std::array<std::array<double, 3>, 3> count{};
  const int n = 300000;
  for (int k = 0; k < n; ++k) {
    StepRandomness rnd;
    rnd.draw.increment = vec({rng.uniform() < 0.5 ? -1.0 : 1.0});
    rnd.u1 = rng.uniform();
    const auto i = static_cast<std::size_t>(s.x[0]);
    auto [next, out] = mh_step_with(s, target, rnd);
    const auto j = static_cast<std::size_t>(next.x[0]);
    count[i][j] += 1.0;
    s = std::move(next);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      const double se = std::sqrt(count[i][j] + count[j][i]);
      CHECK(std::abs(count[i][j] - count[j][i]) < 4.0 * std::max(se, 1.0));
    }
  }
  double visits2 = count[2][0] + count[2][1] + count[2][2];
  CHECK(std::abs(visits2 / n - 0.5) < 0.02);
}

TEST_CASE("delayed acceptance") {
  LinearProblem lp;

  SUBCASE("exact approximation accepts every promoted proposal") {
    auto same = testing::same_model(4, 6, [m = lp.model](const ParameterVector& x) { return m->exact(x); });
    ForwardPair pair(same);
    const PosteriorView view{pair, lp.noise, lp.prior, lp.d_obs};
    const ApproxDensity approx(ApproxSpec::approx1(), EemState::identity(6), lp.noise, lp.prior, lp.d_obs);
    ChainState s = initial_state(Vector::Zero(4), view, true);
    const ProposalState q = fixed_rw(4, 0.3);
    RandomStream rng(5);
    int promoted = 0;
    for (int k = 0; k < 2000; ++k) {
      auto [next, out] = da_step(s, approx, view, q, rng);
      if (out.stage2_evaluated) {
        ++promoted;
        REQUIRE(*out.beta == doctest::Approx(1.0).epsilon(1e-12));
        REQUIRE(out.stage2_accepted);
      }
      s = std::move(next);
    }
    CHECK(promoted > 100);
  }

  SUBCASE("stage-1 rejection costs no exact evaluation") {
    const PosteriorView view = lp.view();
    const ApproxDensity approx(ApproxSpec::approx1(), EemState::identity(6), lp.noise, lp.prior, lp.d_obs);
    ChainState s = initial_state(Vector::Zero(4), view, true);
    const ProposalState q = fixed_rw(4, 0.5);
    RandomStream rng(6);
    std::uint64_t promotions = 0;
    for (int k = 0; k < 3000; ++k) {
      const std::uint64_t before = lp.pair.exact_calls();
      auto [next, out] = da_step(s, approx, view, q, rng);
      const std::uint64_t used = lp.pair.exact_calls() - before;
      REQUIRE(used == (out.stage1_accepted ? 1u : 0u));
      promotions += out.stage1_accepted ? 1 : 0;
      s = std::move(next);
    }
    CHECK(lp.pair.exact_calls() == 1 + promotions);
  }

  SUBCASE("state-independent DA is the surrogate transition kernel") {
    const PosteriorView view = lp.view();
    EemState eem = EemState::identity(6);
    RandomStream rng(7);
    for (int k = 0; k < 10; ++k) eem = update_posterior_eem(eem, 0.3 * rng.normal_vector(6), false);
    const ApproxSpec spec = ApproxSpec::approx2(EemSource::posterior_adaptive);
    const ApproxDensity approx(spec, eem, lp.noise, lp.prior, lp.d_obs);
    int checked = 0;
    for (int k = 0; k < 200; ++k) {
      const ChainState s = initial_state(0.5 * rng.normal_vector(4), view, true);
      StepRandomness rnd;
      rnd.draw.increment = 0.3 * rng.normal_vector(4);
      rnd.u1 = 0.0;
      rnd.u2 = 1.0;
      const DaStep r = da_step_with(s, approx, view, rnd);
      if (!r.outcome.stage2_evaluated) continue;
      const Vector y = r.proposal;
      const double lpi_y = log_posterior(y, lp.pair, lp.noise, lp.prior, lp.d_obs);
      const double lps_x = approx.log_density(s.x, s.f_reduced, nullptr);
      const double lps_y = approx.log_density(y, lp.model->reduced(y), nullptr);
      const double surrogate = std::min(1.0, std::exp(lpi_y + lps_x - s.log_post - lps_y));
      CHECK(*r.outcome.beta == doctest::Approx(surrogate).epsilon(1e-10));
      ++checked;
    }
    CHECK(checked > 150);
  }

  SUBCASE("DA posterior mean matches the conjugate oracle") {
    const PosteriorView view = lp.view();
    const ApproxDensity approx(ApproxSpec::approx1(), EemState::identity(6), lp.noise, lp.prior, lp.d_obs);
    ChainState s = initial_state(lp.post.mean, view, true);
    ProposalState q = ProposalState::am(lp.post.mean, 1e-12);
    q.emp_cov = lp.post.covariance;
    q.step_count = 1000000;
    RandomStream rng(8);
    const int n = 100000;
    std::vector<std::vector<double>> xs(4);
    for (int k = 0; k < n; ++k) {
      auto [next, out] = da_step(s, approx, view, q, rng);
      s = std::move(next);
      for (Index i = 0; i < 4; ++i) xs[static_cast<std::size_t>(i)].push_back(s.x[i]);
    }
    for (Index i = 0; i < 4; ++i) {
      const SeriesStats st = mc_estimate(xs[static_cast<std::size_t>(i)]);
      CHECK(std::abs(st.mean - lp.post.mean[i]) < 4.0 * st.mc_stderr);
    }
  }
}

TEST_CASE("adaptive delayed acceptance") {
  LinearProblem lp;
  const PosteriorView view = lp.view();
  const ApproxSpec spec = ApproxSpec::approx4();

  SUBCASE("frozen adaptation reduces to DA") {
    EemState eem = EemState::identity(6);
    RandomStream seed_rng(9);
    for (int k = 0; k < 5; ++k) eem = update_posterior_eem(eem, 0.2 * seed_rng.normal_vector(6), true);
    const ApproxDensity approx(spec, eem, lp.noise, lp.prior, lp.d_obs);
    ChainState a = initial_state(Vector::Zero(4), view, true), b = a;
    const ProposalState q = fixed_rw(4, 0.4);
    RandomStream r1(10), r2(10);
    for (int k = 0; k < 500; ++k) {
      const AdaStep s1 = ada_step(a, spec, eem, view, q, r1, AdaptationSwitch{false, false});
      auto [s2, out] = da_step(b, approx, view, q, r2);
      REQUIRE(s1.state.x == s2.x);
      REQUIRE(s1.outcome.stage2_accepted == out.stage2_accepted);
      REQUIRE(s1.eem.count == eem.count);
      REQUIRE(s1.proposal.step_count == q.step_count);
      a = s1.state;
      b = s2;
    }
  }

  SUBCASE("error model absorbs exactly the promoted proposals") {
    EemState eem = EemState::identity(6);
    ProposalState q = ProposalState::am(Vector::Zero(4));
    ChainState s = initial_state(Vector::Zero(4), view, true);
    RandomStream rng(11);
    for (int k = 0; k < 1000; ++k) {
      const AdaStep r = ada_step(s, spec, eem, view, q, rng);
      REQUIRE(r.eem.count == eem.count + (r.outcome.stage2_evaluated ? 1 : 0));
      REQUIRE(r.residual.has_value() == r.outcome.stage2_evaluated);
      REQUIRE(r.eem.is_valid(1e-8));
      s = r.state;
      eem = r.eem;
      q = r.proposal;
    }
  }

  SUBCASE("prior-fitted error model is not updated") {
    EemState eem = EemState::identity(6);
    RandomStream rng(12);
    eem = fit_prior_eem(lp.pair, lp.prior, 20, rng);
    const ApproxSpec a2 = ApproxSpec::approx2(EemSource::prior_fitted);
    ChainState s = initial_state(Vector::Zero(4), view, true);
    ProposalState q = ProposalState::am(Vector::Zero(4));
    for (int k = 0; k < 300; ++k) {
      const AdaStep r = ada_step(s, a2, eem, view, q, rng);
      REQUIRE(r.eem.count == eem.count);
      s = r.state;
      q = r.proposal;
    }
  }
}

TEST_CASE("shadow chain follows the approximate target only") {
  LinearProblem lp;
  const PosteriorView view = lp.view();
  const ApproxDensity approx(ApproxSpec::approx1(), EemState::identity(6), lp.noise, lp.prior, lp.d_obs);
  const ChainState s = initial_state(Vector::Zero(4), view, true);
  ShadowState sh = shadow_initial(s);
  ForwardPair pair(lp.model);
  RandomStream rng(13);
  const ProposalState q = fixed_rw(4, 0.3);
  for (int k = 0; k < 200; ++k) sh = shadow_step(sh, approx, pair, lp.prior, draw_step(q, rng));
  CHECK(pair.exact_calls() == 0);
  CHECK(pair.reduced_calls() > 0);
}
