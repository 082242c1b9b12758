#include "helpers.hpp"

#include "rrmh/eem.hpp"
#include "rrmh/samplers.hpp"

#include <doctest.h>

using namespace rrmh;
using testing::vec;

TEST_CASE("gaussian_log_likelihood") {
  const NoiseModel iso = NoiseModel::isotropic(2, 1.0);
  CHECK(gaussian_log_likelihood(vec({3, -2}), vec({3, -2}), NoiseModel::diagonal(vec({2, 7}))) == 0.0);
  CHECK(gaussian_log_likelihood(vec({1, 0}), vec({0, 0}), iso) == doctest::Approx(-0.5));
  CHECK(gaussian_log_likelihood(vec({1, 1}), vec({0, 0}), NoiseModel::diagonal(vec({2, 1}))) ==
        doctest::Approx(-0.625).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_log_likelihood(vec({1, 1, 1}), vec({0, 0}), iso), DimensionError);
  CHECK_THROWS_AS(gaussian_log_likelihood(vec({NAN, 1}), vec({0, 0}), iso), NonFiniteError);
}

TEST_CASE("log_posterior support gate and zero misfit") {
  auto model = testing::identity_model(2);
  ForwardPair pair(model);
  const PriorSpec prior = PriorSpec::uniform_box(vec({-1, -1}), vec({1, 1}));
  const NoiseModel noise = NoiseModel::isotropic(2, 0.5);
  const DataVector d = vec({0.2, -0.3});

  CHECK(log_posterior(d, pair, noise, prior, d) == doctest::Approx(prior.log_density(d)));
  CHECK(log_posterior(d, pair, noise, prior, d) == doctest::Approx(prior.log_density(vec({0.9, 0.9}))));
  CHECK(pair.exact_calls() == 2);

  pair.reset_counters();
  CHECK(log_posterior(vec({1.5, 0}), pair, noise, prior, d) == kNegInf);
  CHECK(pair.exact_calls() == 0);
}

TEST_CASE("log_posterior matches the closed-form Gaussian density") {
  auto model = testing::linear_model();
  ForwardPair pair(model);
  const Index d = model->param_dim(), m = model->data_dim();
  const PriorSpec prior = PriorSpec::gaussian(Vector::Zero(d), Matrix::Identity(d, d));
  const NoiseModel noise = NoiseModel::isotropic(m, 0.1);
  RandomStream rng(3);
  const DataVector d_obs = model->exact(rng.normal_vector(d)) + 0.1 * rng.normal_vector(m);
  const auto post = models::conjugate_posterior(model->a(), noise.covariance(), d_obs,
                                                Vector::Zero(d), Matrix::Identity(d, d));
  const Matrix prec = post.covariance.inverse();
  // The unnormalized log-posterior differs from the posterior log-density by a constant.
  std::optional<double> offset;
  for (int k = 0; k < 5; ++k) {
    const Vector x = rng.normal_vector(d);
    const Vector r = x - post.mean;
    const double analytic = -0.5 * r.dot(prec * r);
    const double lp = log_posterior(x, pair, noise, prior, d_obs);
    if (!offset) offset = lp - analytic;
    CHECK(lp - analytic == doctest::Approx(*offset).epsilon(1e-9));
  }
}

TEST_CASE("prior shift leaves MH acceptance probabilities unchanged") {
  auto model = testing::linear_model();
  ForwardPair pair(model);
  const Index d = model->param_dim(), m = model->data_dim();
  const PriorSpec prior = PriorSpec::gaussian(Vector::Zero(d), Matrix::Identity(d, d));
  const PriorSpec shifted = prior.shifted(12.5);
  const NoiseModel noise = NoiseModel::isotropic(m, 0.5);
  const DataVector d_obs = Vector::Ones(m);
  const PosteriorView a{pair, noise, prior, d_obs};
  const PosteriorView b{pair, noise, shifted, d_obs};
  const Vector x0 = Vector::Constant(d, 0.1);
  CHECK(log_posterior(x0, pair, noise, shifted, d_obs) ==
        doctest::Approx(log_posterior(x0, pair, noise, prior, d_obs) + 12.5));

  const ProposalState q = ProposalState::am(x0);
  ChainState sa = initial_state(x0, a, false), sb = initial_state(x0, b, false);
  RandomStream ra(9), rb(9);
  for (int k = 0; k < 200; ++k) {
    auto [na, oa] = mh_step(sa, [&](const ParameterVector& x) { return evaluate_exact(x, pair, noise, prior, d_obs); }, q, ra);
    auto [nb, ob] = mh_step(sb, [&](const ParameterVector& x) { return evaluate_exact(x, pair, noise, shifted, d_obs); }, q, rb);
    REQUIRE(oa.alpha == doctest::Approx(ob.alpha).epsilon(1e-12));
    REQUIRE(oa.moved == ob.moved);
    sa = na;
    sb = nb;
  }
}

TEST_CASE("approximate densities") {
  auto model = testing::linear_model();
  const Index d = model->param_dim(), m = model->data_dim();
  const PriorSpec prior = PriorSpec::gaussian(Vector::Zero(d), Matrix::Identity(d, d));
  const NoiseModel noise = NoiseModel::isotropic(m, 0.3);
  RandomStream rng(17);
  const DataVector d_obs = rng.normal_vector(m);

  SUBCASE("approx1 with F* = F equals the exact posterior") {
    auto same = testing::same_model(d, m, [model](const ParameterVector& x) { return model->exact(x); });
    ForwardPair pair(same);
    for (int k = 0; k < 10; ++k) {
      const Vector x = rng.normal_vector(d);
      const double a = approx_log_posterior(x, ApproxSpec::approx1(), EemState::identity(m), std::nullopt,
                                            pair, noise, prior, d_obs);
      CHECK(testing::rel_diff(a, log_posterior(x, pair, noise, prior, d_obs)) < 1e-12);
    }
  }

  SUBCASE("approx2 with the identity modification equals approx1") {
    ForwardPair pair(model);
    const ApproxSpec a2 = ApproxSpec::approx2(EemSource::prior_fitted, true);
    for (int k = 0; k < 10; ++k) {
      const Vector x = rng.normal_vector(d);
      CHECK(approx_log_posterior(x, a2, EemState::identity(m), std::nullopt, pair, noise, prior, d_obs) ==
            doctest::Approx(approx_log_posterior(x, ApproxSpec::approx1(), EemState::identity(m),
                                                 std::nullopt, pair, noise, prior, d_obs))
                .epsilon(1e-14));
    }
    CHECK(pair.exact_calls() == 0);
  }

  SUBCASE("approx3 at its anchor equals the exact posterior") {
    ForwardPair pair(model);
    const Vector x = rng.normal_vector(d);
    const CorrectionAnchor anchor{x, model->exact(x), model->reduced(x)};
    CHECK(approx_log_posterior(x, ApproxSpec::approx3(), EemState::identity(m), anchor, pair, noise,
                               prior, d_obs) ==
          doctest::Approx(log_posterior(x, pair, noise, prior, d_obs)).epsilon(1e-13));
  }

  SUBCASE("approx4 matches a dense evaluation") {
    ForwardPair pair(model);
    std::vector<Vector> bs{rng.normal_vector(m), rng.normal_vector(m), rng.normal_vector(m)};
    EemState eem = EemState::identity(m);
    for (const auto& b : bs) eem = update_posterior_eem(eem, b, true);
    Matrix sb = Matrix::Zero(m, m);
    for (const auto& b : bs) sb += b * b.transpose();
    sb /= 2.0;
    const Matrix cov = noise.covariance() + sb + Matrix::Identity(m, m) * (1e-10 * sb.trace() / m);

    const Vector x = rng.normal_vector(d), y = rng.normal_vector(d);
    const CorrectionAnchor anchor{x, model->exact(x), model->reduced(x)};
    const Vector r = model->reduced(y) + anchor.f_exact - anchor.f_reduced - d_obs;
    const double dense = -0.5 * r.dot(cov.inverse() * r) + prior.log_density(y);
    CHECK(approx_log_posterior(y, ApproxSpec::approx4(), eem, anchor, pair, noise, prior, d_obs) ==
          doctest::Approx(dense).epsilon(1e-10));
  }

  SUBCASE("approximate evaluation never calls the exact map") {
    ForwardPair pair(model);
    const Vector x = rng.normal_vector(d);
    const CorrectionAnchor anchor{x, model->exact(x), model->reduced(x)};
    EemState eem = EemState::identity(m);
    for (int k = 0; k < 5; ++k) eem = update_posterior_eem(eem, rng.normal_vector(m), false);
    for (int k = 0; k < 50; ++k) {
      const Vector y = rng.normal_vector(d);
      approx_log_posterior(y, ApproxSpec::approx1(), eem, std::nullopt, pair, noise, prior, d_obs);
      approx_log_posterior(y, ApproxSpec::approx2(EemSource::posterior_adaptive), eem, std::nullopt, pair,
                           noise, prior, d_obs);
      approx_log_posterior(y, ApproxSpec::approx3(), eem, anchor, pair, noise, prior, d_obs);
      approx_log_posterior(y, ApproxSpec::approx4(), eem, anchor, pair, noise, prior, d_obs);
    }
    CHECK(pair.exact_calls() == 0);
    CHECK(pair.reduced_calls() == 200);
  }

  SUBCASE("state-dependent kinds need an anchor") {
    ForwardPair pair(model);
    CHECK_THROWS(approx_log_posterior(Vector::Zero(d), ApproxSpec::approx3(), EemState::identity(m),
                                      std::nullopt, pair, noise, prior, d_obs));
  }
}

TEST_CASE("ApproxSpec invariants") {
  CHECK_NOTHROW(ApproxSpec::approx1().validate());
  CHECK_NOTHROW(ApproxSpec::approx4().validate());
  CHECK_THROWS((ApproxSpec{ApproxKind::approx1, EemSource::prior_fitted, false}).validate());
  CHECK_THROWS((ApproxSpec{ApproxKind::approx3, EemSource::posterior_adaptive, false}).validate());
  CHECK_THROWS((ApproxSpec{ApproxKind::approx4, EemSource::prior_fitted, false}).validate());
}
