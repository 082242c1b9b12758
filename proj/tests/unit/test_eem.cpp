#include "helpers.hpp"

#include "rrmh/eem.hpp"

#include <doctest.h>

using namespace rrmh;
using testing::vec;

TEST_CASE("residual") {
  ForwardPair same(testing::identity_model(3));
  CHECK(residual(vec({1, 2, 3}), same).isZero(0.0));

  auto lin = testing::linear_model();
  ForwardPair pair(lin);
  CHECK(residual(Vector::Zero(4), pair).isZero(0.0));
  const Vector e1 = Vector::Unit(4, 0);
  CHECK((residual(e1, pair) - (lin->a().col(0) - lin->a_star().col(0))).norm() < 1e-15);
  CHECK(pair.exact_calls() == 2);
  CHECK(pair.reduced_calls() == 2);

  RandomStream rng(1);
  for (int k = 0; k < 5; ++k) {
    const Vector x = rng.normal_vector(4), y = rng.normal_vector(4);
    CHECK((residual(x + y, pair) - residual(x, pair) - residual(y, pair)).norm() < 1e-12);
  }
}

TEST_CASE("local_correct") {
  const CorrectionAnchor anchor{vec({0}), vec({2.5, 1.0}), vec({2.0, 1.5})};
  CHECK(local_correct(vec({1, 2}), anchor).isApprox(vec({1.5, 1.5})));
  CHECK(local_correct(anchor.f_reduced, anchor) == anchor.f_exact);

  const CorrectionAnchor flat{vec({0}), vec({0.3, 0.7}), vec({0.3, 0.7})};
  CHECK(local_correct(vec({4, 5}), flat) == vec({4, 5}));

  // Exact at the anchor for awkward magnitudes too.
  RandomStream rng(4);
  for (int k = 0; k < 20; ++k) {
    const Vector fe = 1e3 * rng.normal_vector(6), fr = 1e-3 * rng.normal_vector(6);
    const CorrectionAnchor a{vec({0}), fe, fr};
    CHECK((local_correct(fr, a) - fe).cwiseAbs().maxCoeff() <= 4 * std::numeric_limits<double>::epsilon() * fe.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("fit_prior_eem") {
  SUBCASE("exact reduced model gives a zero error model") {
    ForwardPair pair(testing::identity_model(2));
    RandomStream rng(2);
    const auto prior = PriorSpec::uniform_box(vec({-1, -1}), vec({1, 1}));
    const EemState s = fit_prior_eem(pair, prior, 50, rng);
    CHECK(s.mu_b.isZero(0.0));
    CHECK(s.sigma_b.isZero(0.0));
    CHECK(s.count == 50);
  }

  SUBCASE("two draws use denominator one") {
    auto lin = testing::linear_model();
    ForwardPair pair(lin);
    const auto prior = PriorSpec::gaussian(Vector::Zero(4), Matrix::Identity(4, 4));
    RandomStream rng(5), replay(5);
    const EemState s = fit_prior_eem(pair, prior, 2, rng);
    const Vector b1 = residual(prior.sample(replay), pair);
    const Vector b2 = residual(prior.sample(replay), pair);
    const Vector mu = (b1 + b2) / 2.0;
    const Matrix sig = (b1 - mu) * (b1 - mu).transpose() + (b2 - mu) * (b2 - mu).transpose();
    CHECK((s.mu_b - mu).norm() < 1e-14);
    CHECK(testing::rel_diff(s.sigma_b, sig) < 1e-12);
  }

  SUBCASE("mean of a linear residual under the prior") {
    auto lin = testing::linear_model();
    ForwardPair pair(lin);
    const Vector mu_prior = vec({0.5, -1.0, 0.25, 2.0});
    const auto prior = PriorSpec::gaussian(mu_prior, Matrix::Identity(4, 4));
    RandomStream rng(6);
    const std::size_t L = 10000;
    const EemState s = fit_prior_eem(pair, prior, L, rng);
    const Vector expected = (lin->a() - lin->a_star()) * mu_prior;
    for (Index i = 0; i < s.dim(); ++i) {
      const double se = std::sqrt(s.sigma_b(i, i) / static_cast<double>(L));
      CHECK(std::abs(s.mu_b[i] - expected[i]) < 4.0 * se);
    }
  }

  SUBCASE("regression gain") {
    // F = 2 F* + 1 componentwise: the gain is recovered and the residual is constant.
    auto f_red = [](const ParameterVector& x) -> DataVector { return x; };
    auto f_ex = [](const ParameterVector& x) -> DataVector { return (2.0 * x.array() + 1.0).matrix(); };
    ForwardPair pair(std::make_shared<FunctionForwardModel>(2, 2, f_ex, f_red));
    RandomStream rng(8);
    const auto prior = PriorSpec::uniform_box(vec({-1, -1}), vec({1, 1}));
    const EemState s = fit_prior_eem(pair, prior, 40, rng, true);
    CHECK(s.gain.isApprox(vec({2, 2}), 1e-12));
    CHECK(s.mu_b.isApprox(vec({1, 1}), 1e-12));
    CHECK(s.sigma_b.norm() < 1e-20);
  }
}

TEST_CASE("update_posterior_eem") {
  SUBCASE("zero residuals") {
    EemState s = EemState::identity(3);
    for (int k = 0; k < 7; ++k) s = update_posterior_eem(s, Vector::Zero(3), false);
    CHECK(s.mu_b.isZero(0.0));
    CHECK(s.sigma_b.isZero(0.0));
    CHECK(s.count == 7);
  }

  SUBCASE("zero-mean recursion unrolled by hand") {
    EemState s = EemState::identity(2);
    s = update_posterior_eem(s, vec({1, 0}), true);
    CHECK(s.sigma_b.isZero(0.0));
    s = update_posterior_eem(s, vec({0, 1}), true);
    CHECK(s.sigma_b.isZero(0.0));
    s = update_posterior_eem(s, vec({1, 1}), true);
    // (e1 e1' + e2 e2' + 11') / 2
    Matrix expected(2, 2);
    expected << 1.0, 0.5, 0.5, 1.0;
    CHECK(testing::rel_diff(s.sigma_b, expected) < 1e-15);
    CHECK(s.mu_b.isZero(0.0));
    // n = 4 with b = (2, 0): [(2) sigma_3 + b b'] / 3
    s = update_posterior_eem(s, vec({2, 0}), true);
    Matrix e4 = (2.0 * expected + vec({2, 0}) * vec({2, 0}).transpose()) / 3.0;
    CHECK(testing::rel_diff(s.sigma_b, e4) < 1e-15);
  }

  SUBCASE("streaming equals batch") {
    RandomStream rng(10);
    std::vector<Vector> bs;
    EemState s = EemState::identity(5), z = EemState::identity(5);
    for (int k = 0; k < 100; ++k) {
      bs.push_back(rng.normal_vector(5).array() + 3.0);
      s = update_posterior_eem(s, bs.back(), false);
      z = update_posterior_eem(z, bs.back(), true);
    }
    const EemState bs_nz = batch_eem(bs, false), bs_z = batch_eem(bs, true);
    CHECK(testing::rel_diff(s.mu_b, bs_nz.mu_b) < 1e-10);
    CHECK(testing::rel_diff(s.sigma_b, bs_nz.sigma_b) < 1e-10);
    CHECK(testing::rel_diff(z.sigma_b, bs_z.sigma_b) < 1e-10);
    CHECK(s.is_valid());
    CHECK(z.is_valid());
  }

  SUBCASE("diminishing change") {
    RandomStream rng(12);
    EemState s = EemState::identity(3);
    double worst = 0.0;
    for (int n = 1; n <= 2000; ++n) {
      const Matrix before = s.sigma_b;
      Vector b = rng.normal_vector(3);
      b = b / std::max(1.0, b.norm());  // residuals bounded by 1
      s = update_posterior_eem(s, b, true);
      if (n > 3) worst = std::max(worst, n * (s.sigma_b - before).norm());
    }
    // |b b' - sigma| <= 2 for |b| <= 1, so n |delta| stays below about 2.
    CHECK(worst < 2.5);
  }

  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(update_posterior_eem(EemState::identity(2), vec({1, 2, 3}), false), DimensionError);
  }
}

TEST_CASE("fit_gain_offset") {
  SUBCASE("already calibrated") {
    const Vector e = vec({1, 2}), f = vec({3, 5});
    const GainOffset g = fit_gain_offset(e, f, e, f);
    CHECK(g.gain.isApprox(vec({1, 1})));
    CHECK(g.offset.isZero(1e-15));
  }
  SUBCASE("scalar two-point solve") {
    const GainOffset g = fit_gain_offset(vec({0}), vec({2}), vec({1}), vec({5}));
    CHECK(g.gain[0] == doctest::Approx(2.0));
    CHECK(g.offset[0] == doctest::Approx(1.0));
  }
  SUBCASE("interpolates both frames") {
    RandomStream rng(13);
    const Vector se = rng.normal_vector(28), sf = se + (rng.normal_vector(28).cwiseAbs().array() + 0.5).matrix();
    const Vector oe = rng.normal_vector(28), of = rng.normal_vector(28);
    const GainOffset g = fit_gain_offset(se, sf, oe, of);
    CHECK((g.apply(se) - oe).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.apply(sf) - of).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("degenerate component is named") {
    try {
      fit_gain_offset(vec({0, 1}), vec({1, 1}), vec({0, 0}), vec({1, 1}));
      FAIL("expected CalibrationError");
    } catch (const CalibrationError& e) {
      CHECK(e.component() == 1);
    }
  }
}
