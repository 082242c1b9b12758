#include "helpers.hpp"

#include "rrmh/proposal.hpp"

#include <doctest.h>

using namespace rrmh;

TEST_CASE("initial AM covariance") {
  const ProposalState p = ProposalState::am(Vector::Zero(4));
  CHECK(testing::rel_diff(p.covariance(), 0.0025 * Matrix::Identity(4, 4)) < 1e-15);

  // Still the initial form up to step 2d.
  ProposalState q = p;
  RandomStream rng(1);
  for (int k = 0; k < 8; ++k) q = am_update(q, rng.normal_vector(4));
  CHECK(testing::rel_diff(q.covariance(), 0.0025 * Matrix::Identity(4, 4)) < 1e-15);
  q = am_update(q, rng.normal_vector(4));
  CHECK(testing::rel_diff(q.covariance(), 0.0025 * Matrix::Identity(4, 4)) > 1e-3);
}

TEST_CASE("adapted AM covariance with identity empirical covariance") {
  ProposalState p = ProposalState::am(Vector::Zero(3), 1e-12);
  p.emp_cov = Matrix::Identity(3, 3);
  p.step_count = 100;
  CHECK(testing::rel_diff(p.covariance(), (2.38 * 2.38 / 3.0) * Matrix::Identity(3, 3)) < 1e-10);
}

TEST_CASE("proposal draws follow the formula covariance") {
  ProposalState p = ProposalState::am(Vector::Zero(3));
  Matrix s(3, 3);
  s << 2.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 0.5;
  p.emp_cov = s;
  p.step_count = 50;
  RandomStream rng(2);
  const int n = 100000;
  Matrix acc = Matrix::Zero(3, 3);
  const Vector x = Vector::Constant(3, 1.0);
  for (int k = 0; k < n; ++k) {
    const Vector dx = am_propose(p, x, rng) - x;
    acc += dx * dx.transpose();
  }
  acc /= n;
  CHECK(testing::rel_diff(acc, p.covariance()) < 0.05);
}

TEST_CASE("empirical moments match batch estimates") {
  RandomStream rng(3);
  std::vector<Vector> xs{Vector::Zero(2)};
  ProposalState p = ProposalState::am(xs.front());
  for (int k = 0; k < 500; ++k) {
    xs.push_back(rng.normal_vector(2) * 2.0);
    p = am_update(p, xs.back());
  }
  Vector mean = Vector::Zero(2);
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  Matrix cov = Matrix::Zero(2, 2);
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  cov /= static_cast<double>(xs.size() - 1);
  CHECK(testing::rel_diff(p.emp_mean, mean) < 1e-12);
  CHECK(testing::rel_diff(p.emp_cov, cov) < 1e-12);
  CHECK(p.step_count == 500);
}

TEST_CASE("GCAM") {
  SUBCASE("one full group without steering is AM") {
    RandomStream rng(4);
    ProposalState am = ProposalState::am(Vector::Zero(3));
    ProposalState g = ProposalState::gcam(Vector::Zero(3), {{0, 1, 2}});
    g.steer = false;
    for (int k = 0; k < 50; ++k) {
      const Vector x = rng.normal_vector(3);
      am = adapt_proposal(am, x, 0, k % 3 == 0);
      g = adapt_proposal(g, x, 0, k % 3 == 0);
    }
    CHECK(testing::rel_diff(am.covariance(), g.covariance()) < 1e-15);
    RandomStream r1(5), r2(5);
    CHECK((am_propose(am, Vector::Zero(3), r1) - am_propose(g, Vector::Zero(3), r2)).norm() == 0.0);
  }

  SUBCASE("steering direction") {
    ProposalState up = ProposalState::gcam(Vector::Zero(2), {{0}, {1}});
    ProposalState down = up;
    double last_up = 0.0, last_down = 0.0;
    for (int k = 0; k < 100; ++k) {
      up = gcam_update(up, Vector::Zero(2), 0, true);
      down = gcam_update(down, Vector::Zero(2), 0, false);
      CHECK(up.groups[0].log_scale > last_up);
      CHECK(down.groups[0].log_scale < last_down);
      last_up = up.groups[0].log_scale;
      last_down = down.groups[0].log_scale;
    }
    CHECK(up.groups[1].log_scale == 0.0);
  }

  SUBCASE("scale changes are bounded by n^-0.6") {
    ProposalState p = ProposalState::gcam(Vector::Zero(2), {{0}, {1}}, 0.3);
    RandomStream rng(6);
    for (int k = 0; k < 5000; ++k) {
      const auto draw = draw_increment(p, rng);
      const bool acc = rng.uniform() < 0.5;
      const double before = p.groups[draw.group].log_scale;
      p = gcam_update(p, draw.increment, draw.group, acc);
      const double delta = std::abs(p.groups[draw.group].log_scale - before);
      REQUIRE(delta <= std::pow(static_cast<double>(p.step_count), -0.6) + 1e-15);
      REQUIRE(delta == doctest::Approx(std::abs(p.last_log_scale_delta)));
    }
  }

  SUBCASE("draws touch only the chosen group") {
    const ProposalState p = ProposalState::gcam(Vector::Zero(4), {{0, 2}, {1}, {3}});
    RandomStream rng(7);
    for (int k = 0; k < 100; ++k) {
      const auto draw = draw_increment(p, rng);
      const auto& idx = p.groups[draw.group].indices;
      for (Index i = 0; i < 4; ++i) {
        const bool in = std::find(idx.begin(), idx.end(), i) != idx.end();
        if (!in) CHECK(draw.increment[i] == 0.0);
      }
    }
  }

  SUBCASE("groups must partition the indices") {
    CHECK_THROWS(ProposalState::gcam(Vector::Zero(3), {{0, 1}}));
    CHECK_THROWS(ProposalState::gcam(Vector::Zero(3), {{0, 1}, {1, 2}}));
    CHECK_THROWS(ProposalState::gcam(Vector::Zero(3), {{0, 1, 5}}));
  }
}
