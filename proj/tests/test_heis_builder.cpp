#include <catch2/catch_amalgamated.hpp>

#include "carnot/heisenberg_builder.hpp"
#include "support/test_util.hpp"

using namespace carnot;

namespace {
const ConvexProfileDomain kDisc = ConvexProfileDomain::disc(1.0);
}

TEST_CASE("omega is the standard symplectic form") {
  CHECK(omega({1, 0}, {0, 1}) == 1.0);
  CHECK(omega({0.3, -0.2}, {0.3, -0.2}) == 0.0);
  CHECK(omega({2, 1}, {3, 4}) == 5.0);
  CHECK(omega({2, 1}, {3, 4}) == -omega({3, 4}, {2, 1}));
}

TEST_CASE("quadratic combination bound") {
  CHECK(quadratic_combination_bound(ProfileFunction::zero(), kDisc) == 0.0);
  CHECK(quadratic_combination_bound(ProfileFunction::abs_x(kDisc), kDisc) == -8.0);
  CHECK(quadratic_combination_bound(ProfileFunction::constant(0.7), kDisc) ==
        Catch::Approx(-2.8));
}

TEST_CASE("vertical offset") {
  CHECK(sup_omega(kDisc) == Catch::Approx(1.0));
  CHECK(vertical_offset(ProfileFunction::zero(), kDisc, 0.0) == Catch::Approx(0.25));
  CHECK(vertical_offset(ProfileFunction::abs_x(kDisc), kDisc, -8.0) == Catch::Approx(4.25));

  // sup omega scales quadratically with the domain.
  const auto disc2 = ConvexProfileDomain::disc(2.0);
  CHECK(sup_omega(disc2) == Catch::Approx(4.0));
}

TEST_CASE("profile inequality holds for the constant profile f = 1/4") {
  const auto rep = verify_profile_inequality([](const Vector2d&) { return 0.25; }, kDisc, 120);
  CHECK(rep.pass());
  CHECK(rep.worst_slack >= -1e-12);
}

TEST_CASE("profile inequality fails for f = 0 with the expected witness value") {
  const auto rep = verify_profile_inequality([](const Vector2d&) { return 0.0; }, kDisc, 120);
  CHECK_FALSE(rep.pass());
  // Worst margin over the disc is -sup(omega)/8 = -1/8 at t = 1/2.
  CHECK(rep.worst_slack == Catch::Approx(-0.125).epsilon(1e-6));
  REQUIRE(rep.witness.has_value());
}

TEST_CASE("built balls pass the profile inequality and the ball conditions") {
  const auto h = heisenberg();
  struct Case {
    const char* name;
    ProfileFunction g;
  };
  const std::vector<Case> cases = {
      {"zero", ProfileFunction::zero()},
      {"abs-x", ProfileFunction::abs_x(kDisc)},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const auto ball = build_ball(c.g, kDisc);
    CHECK(verify_profile_inequality(ball, 100).pass());
    for (const auto& rep : verify_ball_conditions(h, ball.to_ball_spec(), 5000, 3)) {
      CAPTURE(rep.check, rep.worst_slack);
      CHECK(rep.pass());
    }
  }
}

TEST_CASE("cylinder ball from the zero profile has f = 1/4 everywhere") {
  const auto ball = build_ball(ProfileFunction::zero(), kDisc);
  CHECK(ball.offset == Catch::Approx(0.25));
  for (double r : {0.0, 0.3, 0.6, 0.85}) {
    const auto ext = extract_profile(ball, {r, -r * 0.5});
    CHECK(ext.z == Catch::Approx(0.25).margin(1e-8));
  }
}

TEST_CASE("profile round trip for g = |x|") {
  const auto ball = build_ball(ProfileFunction::abs_x(kDisc), kDisc);
  CHECK(ball.offset == Catch::Approx(4.25));
  double worst = 0.0;
  // Grid over 0.9 K.
  for (int i = -12; i <= 12; ++i) {
    for (int j = -12; j <= 12; ++j) {
      const Vector2d v(0.9 * i / 12.0, 0.9 * j / 12.0);
      if (!kDisc.contains(v / 0.9)) continue;
      const auto ext = extract_profile(ball, v);
      worst = std::max(worst, std::abs(ext.z - (std::abs(v.x()) + 4.25)));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("extract_profile flags points outside the projection") {
  const auto ball = build_ball(ProfileFunction::zero(), kDisc);
  CHECK_THROWS_AS(extract_profile(ball, {1.5, 0.0}), std::domain_error);
  const auto edge = extract_profile(ball, {1.0, 0.0});
  CHECK(edge.near_domain_boundary);
}

TEST_CASE("random Lipschitz grid profile builds a verified ball") {
  // A smooth trigonometric field sampled onto a grid; certified constant
  // comes from the grid slopes.
  const auto fn = [](const Vector2d& v) {
    return 0.1 * std::sin(2.0 * v.x() + 0.7) * std::cos(1.5 * v.y()) + 0.08 * std::cos(v.x() - v.y());
  };
  const auto g = ProfileFunction::sampled(fn, kDisc, 101, "random-lipschitz");
  CHECK(g.lipschitz() < 0.4);
  const auto ball = build_ball(g, kDisc);
  CHECK(verify_profile_inequality(ball, 100).pass());
  const auto h = heisenberg();
  for (const auto& rep : verify_ball_conditions(h, ball.to_ball_spec(), 4000, 5)) {
    CAPTURE(rep.check, rep.worst_slack);
    CHECK(rep.pass());
  }
}

TEST_CASE("enlarging the offset preserves the profile inequality") {
  const auto ball = build_ball(ProfileFunction::abs_x(kDisc), kDisc);
  for (double extra : {0.1, 1.0, 10.0}) {
    const auto rep = verify_profile_inequality(
        [&](const Vector2d& v) { return ball.f(v) + extra; }, kDisc, 80);
    CAPTURE(extra);
    CHECK(rep.pass());
  }
}

TEST_CASE("ball profiles are locally Lipschitz on the inner domain") {
  const auto ball = build_ball(ProfileFunction::abs_x(kDisc), kDisc);
  const auto spec3 = ball.to_ball_spec();
  // Finite-difference quotients of the extracted profile over 0.9 K.
  double worst_quotient = 0.0;
  const double h = 1e-3;
  SampleRng rng(17, 0);
  for (int i = 0; i < 200; ++i) {
    Vector2d v(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6));
    Vector2d w = v + Vector2d(rng.uniform(-h, h), rng.uniform(-h, h));
    const double fv = extract_profile(spec3, v).z;
    const double fw = extract_profile(spec3, w).z;
    if ((v - w).norm() > 0)
      worst_quotient = std::max(worst_quotient, std::abs(fv - fw) / (v - w).norm());
  }
  CHECK(worst_quotient < 10.0);
}

TEST_CASE("star shape and vertical segments of built balls") {
  const auto h = heisenberg();
  const auto ball = build_ball(ProfileFunction::abs_x(kDisc), kDisc).to_ball_spec();
  CHECK(star_shape_check(ball, 4000, 9).pass());
  CHECK(vertical_segment_check(ball, {2}, 4000, 9).pass());

  const auto eucl = euclidean_ball_candidate(h, 0.5);
  CHECK(star_shape_check(eucl, 4000, 9).pass());
  CHECK(vertical_segment_check(eucl, {2}, 4000, 9).pass());
}

TEST_CASE("star shape check rejects an annulus") {
  BallSpec annulus;
  annulus.margin = [](const Vec& p) { return std::min(1.0 - p.norm(), p.norm() - 0.5); };
  annulus.bounding_radius = 1.0;
  annulus.interior_radius = 0.0;
  annulus.sampler_box = Vec::Constant(2, 1.0);
  annulus.name = "annulus";
  const auto rep = star_shape_check(annulus, 2000, 13);
  CHECK_FALSE(rep.pass());
  REQUIRE(rep.witness.has_value());
}

TEST_CASE("polygon domains: square profile body") {
  std::vector<Vector2d> sq = {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  const auto square = ConvexProfileDomain::polygon(sq);
  CHECK(square.diameter() == Catch::Approx(2.0 * std::sqrt(2.0)));
  CHECK(square.inradius() == Catch::Approx(1.0));
  CHECK(square.contains({0.9, -0.9}));
  CHECK_FALSE(square.contains({1.1, 0.0}));
  CHECK(sup_omega(square) == Catch::Approx(2.0));  // attained at right-angle vertex pairs

  const auto ball = build_ball(ProfileFunction::zero(), square);
  CHECK(verify_profile_inequality(ball, 80).pass());
  const auto h = heisenberg();
  for (const auto& rep : verify_ball_conditions(h, ball.to_ball_spec(), 3000, 21)) {
    CAPTURE(rep.check);
    CHECK(rep.pass());
  }
}

TEST_CASE("polygon validation rejects bad vertex lists") {
  using V = std::vector<Vector2d>;
  CHECK_THROWS_AS(ConvexProfileDomain::polygon(V{{1, 0}, {-1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(ConvexProfileDomain::polygon(V{{1, 0}, {0, 1}, {-1, 0.1}, {0, -1}}),
                  std::invalid_argument);  // not symmetric
}
