#include <catch2/catch_amalgamated.hpp>

#include "carnot/graded_group.hpp"
#include "support/test_util.hpp"

using namespace carnot;

namespace {

std::vector<GradedAlgebraSpec> builtin_groups() {
  return {abelian_plane(1, 1), heisenberg(), heisenberg_times_line(), engel()};
}

Vec pt(std::initializer_list<double> xs) {
  Vec p(static_cast<int>(xs.size()));
  int k = 0;
  for (double x : xs) p[k++] = x;
  return p;
}

}  // namespace

TEST_CASE("validate_algebra accepts the built-in groups") {
  for (const auto& g : builtin_groups()) {
    const auto rep = validate_algebra(g);
    CAPTURE(g.dim());
    CHECK(rep.ok());
  }
}

TEST_CASE("validate_algebra flags a grading violation") {
  // Heisenberg with an extra bracket [X, Z] = Y: weight(Y) = 1 != 1 + 2.
  GradedAlgebraSpec broken({Rational(1), Rational(1), Rational(2)},
                           {{0, 1, 2, 1.0}, {0, 2, 1, 1.0}});
  const auto rep = validate_algebra(broken);
  REQUIRE_FALSE(rep.ok());
  bool has_grading = false;
  for (const auto& v : rep.violations) has_grading |= (v.kind == "grading");
  CHECK(has_grading);
}

TEST_CASE("validate_algebra flags an antisymmetry violation") {
  GradedAlgebraSpec broken({Rational(1), Rational(1), Rational(2)},
                           {{0, 1, 2, 1.0}, {1, 0, 2, 1.0}});
  const auto rep = validate_algebra(broken);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.violations.front().kind == "antisymmetry");
}

TEST_CASE("validate_algebra flags a Jacobi violation") {
  // [e0,e1]=e2, [e0,e2]=e3, [e1,e3]=e4: grading and antisymmetry hold, but
  // cycle(e0,e1,e2) = [e0,0] + [e1,-e3] + [e2,e2] = -e4 != 0.
  GradedAlgebraSpec jac(
      {Rational(1), Rational(1), Rational(2), Rational(3), Rational(4)},
      {{0, 1, 2, 1.0}, {0, 2, 3, 1.0}, {1, 3, 4, 1.0}});
  const auto rep = validate_algebra(jac);
  REQUIRE_FALSE(rep.ok());
  bool has_jacobi = false;
  for (const auto& v : rep.violations) has_jacobi |= (v.kind == "jacobi");
  CHECK(has_jacobi);
  for (const auto& v : rep.violations) CHECK(v.kind == "jacobi");
}

TEST_CASE("bch product on the Heisenberg group") {
  const auto h = heisenberg();
  const Vec p = pt({1, 0, 0});
  const Vec q = pt({0, 1, 0});
  const Vec r = bch_product(h, p, q);
  CHECK(r[0] == Catch::Approx(1.0));
  CHECK(r[1] == Catch::Approx(1.0));
  CHECK(r[2] == Catch::Approx(0.5));
}

TEST_CASE("inverse is negation in exponential coordinates") {
  for (const auto& g : builtin_groups()) {
    SampleRng rng(7, static_cast<std::uint64_t>(g.dim()));
    for (int i = 0; i < 50; ++i) {
      const Vec p = test::random_point(g.dim(), rng);
      const Vec z = bch_product(g, p, group_inverse(p));
      CHECK(z.lpNorm<Eigen::Infinity>() < 1e-14);
    }
  }
}

TEST_CASE("bch product on the Engel group matches the order-3 expansion") {
  // Hand expansion: e1*e2 = e1 + e2 + [e1,e2]/2 + [e1,[e1,e2]]/12 + [e2,[e2,e1]]/12
  //               = (1, 1, 1/2, 1/12) with [e1,e2]=e3, [e1,e3]=e4, [e2,e3]=0.
  const auto g = engel();
  const Vec r = bch_product(g, pt({1, 0, 0, 0}), pt({0, 1, 0, 0}));
  CHECK(r[0] == Catch::Approx(1.0));
  CHECK(r[1] == Catch::Approx(1.0));
  CHECK(r[2] == Catch::Approx(0.5));
  CHECK(r[3] == Catch::Approx(1.0 / 12.0));
}

TEST_CASE("bch product is associative on random triples") {
  for (const auto& g : builtin_groups()) {
    SampleRng rng(11, static_cast<std::uint64_t>(g.dim()));
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const Vec p = test::random_point(g.dim(), rng);
      const Vec q = test::random_point(g.dim(), rng);
      const Vec r = test::random_point(g.dim(), rng);
      const Vec a = bch_product(g, bch_product(g, p, q), r);
      const Vec b = bch_product(g, p, bch_product(g, q, r));
      worst = std::max(worst, (a - b).lpNorm<Eigen::Infinity>());
    }
    CAPTURE(g.dim());
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("dilations") {
  const auto h = heisenberg();
  const Vec p = dilate(h, 2.0, pt({1, 1, 1}));
  CHECK(p[0] == Catch::Approx(2.0));
  CHECK(p[1] == Catch::Approx(2.0));
  CHECK(p[2] == Catch::Approx(4.0));

  const Vec q = pt({0.3, -0.7, 0.2});
  CHECK((dilate(h, 1.0, q) - q).norm() == 0.0);

  CHECK_THROWS_AS(dilate(h, 0.0, q), std::domain_error);
  CHECK_THROWS_AS(dilate(h, -1.0, q), std::domain_error);

  // delta_lambda . delta_mu = delta_{lambda mu}
  const Vec a = dilate(h, 0.3, dilate(h, 5.0, q));
  const Vec b = dilate(h, 1.5, q);
  CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("delta_bar scales coordinates by their weights") {
  const auto g12 = abelian_plane(1, 2);
  const Vec d = delta_bar(g12, pt({3, 5}));
  CHECK(d[0] == Catch::Approx(3.0));
  CHECK(d[1] == Catch::Approx(10.0));
  CHECK(delta_bar(g12, pt({0, 0})).norm() == 0.0);
}

TEST_CASE("dilations are group homomorphisms") {
  for (const auto& g : builtin_groups()) {
    SampleRng rng(13, static_cast<std::uint64_t>(g.dim()));
    double worst = 0.0;
    for (int i = 0; i < 300; ++i) {
      const Vec p = test::random_point(g.dim(), rng);
      const Vec q = test::random_point(g.dim(), rng);
      for (double lambda : {0.1, 1.0, 7.3}) {
        const Vec a = dilate(g, lambda, bch_product(g, p, q));
        const Vec b = bch_product(g, dilate(g, lambda, p), dilate(g, lambda, q));
        worst = std::max(worst, (a - b).lpNorm<Eigen::Infinity>());
      }
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("translation Jacobians: abelian groups give the identity") {
  const auto g = abelian_plane(1, 1);
  const auto [dl, dr] = translation_jacobians(g, pt({0.4, -2.0}));
  CHECK((dl - Mat::Identity(2, 2)).norm() == 0.0);
  CHECK((dr - Mat::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("translation Jacobians on the Heisenberg group") {
  const auto h = heisenberg();
  const Vec p = pt({0.3, -1.2, 0.7});
  const auto [dl, dr] = translation_jacobians(h, p);
  // Column for X: (1, 0, -p_y/2) on the left, (1, 0, +p_y/2) on the right.
  CHECK(dl(0, 0) == Catch::Approx(1.0));
  CHECK(dl(1, 0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(dl(2, 0) == Catch::Approx(-p[1] / 2.0));
  CHECK(dr(2, 0) == Catch::Approx(p[1] / 2.0));
  CHECK(dl(2, 1) == Catch::Approx(p[0] / 2.0));
}

TEST_CASE("translation Jacobians match central finite differences") {
  for (const auto& g : builtin_groups()) {
    SampleRng rng(17, static_cast<std::uint64_t>(g.dim()));
    for (int i = 0; i < 20; ++i) {
      const Vec p = test::random_point(g.dim(), rng);
      const auto [dl, dr] = translation_jacobians(g, p);
      const Mat fdl = test::fd_left_jacobian(g, p);
      const Mat fdr = test::fd_right_jacobian(g, p);
      CHECK((dl - fdl).norm() / dl.norm() <= 1e-7);
      CHECK((dr - fdr).norm() / dr.norm() <= 1e-7);
    }
  }
}

TEST_CASE("tangent span check on the Heisenberg group") {
  const auto h = heisenberg();
  CHECK(tangent_span_check(h, pt({1, 0, 0})).holds);
  CHECK(tangent_span_check(h, pt({0, 0, 1})).holds);
  CHECK(tangent_span_check(h, pt({0.2, -0.1, 0.05})).holds);
  CHECK_FALSE(tangent_span_check(h, pt({0, 0, 0})).holds);
}

TEST_CASE("tangent span check fails along the extra line of H x R") {
  const auto g = heisenberg_times_line();
  // p = exp(s S): left and right translations coincide and the center of H
  // stays unreachable.
  CHECK_FALSE(tangent_span_check(g, pt({0, 0, 0, 0.8})).holds);
  CHECK_FALSE(tangent_span_check(g, pt({0, 0, 0, -2.0})).holds);
  // Generic points are fine.
  CHECK(tangent_span_check(g, pt({0.5, 0.1, 0.3, 0.8})).holds);
}

TEST_CASE("first layer bracket span check") {
  const auto h = heisenberg();
  CHECK(first_layer_bracket_spans(h, pt({1, 0, 0})));
  CHECK(first_layer_bracket_spans(h, pt({0.3, -0.4, 0})));
  CHECK_FALSE(first_layer_bracket_spans(h, pt({0, 0, 0})));

  const auto g = engel();
  Vec x2 = Vec::Zero(4);
  x2[1] = 1.0;
  CHECK_FALSE(first_layer_bracket_spans(g, x2));  // [X2, V1] = span{X3}, X4 missing
  Vec x1 = Vec::Zero(4);
  x1[0] = 1.0;
  CHECK_FALSE(first_layer_bracket_spans(g, x1));  // [X1, V1] = span{X3} only; X4 missing
}

TEST_CASE("top vector span check") {
  const auto h = heisenberg();
  CHECK(top_vector_spans(h, pt({0, 0, 1})));
  CHECK_FALSE(top_vector_spans(h, pt({0, 0, 0})));

  const auto g = engel();
  Vec z = Vec::Zero(4);
  z[3] = 1.0;
  CHECK_FALSE(top_vector_spans(g, z));  // X3 missing from V1 + span{X4}
}

TEST_CASE("span condition implies the first-layer bracket condition") {
  for (const auto& g : builtin_groups()) {
    SampleRng rng(23, static_cast<std::uint64_t>(g.dim()));
    for (int i = 0; i < 100; ++i) {
      Vec u(g.rank());
      for (int a = 0; a < g.rank(); ++a) u[a] = rng.uniform(-2.0, 2.0);
      const Vec x = g.from_first_layer(u);
      if (tangent_span_check(g, x).holds) {
        CHECK(first_layer_bracket_spans(g, x));
      }
    }
  }
}

TEST_CASE("quasi norm") {
  const auto h = heisenberg();
  CHECK(quasi_norm(h, pt({0, 0, 4})) == Catch::Approx(2.0));
  CHECK(quasi_norm(h, pt({3, 0, 0})) == Catch::Approx(3.0));
  const Vec p = pt({1, 0, 1});
  for (double lambda : {0.25, 2.0, 11.0}) {
    CHECK(quasi_norm(h, dilate(h, lambda, p)) ==
          Catch::Approx(lambda * quasi_norm(h, p)).epsilon(1e-12));
  }
}

TEST_CASE("bch product rejects mismatched dimensions") {
  const auto h = heisenberg();
  CHECK_THROWS_AS(bch_product(h, pt({1, 0}), pt({0, 1, 0})), std::invalid_argument);
}

TEST_CASE("product_with_line appends a commuting weight-1 generator") {
  const auto g = heisenberg_times_line();
  CHECK(g.dim() == 4);
  CHECK(g.rank() == 3);                       // X, Y and the new line generator
  CHECK(g.first_layer() == std::vector<int>({0, 1, 3}));
  const Vec a = pt({0, 0, 0, 1});
  const Vec b = pt({1, 0, 0, 0});
  const Vec ab = bch_product(g, a, b);
  const Vec ba = bch_product(g, b, a);
  CHECK((ab - ba).lpNorm<Eigen::Infinity>() < 1e-15);  // the line is central
}
