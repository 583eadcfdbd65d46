#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "carnot/graded_group.hpp"

namespace carnot {

/// Candidate unit ball given as a membership oracle with a signed margin
/// (margin >= 0 means inside). The bounds certify a rejection-sampling box
/// and the compactness/interior checks.
struct BallSpec {
  std::function<double(const Vec&)> margin;
  double bounding_radius = 0.0;  // Euclidean bound in coordinates
  double interior_radius = 0.0;  // coordinate box of this radius should be inside
  Vec sampler_box;               // per-coordinate half-widths for rejection sampling
  std::string name;

  bool contains(const Vec& p) const { return margin(p) >= 0.0; }
};

/// One-homogeneous gauge: evaluate(delta_lambda p) = lambda * evaluate(p).
struct HomogeneousGauge {
  std::function<double(const Vec&)> evaluate;
  std::string provenance;  // "closed-form" | "from-ball"
  std::string name;

  double operator()(const Vec& p) const { return evaluate(p); }
};

/// The quasi-norm max_i |p_i|^{1/w_i} as a gauge. It is 1-homogeneous and
/// symmetric but only satisfies a multiplicative triangle inequality, so it
/// is exposed as a gauge, not certified as a norm.
inline HomogeneousGauge box_gauge(const GradedAlgebraSpec& spec) {
  return {[spec](const Vec& p) { return quasi_norm(spec, p); }, "closed-form", "box"};
}

/// |p|^{1/w} for a group whose weights all equal w (e.g. Euclidean norm on an
/// abelian group of weight 1).
inline HomogeneousGauge euclidean_gauge(const GradedAlgebraSpec& spec) {
  const Rational w0 = spec.weights().front();
  for (const auto& w : spec.weights())
    if (w != w0) throw std::invalid_argument("euclidean_gauge: weights are not all equal");
  const double e = 1.0 / w0.value();
  return {[e](const Vec& p) { return std::pow(p.norm(), e); }, "closed-form", "euclidean"};
}

/// ((x^2+y^2)^2 + 16 z^2)^{1/4} on the Heisenberg group.
inline HomogeneousGauge koranyi_gauge() {
  return {[](const Vec& p) {
            if (p.size() != 3) throw std::invalid_argument("koranyi_gauge: expects dimension 3");
            const double r2 = p[0] * p[0] + p[1] * p[1];
            return std::pow(r2 * r2 + 16.0 * p[2] * p[2], 0.25);
          },
          "closed-form", "koranyi"};
}

/// sqrt(N(p)^2 + t^2) on G x R, where t is the appended last coordinate.
/// This is the product metric of a factor gauge with the line.
inline HomogeneousGauge product_gauge(const HomogeneousGauge& factor, int factor_dim) {
  return {[factor, factor_dim](const Vec& p) {
            if (p.size() != factor_dim + 1)
              throw std::invalid_argument("product_gauge: dimension mismatch");
            const double a = factor.evaluate(p.head(factor_dim));
            const double t = p[factor_dim];
            return std::sqrt(a * a + t * t);
          },
          "closed-form", factor.name + "-x-line"};
}

inline HomogeneousGauge scaled_gauge(const HomogeneousGauge& g, double c) {
  if (!(c > 0.0)) throw std::domain_error("scaled_gauge: factor must be positive");
  return {[g, c](const Vec& p) { return c * g.evaluate(p); }, g.provenance, g.name + "-scaled"};
}

/// Left-invariant distance of a gauge: d(p, q) = gauge(p^{-1} * q).
inline double distance(const GradedAlgebraSpec& spec, const HomogeneousGauge& gauge, const Vec& p,
                       const Vec& q) {
  return gauge.evaluate(bch_product(spec, group_inverse(p), q));
}

/// Coordinate Euclidean ball of radius r as a homogeneous-ball candidate.
inline BallSpec euclidean_ball_candidate(const GradedAlgebraSpec& spec, double r) {
  if (!(r > 0.0)) throw std::domain_error("euclidean_ball_candidate: radius must be positive");
  const int n = spec.dim();
  BallSpec ball;
  ball.margin = [r](const Vec& p) { return r - p.norm(); };
  ball.bounding_radius = r;
  ball.interior_radius = 0.99 * r / std::sqrt(static_cast<double>(n));
  ball.sampler_box = Vec::Constant(n, r);
  ball.name = "euclidean-r" + std::to_string(r);
  return ball;
}

/// Sublevel set {gauge <= 1} packaged as a ball. The caller certifies the
/// Euclidean bounds (they depend on the gauge's equivalence constants).
inline BallSpec ball_from_gauge(const HomogeneousGauge& gauge, int dim, double bounding_radius,
                                double interior_radius) {
  BallSpec ball;
  ball.margin = [gauge](const Vec& p) { return 1.0 - gauge.evaluate(p); };
  ball.bounding_radius = bounding_radius;
  ball.interior_radius = interior_radius;
  ball.sampler_box = Vec::Constant(dim, bounding_radius);
  ball.name = gauge.name + "-ball";
  return ball;
}

namespace detail {

struct GaugeRayBracket {
  double t_in = 0.0;   // delta_{1/t_in} p inside
  double t_out = 0.0;  // delta_{1/t_out} p outside
};

inline GaugeRayBracket bracket_gauge_ray(const GradedAlgebraSpec& spec, const BallSpec& ball,
                                         const Vec& p) {
  GaugeRayBracket b;
  // Initial guesses from the certified interior box and bounding radius.
  double t = std::max(quasi_norm(spec, p), 1e-300);
  double t_in = t;
  bool found_in = false;
  for (int k = 0; k < 600; ++k) {
    if (ball.contains(dilate(spec, 1.0 / t_in, p))) {
      found_in = true;
      break;
    }
    t_in *= 2.0;
  }
  double t_out = t;
  bool found_out = false;
  for (int k = 0; k < 600; ++k) {
    t_out *= 0.5;
    if (!ball.contains(dilate(spec, 1.0 / t_out, p))) {
      found_out = true;
      break;
    }
  }
  if (!found_in || !found_out)
    throw std::runtime_error("gauge_from_ball: dilation ray never crosses the ball boundary "
                             "(invalid ball)");
  b.t_in = t_in;
  b.t_out = t_out;
  return b;
}

}  // namespace detail

/// Radial gauge of a ball: N(p) = inf{t > 0 : delta_{1/t} p in ball}, by
/// bisection along the dilation ray. For the unit ball of a homogeneous norm
/// this reproduces the norm. Relative tolerance 1e-10, at most 200 bisection
/// steps.
inline double gauge_from_ball_value(const GradedAlgebraSpec& spec, const BallSpec& ball,
                                    const Vec& p, double rel_tol = 1e-10) {
  spec.check_point(p);
  if (p.lpNorm<Eigen::Infinity>() == 0.0) return 0.0;
  auto [t_in, t_out] = detail::bracket_gauge_ray(spec, ball, p);
  for (int it = 0; it < 200 && (t_in - t_out) > rel_tol * t_in; ++it) {
    const double mid = 0.5 * (t_in + t_out);
    if (ball.contains(dilate(spec, 1.0 / mid, p)))
      t_in = mid;
    else
      t_out = mid;
  }
  return 0.5 * (t_in + t_out);
}

inline HomogeneousGauge gauge_from_ball(const GradedAlgebraSpec& spec, const BallSpec& ball,
                                        double rel_tol = 1e-10) {
  return {[spec, ball, rel_tol](const Vec& p) {
            return gauge_from_ball_value(spec, ball, p, rel_tol);
          },
          "from-ball", ball.name + "-gauge"};
}

}  // namespace carnot
