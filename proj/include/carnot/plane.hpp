#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "carnot/gauge.hpp"
#include "carnot/graded_group.hpp"

namespace carnot {

using Eigen::Vector2d;

// Constructions on the plane with weights (2, 2): the dilation of factor t
// scales both coordinates by t^2, so the ball combination point
// delta_t(p) * delta_{1-t}(q) is the parabola arc t^2 p + (1-t)^2 q.

/// t^2 p + (1-t)^2 q.
inline Vector2d combination_curve(const Vector2d& p, const Vector2d& q, double t) {
  return t * t * p + (1.0 - t) * (1.0 - t) * q;
}

/// Barycentric containment test for the closed triangle {0, p, q}.
inline bool in_triangle(const Vector2d& x, const Vector2d& p, const Vector2d& q,
                        double tol = 1e-12) {
  const double det = p.x() * q.y() - p.y() * q.x();
  if (std::abs(det) < 1e-15) {
    // Degenerate triangle: fall back to a segment/box bound.
    return x.norm() <= std::max(p.norm(), q.norm()) + tol;
  }
  const double a = (x.x() * q.y() - x.y() * q.x()) / det;
  const double b = (p.x() * x.y() - p.y() * x.x()) / det;
  return a >= -tol && b >= -tol && a + b <= 1.0 + tol;
}

/// Region {(x, y) : |x| <= eps, y <= beta + C sqrt|x|}. For 0 < eps <= alpha
/// and 0 < C <= beta / sqrt(alpha) it is closed under the (2,2) combination
/// curve. The window is advisory: membership works regardless, window_ok()
/// reports whether the closure guarantee applies.
struct SqrtCapRegion {
  double eps = 1.0;
  double beta = 1.0;
  double c = 1.0;
  double alpha = 1.0;

  double margin(const Vector2d& p) const {
    return std::min(eps - std::abs(p.x()), beta + c * std::sqrt(std::abs(p.x())) - p.y());
  }
  bool contains(const Vector2d& p) const { return margin(p) >= 0.0; }

  bool window_ok() const {
    return eps > 0.0 && c > 0.0 && eps <= alpha && c <= beta / std::sqrt(alpha);
  }
};

/// The classic one-parameter family: |x| <= 1, y <= 1 + C sqrt|x|.
inline SqrtCapRegion classic_sqrt_cap(double c) { return {1.0, 1.0, c, 1.0}; }

/// Worst combination height for boundary points p = (-px, beta + C sqrt(px)),
/// q = (qx, beta + C sqrt(qx)) of the classic region, evaluated at the
/// crossing parameter of the vertical axis:
///   1 + sqrt(px qx) (-2 + C (sqrt(qx) + sqrt(px))) / (sqrt(qx) + sqrt(px))^2.
inline double sqrt_cap_worst_height(double c, double px, double qx) {
  const double sp = std::sqrt(px);
  const double sq = std::sqrt(qx);
  return 1.0 + sp * sq * (-2.0 + c * (sq + sp)) / ((sq + sp) * (sq + sp));
}

/// Packages a sqrt-cap region as a (non-compact) candidate set for the
/// sampled combination check; the sampler box clips it from below.
inline BallSpec sqrt_cap_ball(const SqrtCapRegion& r, double depth = 4.0) {
  BallSpec ball;
  ball.margin = [r](const Vec& p) {
    return r.margin(Vector2d(p[0], p[1]));
  };
  ball.bounding_radius = std::numeric_limits<double>::infinity();
  ball.interior_radius = 0.5 * std::min({r.eps, r.beta});
  ball.sampler_box = Vec(2);
  ball.sampler_box << r.eps, std::max(r.beta + r.c * std::sqrt(r.eps), depth);
  ball.name = "sqrt-cap";
  return ball;
}

// ---------------------------------------------------------------------------
// Weierstrass-type 1/2-Holder profile

/// Sum_{k=0}^{terms} 2^{-k/2} cos(2^k t). 2 pi periodic; the dyadic
/// frequencies give square-root type oscillation at every scale above
/// 2^{-terms}.
inline double weierstrass_sum(double t, int terms) {
  if (terms < 1) throw std::invalid_argument("weierstrass_sum: need at least one term");
  double s = 0.0;
  double amp = 1.0;
  double freq = 1.0;
  for (int k = 0; k <= terms; ++k) {
    s += amp * std::cos(freq * t);
    amp *= 0.7071067811865475244;  // 2^{-1/2}
    freq *= 2.0;
  }
  return s;
}

/// Certified 1/2-Holder constant on a 2^log2_points grid over [0, 2pi]:
/// the maximum of |f(t)-f(s)| / sqrt|t-s| over all grid pairs at separations
/// 2^j and 3 * 2^j (covering each octave twice), times a 1.15 safety factor
/// so the certificate dominates off-grid pairs as well.
template <typename F>
double certify_half_holder(const F& f, int log2_points = 16) {
  const std::size_t n = std::size_t{1} << log2_points;
  const double h = 2.0 * M_PI / static_cast<double>(n);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(h * static_cast<double>(i));
  double worst = 0.0;
  auto scan = [&](std::size_t gap) {
    const double root = std::sqrt(h * static_cast<double>(gap));
    for (std::size_t i = 0; i + gap <= n; ++i)
      worst = std::max(worst, std::abs(vals[i + gap] - vals[i]) / root);
  };
  for (int gap_log = 0; gap_log <= log2_points; ++gap_log) {
    scan(std::size_t{1} << gap_log);
    if ((std::size_t{3} << gap_log) <= n) scan(std::size_t{3} << gap_log);
  }
  return 1.15 * worst;
}

/// Affine normalization of a periodic profile onto the range [m, M], using
/// a dense scan for the empirical extrema. Returns the map t -> a f(t) + b.
struct NormalizedProfile {
  double scale = 1.0;
  double shift = 0.0;
  int terms = 24;

  double operator()(double t) const { return scale * weierstrass_sum(t, terms) + shift; }
};

inline NormalizedProfile normalize_weierstrass(int terms, double m, double big_m,
                                               int scan_points = 1 << 18) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i <= scan_points; ++i) {
    const double t = 2.0 * M_PI * static_cast<double>(i) / scan_points;
    const double v = weierstrass_sum(t, terms);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  NormalizedProfile p;
  p.terms = terms;
  p.scale = (big_m - m) / (hi - lo);
  p.shift = m - p.scale * lo;
  return p;
}

// ---------------------------------------------------------------------------
// Fractal ball

/// Parameters of the rotated-region intersection ball. The profile f must
/// satisfy m <= f <= M and |f(t)-f(s)| <= L sqrt|t-s|; C sits in the window
/// L sqrt(2)/sqrt(m) <= C <= m / sqrt(2 M theta0) and theta0 is small enough
/// that |theta|/2 <= |sin theta| <= 2|theta| on [-theta0, theta0].
struct FractalBallParams {
  double m = 1.0;
  double big_m = 1.2;
  double holder_l = 0.0;  // certified 1/2-Holder constant of f
  double c = 0.0;
  double theta0 = 0.0;
  int s_grid = 41;  // odd count of rotation angles in [-theta0/2, theta0/2]
  std::function<double(double)> f;

  bool window_ok() const {
    return holder_l * std::sqrt(2.0) / std::sqrt(m) <= c &&
           c <= m / std::sqrt(2.0 * big_m * theta0) && theta0 > 0.0 && theta0 <= 1.89 &&
           s_grid >= 3 && s_grid % 2 == 1;
  }
};

/// Fills the window-derived parameters: C is the midpoint of the admissible
/// interval at the small-angle bound, then theta0 = min(small-angle bound,
/// (m/C)^2 / (2M)).
inline FractalBallParams default_fractal_params(int terms = 24, double m = 1.0,
                                                double big_m = 1.2, int s_grid = 41) {
  FractalBallParams p;
  p.m = m;
  p.big_m = big_m;
  p.s_grid = s_grid;
  const auto prof = normalize_weierstrass(terms, m, big_m);
  p.f = prof;
  p.holder_l = certify_half_holder(prof);
  const double theta_sa = 1.89;  // sin(theta) >= theta/2 holds up to ~1.8955
  const double c_lo = p.holder_l * std::sqrt(2.0) / std::sqrt(m);
  const double c_hi = m / std::sqrt(2.0 * big_m * theta_sa);
  if (c_lo > c_hi)
    throw std::runtime_error("default_fractal_params: empty parameter window (profile too rough)");
  p.c = 0.5 * (c_lo + c_hi);
  p.theta0 = std::min(theta_sa, (m / p.c) * (m / p.c) / (2.0 * big_m));
  return p;
}

/// The finite intersection over the rotation grid of the rotated sqrt-cap
/// regions and their negations. Each factor is closed under the (2,2)
/// combination curve, hence so is the intersection; the polar curve
/// f(pi/2+t) (cos, sin)(pi/2+t) lies on the boundary at grid angles.
class FractalBall {
 public:
  explicit FractalBall(FractalBallParams params) : params_(std::move(params)) {
    if (!params_.window_ok())
      throw std::invalid_argument("FractalBall: parameter window violated");
    const int n = params_.s_grid;
    angles_.reserve(n);
    regions_.reserve(n);
    for (int i = 0; i < n; ++i) {
      const double s = (n == 1) ? 0.0
                                : -0.5 * params_.theta0 +
                                      params_.theta0 * static_cast<double>(i) / (n - 1);
      angles_.push_back(s);
      SqrtCapRegion r;
      r.eps = 2.0 * params_.big_m * params_.theta0;
      r.beta = params_.f(M_PI / 2.0 + s);
      r.c = params_.c;
      r.alpha = r.eps;
      // Region window: C <= beta / sqrt(eps) is implied by beta >= m and
      // C <= m / sqrt(2 M theta0); check it anyway with the actual values.
      if (!(r.c <= r.beta / std::sqrt(r.eps) + 1e-12))
        throw std::invalid_argument("FractalBall: region window violated at a grid angle");
      regions_.push_back(r);
    }
  }

  const FractalBallParams& params() const { return params_; }
  const std::vector<double>& angles() const { return angles_; }

  double margin(const Vector2d& p) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      const double cs = std::cos(angles_[i]);
      const double sn = std::sin(angles_[i]);
      const Vector2d back(cs * p.x() + sn * p.y(), -sn * p.x() + cs * p.y());
      m = std::min(m, regions_[i].margin(back));
      if (m < -1.0) break;  // early out, margins only get reported near 0
      m = std::min(m, regions_[i].margin(-back));
      if (m < -1.0) break;
    }
    return m;
  }

  bool contains(const Vector2d& p) const { return margin(p) >= 0.0; }

  /// Polar boundary curve phi(pi/2 + t) for |t| <= theta0/2.
  Vector2d boundary_arc(double t) const {
    const double a = M_PI / 2.0 + t;
    return params_.f(a) * Vector2d(std::cos(a), std::sin(a));
  }

  /// Graph parametrization (t, f(pi/2 + t)) of the same arc; box dimension
  /// is preserved by the polar reparametrization away from 0.
  Vector2d graph_point(double t) const { return {t, params_.f(M_PI / 2.0 + t)}; }

  BallSpec to_ball_spec() const {
    BallSpec ball;
    const FractalBall self = *this;
    ball.margin = [self](const Vec& p) { return self.margin(Vector2d(p[0], p[1])); };
    // In every rotated frame |x_s| <= eps, and the cap with its negation give
    // |y_s| <= M + C sqrt(eps), so any member satisfies the hypot bound.
    const double eps = regions_.front().eps;
    const double cap = params_.big_m + params_.c * std::sqrt(eps);
    ball.bounding_radius = std::hypot(eps, cap);
    ball.interior_radius = 0.5 * std::min(eps, params_.m) / std::sqrt(2.0);
    ball.sampler_box = Vec::Constant(2, ball.bounding_radius);
    ball.name = "fractal-ball";
    return ball;
  }

 private:
  FractalBallParams params_;
  std::vector<double> angles_;
  std::vector<SqrtCapRegion> regions_;
};

inline FractalBall build_fractal_ball(const FractalBallParams& params) {
  return FractalBall(params);
}

// ---------------------------------------------------------------------------
// The kinked-sqrt ball: Lipschitz boundary, non-Lipschitz gauge

/// Upper profile f(x) = 1 for x <= 0 and 1 + sqrt(x) for x > 0.
inline double sqrt_kink_profile(double x) { return x <= 0.0 ? 1.0 : 1.0 + std::sqrt(x); }

/// B = {|x| <= 1, -f(-x) <= y <= f(x)}: the unit ball of a homogeneous
/// (2,2)-distance whose boundary is a Lipschitz graph near (0,1) only in a
/// tilted direction, while the gauge is 1/2-Holder there.
inline BallSpec sqrt_kink_ball() {
  BallSpec ball;
  ball.margin = [](const Vec& p) {
    const double x = p[0];
    const double y = p[1];
    return std::min({1.0 - std::abs(x), sqrt_kink_profile(x) - y, y + sqrt_kink_profile(-x)});
  };
  ball.bounding_radius = std::hypot(1.0, 2.0);
  ball.interior_radius = 0.45;
  ball.sampler_box = Vec(2);
  ball.sampler_box << 1.0, 2.0;
  ball.name = "sqrt-kink";
  return ball;
}

inline bool sqrt_kink_ball_contains(const Vector2d& p) {
  Vec v(2);
  v << p.x(), p.y();
  return sqrt_kink_ball().margin(v) >= 0.0;
}

}  // namespace carnot
