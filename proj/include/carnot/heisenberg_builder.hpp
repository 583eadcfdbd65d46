#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "carnot/gauge.hpp"
#include "carnot/graded_group.hpp"
#include "carnot/rng.hpp"
#include "carnot/verify.hpp"

namespace carnot {

using Eigen::Vector2d;

/// Symmetric convex planar body used as the horizontal projection of a
/// Heisenberg ball: a disc or a symmetric convex polygon.
class ConvexProfileDomain {
 public:
  static ConvexProfileDomain disc(double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("disc: radius must be positive");
    ConvexProfileDomain d;
    d.is_disc_ = true;
    d.radius_ = radius;
    return d;
  }

  /// Vertices in counterclockwise order; the list must be centrally
  /// symmetric (vertex i + count/2 is the negation of vertex i).
  static ConvexProfileDomain polygon(std::vector<Vector2d> vertices) {
    ConvexProfileDomain d;
    d.is_disc_ = false;
    d.vertices_ = std::move(vertices);
    const auto& v = d.vertices_;
    const std::size_t m = v.size();
    if (m < 4 || m % 2 != 0)
      throw std::invalid_argument("polygon: need an even vertex count >= 4");
    for (std::size_t i = 0; i < m / 2; ++i) {
      if ((v[i] + v[i + m / 2]).norm() > 1e-12)
        throw std::invalid_argument("polygon: vertex list is not centrally symmetric");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const Vector2d a = v[(i + 1) % m] - v[i];
      const Vector2d b = v[(i + 2) % m] - v[(i + 1) % m];
      if (a.x() * b.y() - a.y() * b.x() <= 0.0)
        throw std::invalid_argument("polygon: vertices must be strictly convex ccw");
    }
    // Halfplane representation <n_e, x> <= c_e with unit normals.
    for (std::size_t i = 0; i < m; ++i) {
      const Vector2d a = v[i];
      const Vector2d b = v[(i + 1) % m];
      Vector2d n(b.y() - a.y(), a.x() - b.x());
      n.normalize();
      d.normals_.push_back(n);
      d.offsets_.push_back(n.dot(a));
      if (d.offsets_.back() <= 0.0)
        throw std::invalid_argument("polygon: 0 must be an interior point");
    }
    return d;
  }

  /// Signed Euclidean margin: >= 0 inside, 0 on the boundary.
  double margin(const Vector2d& v) const {
    if (is_disc_) return radius_ - v.norm();
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < normals_.size(); ++e)
      m = std::min(m, offsets_[e] - normals_[e].dot(v));
    return m;
  }

  bool contains(const Vector2d& v) const { return margin(v) >= 0.0; }

  double diameter() const {
    if (is_disc_) return 2.0 * radius_;
    double d = 0.0;
    for (const auto& a : vertices_)
      for (const auto& b : vertices_) d = std::max(d, (a - b).norm());
    return d;
  }

  double bounding_radius() const {
    if (is_disc_) return radius_;
    double r = 0.0;
    for (const auto& a : vertices_) r = std::max(r, a.norm());
    return r;
  }

  double inradius() const {
    if (is_disc_) return radius_;
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < normals_.size(); ++e) r = std::min(r, offsets_[e]);
    return r;
  }

  /// Boundary point at parameter u in [0, 1): angle for discs, perimeter
  /// interpolation for polygons.
  Vector2d boundary_point(double u) const {
    u -= std::floor(u);
    if (is_disc_) {
      const double th = 2.0 * M_PI * u;
      return {radius_ * std::cos(th), radius_ * std::sin(th)};
    }
    const double s = u * static_cast<double>(vertices_.size());
    const auto i = static_cast<std::size_t>(s);
    const double frac = s - static_cast<double>(i);
    const Vector2d a = vertices_[i % vertices_.size()];
    const Vector2d b = vertices_[(i + 1) % vertices_.size()];
    return a + frac * (b - a);
  }

  /// Extreme points for maximizing bilinear forms: polygon vertices (exact)
  /// or an angle grid on the circle.
  std::vector<Vector2d> extreme_points(int circle_count = 720) const {
    std::vector<Vector2d> out;
    if (is_disc_) {
      out.reserve(circle_count);
      for (int i = 0; i < circle_count; ++i)
        out.push_back(boundary_point(static_cast<double>(i) / circle_count));
    } else {
      out = vertices_;
    }
    return out;
  }

  bool is_disc() const { return is_disc_; }
  double disc_radius() const { return radius_; }
  const std::vector<Vector2d>& vertices() const { return vertices_; }

  /// Deterministic point cloud on K: half boundary, half interior rejection
  /// samples keyed by (seed, index).
  std::vector<Vector2d> sample_points(int count, std::uint64_t seed = 0) const {
    std::vector<Vector2d> pts;
    pts.reserve(count);
    const int nb = count / 2;
    for (int i = 0; i < nb; ++i)
      pts.push_back(boundary_point(static_cast<double>(i) / nb));
    const double r = bounding_radius();
    for (int i = nb; i < count; ++i) {
      SampleRng rng(seed, static_cast<std::uint64_t>(i));
      Vector2d v;
      do {
        v = {rng.uniform(-r, r), rng.uniform(-r, r)};
      } while (!contains(v));
      pts.push_back(v);
    }
    return pts;
  }

 private:
  ConvexProfileDomain() = default;
  bool is_disc_ = true;
  double radius_ = 1.0;
  std::vector<Vector2d> vertices_;
  std::vector<Vector2d> normals_;
  std::vector<double> offsets_;
};

/// Scalar profile on a domain K, with a certified Lipschitz constant and a
/// certified bound on |g|. Closed forms carry caller-certified constants;
/// grid profiles estimate them from the grid.
class ProfileFunction {
 public:
  static ProfileFunction closed_form(std::function<double(const Vector2d&)> fn, double lipschitz,
                                     double sup_abs, std::string name = "closed-form") {
    ProfileFunction p;
    p.fn_ = std::move(fn);
    p.lipschitz_ = lipschitz;
    p.sup_abs_ = sup_abs;
    p.name_ = std::move(name);
    return p;
  }

  static ProfileFunction zero() {
    return closed_form([](const Vector2d&) { return 0.0; }, 0.0, 0.0, "zero");
  }

  static ProfileFunction constant(double c) {
    return closed_form([c](const Vector2d&) { return c; }, 0.0, std::abs(c), "const");
  }

  /// g(x, y) = |x| on a domain of bounding radius r: L = 1, sup = r.
  static ProfileFunction abs_x(const ConvexProfileDomain& k) {
    return closed_form([](const Vector2d& v) { return std::abs(v.x()); }, 1.0,
                       k.bounding_radius(), "abs-x");
  }

  /// Bilinear interpolation of node values on a regular grid covering
  /// [-hw, hw]^2. The Lipschitz constant is the maximal adjacent-node slope
  /// times a 1.05 safety factor; sup_abs is the largest node magnitude.
  static ProfileFunction grid(double half_width, Mat values, std::string name = "grid") {
    if (values.rows() < 2 || values.cols() < 2)
      throw std::invalid_argument("grid profile: need at least 2x2 nodes");
    ProfileFunction p;
    p.grid_values_ = std::move(values);
    p.grid_hw_ = half_width;
    p.name_ = std::move(name);
    const auto& g = p.grid_values_;
    const double hx = 2.0 * half_width / static_cast<double>(g.rows() - 1);
    const double hy = 2.0 * half_width / static_cast<double>(g.cols() - 1);
    double slope = 0.0;
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) {
        if (i + 1 < g.rows()) slope = std::max(slope, std::abs(g(i + 1, j) - g(i, j)) / hx);
        if (j + 1 < g.cols()) slope = std::max(slope, std::abs(g(i, j + 1) - g(i, j)) / hy);
      }
    p.lipschitz_ = 1.05 * slope;
    p.sup_abs_ = g.cwiseAbs().maxCoeff();
    p.is_grid_ = true;
    return p;
  }

  /// Samples fn onto an n x n grid over the domain's bounding box.
  static ProfileFunction sampled(const std::function<double(const Vector2d&)>& fn,
                                 const ConvexProfileDomain& k, int n, std::string name = "grid") {
    const double hw = k.bounding_radius();
    Mat values(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = -hw + 2.0 * hw * static_cast<double>(i) / (n - 1);
        const double y = -hw + 2.0 * hw * static_cast<double>(j) / (n - 1);
        values(i, j) = fn({x, y});
      }
    return grid(hw, std::move(values), std::move(name));
  }

  double operator()(const Vector2d& v) const {
    if (!is_grid_) return fn_(v);
    const int nx = static_cast<int>(grid_values_.rows());
    const int ny = static_cast<int>(grid_values_.cols());
    const double sx = (v.x() + grid_hw_) / (2.0 * grid_hw_) * (nx - 1);
    const double sy = (v.y() + grid_hw_) / (2.0 * grid_hw_) * (ny - 1);
    const int i = std::clamp(static_cast<int>(std::floor(sx)), 0, nx - 2);
    const int j = std::clamp(static_cast<int>(std::floor(sy)), 0, ny - 2);
    const double fx = std::clamp(sx - i, 0.0, 1.0);
    const double fy = std::clamp(sy - j, 0.0, 1.0);
    return grid_values_(i, j) * (1 - fx) * (1 - fy) + grid_values_(i + 1, j) * fx * (1 - fy) +
           grid_values_(i, j + 1) * (1 - fx) * fy + grid_values_(i + 1, j + 1) * fx * fy;
  }

  double lipschitz() const { return lipschitz_; }
  double sup_abs() const { return sup_abs_; }
  const std::string& name() const { return name_; }
  bool is_grid() const { return is_grid_; }
  const Mat& grid_values() const { return grid_values_; }
  double grid_half_width() const { return grid_hw_; }

 private:
  std::function<double(const Vector2d&)> fn_;
  bool is_grid_ = false;
  Mat grid_values_;
  double grid_hw_ = 0.0;
  double lipschitz_ = 0.0;
  double sup_abs_ = 0.0;
  std::string name_;
};

/// omega(v, w) = v1 w2 - v2 w1, the symplectic form feeding the bracket
/// coordinate of the Heisenberg product.
inline double omega(const Vector2d& v, const Vector2d& w) {
  return v.x() * w.y() - v.y() * w.x();
}

/// A = -2 L diam(K) - 4 sup|g|: a lower bound making
/// g(tv+(1-t)w) - t^2 g(v) - (1-t)^2 g(w) >= A t(1-t) for Lipschitz g.
inline double quadratic_combination_bound(const ProfileFunction& g, const ConvexProfileDomain& k) {
  return -2.0 * g.lipschitz() * k.diameter() - 4.0 * g.sup_abs();
}

/// sup of omega over K x K, via extreme points (exact for polygons, an angle
/// grid of 720 points for discs).
inline double sup_omega(const ConvexProfileDomain& k, int circle_count = 720) {
  const auto pts = k.extreme_points(circle_count);
  double s = 0.0;
  for (const auto& v : pts)
    for (const auto& w : pts) s = std::max(s, omega(v, w));
  return s;
}

/// Offset b = sup_{v,w} (omega(v,w)/2 - A)/2 = sup(omega)/4 - A/2, so that
/// f = g + b satisfies the combination inequality.
inline double vertical_offset(const ProfileFunction& g, const ConvexProfileDomain& k, double a) {
  return 0.25 * sup_omega(k) - 0.5 * a;
}

/// Heisenberg unit-ball candidate {v + zZ : v in K, -f(-v) <= z <= f(v)}
/// with f = g + b.
struct HeisenbergBall {
  ConvexProfileDomain domain;
  ProfileFunction profile;      // g
  double offset = 0.0;          // b

  double f(const Vector2d& v) const { return profile(v) + offset; }

  double margin(const Vec& p) const {
    const Vector2d v(p[0], p[1]);
    const double z = p[2];
    return std::min({domain.margin(v), f(v) - z, z + f(-v)});
  }

  double profile_bound() const { return offset + profile.sup_abs(); }

  BallSpec to_ball_spec() const {
    BallSpec ball;
    const HeisenbergBall self = *this;
    ball.margin = [self](const Vec& p) { return self.margin(p); };
    const double rk = domain.bounding_radius();
    const double fmax = profile_bound();
    ball.bounding_radius = std::hypot(rk, fmax);
    const double fmin = offset - profile.sup_abs();
    ball.interior_radius = std::max(0.0, 0.99 * std::min(domain.inradius() / std::sqrt(2.0), fmin));
    ball.sampler_box = Vec(3);
    ball.sampler_box << rk, rk, fmax;
    ball.name = "heis-" + profile.name();
    return ball;
  }
};

/// Builds the homogeneous ball of a Lipschitz profile g over K by computing
/// the quadratic bound A and the offset b = sup(omega)/4 - A/2.
inline HeisenbergBall build_ball(const ProfileFunction& g, const ConvexProfileDomain& k) {
  const double a = quadratic_combination_bound(g, k);
  const double b = vertical_offset(g, k, a);
  if (!(b - g.sup_abs() > 0.0))
    throw std::runtime_error("build_ball: offset does not clear sup|g|; profile constants are "
                             "inconsistent");
  return {k, g, b};
}

/// Grid verification of
///   f(tv+(1-t)w) - t^2 f(v) - (1-t)^2 f(w) - t(1-t)/2 omega(v,w) >= 0
/// over sampled point pairs of K and a uniform t grid. This inequality
/// characterizes profiles whose body is a homogeneous unit ball.
inline CheckReport verify_profile_inequality(const std::function<double(const Vector2d&)>& f,
                                             const ConvexProfileDomain& k, int n_points = 200,
                                             int t_grid = 21, double slack_tol = -1e-9,
                                             int workers = 1, std::uint64_t seed = 0) {
  CheckReport rep;
  rep.check = "profile-inequality";
  const auto pts = k.sample_points(n_points, seed);
  rep.samples = static_cast<std::uint64_t>(pts.size()) * pts.size() * t_grid;
  detail::SlackTracker tracker(slack_tol);
  parallel_for(pts.size(), workers, [&](std::size_t i) {
    const Vector2d v = pts[i];
    const double fv = f(v);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const Vector2d w = pts[j];
      const double fw = f(w);
      const double om = omega(v, w);
      for (int a = 0; a < t_grid; ++a) {
        const double t = static_cast<double>(a) / (t_grid - 1);
        const double margin =
            f(t * v + (1.0 - t) * w) - t * t * fv - (1.0 - t) * (1.0 - t) * fw -
            0.5 * t * (1.0 - t) * om;
        const std::uint64_t index = (i * pts.size() + j) * t_grid + a;
        tracker.record(index, margin, [&] {
          Witness wit;
          Vec vv(2), ww(2);
          vv << v.x(), v.y();
          ww << w.x(), w.y();
          wit.points.emplace_back("v", vv);
          wit.points.emplace_back("w", ww);
          wit.scalars.emplace_back("t", t);
          wit.scalars.emplace_back("margin", margin);
          return wit;
        });
      }
    }
  });
  tracker.fill(&rep);
  return rep;
}

inline CheckReport verify_profile_inequality(const HeisenbergBall& ball, int n_points = 200,
                                             int t_grid = 21, double slack_tol = -1e-9,
                                             int workers = 1) {
  return verify_profile_inequality([&ball](const Vector2d& v) { return ball.f(v); }, ball.domain,
                                   n_points, t_grid, slack_tol, workers);
}

struct ProfileExtent {
  double z = 0.0;
  bool near_domain_boundary = false;
};

/// max{z : v + zZ in ball} by bisection. Requires (v, 0) inside the ball
/// (true for every valid homogeneous ball when v lies in the projection).
inline ProfileExtent extract_profile(const BallSpec& ball, const Vector2d& v,
                                     double domain_margin = std::numeric_limits<double>::infinity(),
                                     double abs_tol = 1e-9) {
  Vec p(3);
  p << v.x(), v.y(), 0.0;
  if (!ball.contains(p))
    throw std::domain_error("extract_profile: point is outside the ball's projection");
  double lo = 0.0;
  double hi = ball.bounding_radius + 1.0;
  Vec q = p;
  q[2] = hi;
  // hi is outside by the bounding radius; bisect the crossing.
  for (int it = 0; it < 200 && (hi - lo) > abs_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    q[2] = mid;
    if (ball.contains(q))
      lo = mid;
    else
      hi = mid;
  }
  ProfileExtent res;
  res.z = 0.5 * (lo + hi);
  res.near_domain_boundary = domain_margin < 1e-9;
  return res;
}

inline ProfileExtent extract_profile(const HeisenbergBall& ball, const Vector2d& v,
                                     double abs_tol = 1e-9) {
  return extract_profile(ball.to_ball_spec(), v, ball.domain.margin(v), abs_tol);
}

/// Checks p in B implies t p in B (Euclidean segments to the origin) on a
/// uniform t grid, for rejection-sampled p.
inline CheckReport star_shape_check(const BallSpec& ball, std::uint64_t n_samples,
                                    std::uint64_t seed, double slack_tol = -1e-9, int workers = 1,
                                    int t_grid = 21) {
  CheckReport rep;
  rep.check = "star-shape";
  rep.samples = n_samples;
  detail::SlackTracker tracker(slack_tol);
  parallel_for(n_samples, workers, [&](std::size_t i) {
    Vec p;
    if (!detail::sample_in_ball(ball, seed, i, &p)) return;
    for (int a = 0; a < t_grid; ++a) {
      const double t = static_cast<double>(a) / (t_grid - 1);
      const double slack = ball.margin(t * p);
      tracker.record(i * t_grid + a, slack, [&] {
        Witness w;
        w.points.emplace_back("p", p);
        w.scalars.emplace_back("t", t);
        w.scalars.emplace_back("margin", slack);
        return w;
      });
    }
  });
  tracker.fill(&rep);
  return rep;
}

/// Checks v + zZ in B implies v + szZ in B for s in [0, 1], scaling the
/// coordinates listed in vertical (the top layer).
inline CheckReport vertical_segment_check(const BallSpec& ball, const std::vector<int>& vertical,
                                          std::uint64_t n_samples, std::uint64_t seed,
                                          double slack_tol = -1e-9, int workers = 1,
                                          int s_grid = 21) {
  CheckReport rep;
  rep.check = "vertical-segment";
  rep.samples = n_samples;
  detail::SlackTracker tracker(slack_tol);
  parallel_for(n_samples, workers, [&](std::size_t i) {
    Vec p;
    if (!detail::sample_in_ball(ball, seed, i, &p)) return;
    for (int a = 0; a < s_grid; ++a) {
      const double s = static_cast<double>(a) / (s_grid - 1);
      Vec q = p;
      for (int k : vertical) q[k] = s * p[k];
      const double slack = ball.margin(q);
      tracker.record(i * s_grid + a, slack, [&] {
        Witness w;
        w.points.emplace_back("p", p);
        w.scalars.emplace_back("s", s);
        w.scalars.emplace_back("margin", slack);
        return w;
      });
    }
  });
  tracker.fill(&rep);
  return rep;
}

}  // namespace carnot
