#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "carnot/gauge.hpp"
#include "carnot/graded_group.hpp"
#include "carnot/rng.hpp"

namespace carnot {

// ---------------------------------------------------------------------------
// Norms on the first layer

/// Norm on the control space V_1: Euclidean, l1, l-infinity, or the gauge of
/// a symmetric convex polygon (rank 2 only). Exposes the support function of
/// its unit ball, which is what the stretching computation needs.
class ControlNorm {
 public:
  enum class Kind { Euclidean, L1, Linf, Polygon };

  static ControlNorm euclidean() { return ControlNorm(Kind::Euclidean); }
  static ControlNorm l1() { return ControlNorm(Kind::L1); }
  static ControlNorm linf() { return ControlNorm(Kind::Linf); }
  static ControlNorm polygon(std::vector<Eigen::Vector2d> vertices) {
    ControlNorm n(Kind::Polygon);
    n.vertices_ = std::move(vertices);
    if (n.vertices_.size() < 4) throw std::invalid_argument("polygon norm: need >= 4 vertices");
    const std::size_t m = n.vertices_.size();
    for (std::size_t i = 0; i < m / 2; ++i)
      if ((n.vertices_[i] + n.vertices_[i + m / 2]).norm() > 1e-12)
        throw std::invalid_argument("polygon norm: vertices must be centrally symmetric");
    for (std::size_t i = 0; i < m; ++i) {
      const Eigen::Vector2d a = n.vertices_[i];
      const Eigen::Vector2d b = n.vertices_[(i + 1) % m];
      Eigen::Vector2d nor(b.y() - a.y(), a.x() - b.x());
      const double c = nor.dot(a);
      if (c <= 0.0) throw std::invalid_argument("polygon norm: 0 must be interior, ccw order");
      n.edge_normals_.push_back(nor / c);  // gauge(v) = max_e <normal_e, v>
    }
    return n;
  }

  Kind kind() const { return kind_; }

  double norm(const Vec& v) const {
    switch (kind_) {
      case Kind::Euclidean: return v.norm();
      case Kind::L1: return v.lpNorm<1>();
      case Kind::Linf: return v.lpNorm<Eigen::Infinity>();
      case Kind::Polygon: {
        require2(v);
        double g = 0.0;
        for (const auto& e : edge_normals_) g = std::max(g, e.x() * v[0] + e.y() * v[1]);
        return g;
      }
    }
    return 0.0;
  }

  /// A subgradient of the norm at v (the gradient wherever the norm is
  /// smooth).
  Vec subgradient(const Vec& v) const {
    switch (kind_) {
      case Kind::Euclidean: {
        const double n = v.norm();
        return n > 0.0 ? Vec(v / n) : Vec(Vec::Zero(v.size()));
      }
      case Kind::L1: {
        Vec g(v.size());
        for (int k = 0; k < v.size(); ++k) g[k] = v[k] > 0 ? 1.0 : (v[k] < 0 ? -1.0 : 0.0);
        return g;
      }
      case Kind::Linf: {
        Vec g = Vec::Zero(v.size());
        int arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        g[arg] = v[arg] >= 0 ? 1.0 : -1.0;
        return g;
      }
      case Kind::Polygon: {
        require2(v);
        double best = -std::numeric_limits<double>::infinity();
        Eigen::Vector2d arg = edge_normals_.front();
        for (const auto& e : edge_normals_) {
          const double val = e.x() * v[0] + e.y() * v[1];
          if (val > best) {
            best = val;
            arg = e;
          }
        }
        Vec g(2);
        g << arg.x(), arg.y();
        return g;
      }
    }
    return Vec::Zero(v.size());
  }

  /// Support function of the unit ball: sup{<w, v> : norm(v) <= 1}.
  double ball_support(const Vec& w) const {
    switch (kind_) {
      case Kind::Euclidean: return w.norm();
      case Kind::L1: return w.lpNorm<Eigen::Infinity>();
      case Kind::Linf: return w.lpNorm<1>();
      case Kind::Polygon: {
        require2(w);
        double s = 0.0;
        for (const auto& v : vertices_) s = std::max(s, v.x() * w[0] + v.y() * w[1]);
        return s;
      }
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::Euclidean: return "euclidean";
      case Kind::L1: return "l1";
      case Kind::Linf: return "linf";
      case Kind::Polygon: return "polygon";
    }
    return "?";
  }

 private:
  explicit ControlNorm(Kind k) : kind_(k) {}
  void require2(const Vec& v) const {
    if (v.size() != 2) throw std::invalid_argument("polygon norm: rank 2 only");
  }
  Kind kind_;
  std::vector<Eigen::Vector2d> vertices_;
  std::vector<Eigen::Vector2d> edge_normals_;
};

// ---------------------------------------------------------------------------
// Controls

/// Piecewise-constant first-layer control on [0,1] with m equal segments.
/// Columns of `values` are the segment values in first-layer coordinates.
struct ControlSignal {
  Mat values;  // r x m
  ControlNorm norm = ControlNorm::euclidean();

  int segments() const { return static_cast<int>(values.cols()); }
  int rank() const { return static_cast<int>(values.rows()); }
  double segment_length() const { return 1.0 / static_cast<double>(segments()); }

  /// The L-infinity energy: max over segments of the segment-value norm.
  double linf_energy() const {
    double e = 0.0;
    for (int j = 0; j < segments(); ++j) e = std::max(e, norm.norm(values.col(j)));
    return e;
  }
};

inline void check_control(const GradedAlgebraSpec& spec, const ControlSignal& u) {
  if (u.rank() != spec.rank())
    throw std::invalid_argument("control rank does not match the group's first layer");
  if (u.segments() < 1) throw std::invalid_argument("control needs at least one segment");
  if (!u.values.allFinite()) throw std::invalid_argument("control has non-finite values");
}

/// Splits every segment in two, keeping the values. The flow is unchanged.
inline ControlSignal refine_control(const ControlSignal& u) {
  ControlSignal out;
  out.norm = u.norm;
  out.values.resize(u.rank(), 2 * u.segments());
  for (int j = 0; j < u.segments(); ++j) {
    out.values.col(2 * j) = u.values.col(j);
    out.values.col(2 * j + 1) = u.values.col(j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// End-point maps

/// Exact end-point of the control flow: o * exp(h u_1) * ... * exp(h u_m).
/// For a left-invariant field and a constant segment value the flow is the
/// one-parameter product, so the product formula is exact up to rounding.
inline Vec endpoint(const GradedAlgebraSpec& spec, const ControlSignal& u, const Vec& o) {
  check_control(spec, u);
  spec.check_point(o);
  const double h = u.segment_length();
  Vec p = o;
  for (int j = 0; j < u.segments(); ++j)
    p = bch_product(spec, p, spec.from_first_layer(h * u.values.col(j)));
  return p;
}

namespace detail {

/// Left-invariant field evaluation f(p, w) = dL_p(iota w), expanded without
/// forming the Jacobian matrix.
inline Vec horizontal_field(const GradedAlgebraSpec& spec, const Vec& p, const Vec& w_first) {
  const Vec w = spec.from_first_layer(w_first);
  const Vec pw = spec.bracket(p, w);
  return w + 0.5 * pw + spec.bracket(p, pw) / 12.0;
}

/// Directional derivative of p -> f(p, w) in direction q.
inline Vec horizontal_field_derivative(const GradedAlgebraSpec& spec, const Vec& p,
                                       const Vec& w_first, const Vec& q) {
  const Vec w = spec.from_first_layer(w_first);
  const Vec qw = spec.bracket(q, w);
  return 0.5 * qw + (spec.bracket(q, spec.bracket(p, w)) + spec.bracket(p, qw)) / 12.0;
}

}  // namespace detail

/// Fourth-order integration of gamma' = dL_gamma(u(t)) from o. `steps` is the
/// total RK4 step budget over [0,1], distributed over the segments.
inline Vec endpoint_ode(const GradedAlgebraSpec& spec, const ControlSignal& u, const Vec& o,
                        int steps = 1000) {
  check_control(spec, u);
  spec.check_point(o);
  const int m = u.segments();
  const int per_seg = std::max(1, (steps + m - 1) / m);
  const double h = u.segment_length() / per_seg;
  Vec p = o;
  for (int j = 0; j < m; ++j) {
    const Vec w = u.values.col(j);
    for (int s = 0; s < per_seg; ++s) {
      const Vec k1 = detail::horizontal_field(spec, p, w);
      const Vec k2 = detail::horizontal_field(spec, p + 0.5 * h * k1, w);
      const Vec k3 = detail::horizontal_field(spec, p + 0.5 * h * k2, w);
      const Vec k4 = detail::horizontal_field(spec, p + h * k3, w);
      p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return p;
}

/// Differential of the end-point map restricted to the discretized control
/// space: block j holds the sensitivities of the end-point to the value of
/// segment j.
struct EndpointJacobian {
  std::vector<Mat> blocks;  // m blocks, each n x r

  Mat assembled() const {
    if (blocks.empty()) return {};
    const auto n = blocks.front().rows();
    const auto r = blocks.front().cols();
    Mat out(n, static_cast<Eigen::Index>(blocks.size()) * r);
    for (std::size_t j = 0; j < blocks.size(); ++j)
      out.middleCols(static_cast<Eigen::Index>(j) * r, r) = blocks[j];
    return out;
  }
};

/// Jacobian via the doubled-variable system: alongside p' = f(p, u), the
/// variation q' = d_p f(p, u)[q] + f(p, v) is integrated with v the indicator
/// of one segment in one coordinate direction. One matrix pass per block.
inline EndpointJacobian endpoint_jacobian(const GradedAlgebraSpec& spec, const ControlSignal& u,
                                          const Vec& o, int substeps_per_segment = 16) {
  check_control(spec, u);
  spec.check_point(o);
  const int m = u.segments();
  const int r = u.rank();
  const int n = spec.dim();
  const double hseg = u.segment_length();
  const double h = hseg / substeps_per_segment;

  EndpointJacobian jac;
  jac.blocks.reserve(m);

  for (int blk = 0; blk < m; ++blk) {
    Vec p = o;
    Mat q = Mat::Zero(n, r);
    for (int j = 0; j < m; ++j) {
      const Vec w = u.values.col(j);
      const bool active = (j == blk);
      auto rhs = [&](const Vec& pp, const Mat& qq, Vec* dp, Mat* dq) {
        *dp = detail::horizontal_field(spec, pp, w);
        for (int l = 0; l < r; ++l) {
          Vec col = detail::horizontal_field_derivative(spec, pp, w, qq.col(l));
          if (active) {
            Vec e = Vec::Zero(r);
            e[l] = 1.0;
            col += detail::horizontal_field(spec, pp, e);
          }
          dq->col(l) = col;
        }
      };
      for (int s = 0; s < substeps_per_segment; ++s) {
        Vec dp1(n), dp2(n), dp3(n), dp4(n);
        Mat dq1(n, r), dq2(n, r), dq3(n, r), dq4(n, r);
        rhs(p, q, &dp1, &dq1);
        rhs(p + 0.5 * h * dp1, q + 0.5 * h * dq1, &dp2, &dq2);
        rhs(p + 0.5 * h * dp2, q + 0.5 * h * dq2, &dp3, &dq3);
        rhs(p + h * dp3, q + h * dq3, &dp4, &dq4);
        p += (h / 6.0) * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4);
        q += (h / 6.0) * (dq1 + 2.0 * dq2 + 2.0 * dq3 + dq4);
      }
    }
    jac.blocks.push_back(q);
  }
  return jac;
}

/// Same differential through the product formula: with prefixes
/// P_j = o g_1 ... g_j and g_j = exp(h u_j), the block is
///   dR(suffix) dL(prefix) restricted to first-layer variations,
/// assembled from translation Jacobians at the identity. Exact up to
/// rounding; used by the solver and the stretching computation.
inline EndpointJacobian endpoint_jacobian_product(const GradedAlgebraSpec& spec,
                                                  const ControlSignal& u, const Vec& o) {
  check_control(spec, u);
  spec.check_point(o);
  const int m = u.segments();
  const int r = u.rank();
  const int n = spec.dim();
  const double h = u.segment_length();

  std::vector<Vec> prefix(m + 1);
  prefix[0] = o;
  std::vector<Vec> seg_points(m);
  for (int j = 0; j < m; ++j) {
    seg_points[j] = spec.from_first_layer(h * u.values.col(j));
    prefix[j + 1] = bch_product(spec, prefix[j], seg_points[j]);
  }
  const Vec& end = prefix[m];
  const Mat jr_end = right_jacobian(spec, end);

  Mat iota = Mat::Zero(n, r);
  for (int a = 0; a < r; ++a) iota(spec.first_layer()[static_cast<std::size_t>(a)], a) = 1.0;

  EndpointJacobian jac;
  jac.blocks.reserve(m);
  for (int j = 0; j < m; ++j) {
    const Mat jr_pref = right_jacobian(spec, prefix[j + 1]);
    const Mat jl_pref = left_jacobian(spec, prefix[j + 1]);
    const Mat jl_seg = left_jacobian(spec, seg_points[j]);
    jac.blocks.push_back(jr_end * jr_pref.inverse() * jl_pref * jl_seg.inverse() * (h * iota));
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Minimal stretching

namespace detail {

/// Deterministic unit-direction candidates on S^{n-1} for n <= 4.
inline std::vector<Vec> direction_grid(int n) {
  std::vector<Vec> dirs;
  if (n == 1) {
    Vec d(1);
    d << 1.0;
    dirs.push_back(d);
    dirs.push_back(-d);
    return dirs;
  }
  if (n == 2) {
    for (int i = 0; i < 720; ++i) {
      const double th = 2.0 * M_PI * i / 720.0;
      Vec d(2);
      d << std::cos(th), std::sin(th);
      dirs.push_back(d);
    }
    return dirs;
  }
  if (n == 3) {
    const int count = 2048;
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * static_cast<double>(i) / (count - 1);
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double th = golden * i;
      Vec d(3);
      d << rad * std::cos(th), rad * std::sin(th), z;
      dirs.push_back(d);
    }
    return dirs;
  }
  // n == 4: deterministic gaussian cloud.
  for (int i = 0; i < 6000; ++i) {
    SampleRng rng(0xC0FFEE, static_cast<std::uint64_t>(i));
    Vec d(4);
    for (int k = 0; k < 4; ++k) d[k] = rng.next_gaussian();
    if (d.norm() == 0.0) continue;
    dirs.push_back(d.normalized());
  }
  return dirs;
}

/// Orthonormal basis of the tangent space at unit vector d.
inline std::vector<Vec> tangent_basis(const Vec& d) {
  const int n = static_cast<int>(d.size());
  Eigen::HouseholderQR<Mat> qr(d);
  const Mat q = qr.householderQ();
  std::vector<Vec> basis;
  for (int k = 1; k < n; ++k) basis.push_back(q.col(k));
  return basis;
}

}  // namespace detail

/// Minimal stretching of the restricted differential: the inradius, in the
/// (scaled) Euclidean target norm, of the image of the product of segment
/// unit balls. The image is a Minkowski sum, so the inradius is the minimum
/// over unit directions of the summed support functions; the minimum is
/// located on a deterministic direction grid and sharpened by pattern search.
/// Supported for group dimension <= 4.
inline double minimal_stretching(const EndpointJacobian& jac, const ControlNorm& control_norm,
                                 double target_scale = 1.0) {
  if (jac.blocks.empty()) throw std::invalid_argument("minimal_stretching: empty jacobian");
  const int n = static_cast<int>(jac.blocks.front().rows());
  if (n > 4)
    throw std::invalid_argument("minimal_stretching: group dimension above 4 unsupported");

  auto f = [&](const Vec& d) {
    double s = 0.0;
    for (const auto& b : jac.blocks) s += control_norm.ball_support(b.transpose() * d);
    return s;
  };

  // Candidates: grid, coordinate axes, and the weakest left singular
  // direction of the assembled matrix.
  std::vector<std::pair<double, Vec>> ranked;
  auto consider = [&](const Vec& d) { ranked.emplace_back(f(d), d); };
  for (const auto& d : detail::direction_grid(n)) consider(d);
  for (int k = 0; k < n; ++k) {
    consider(Vec::Unit(n, k));
    consider(-Vec::Unit(n, k));
  }
  {
    Eigen::JacobiSVD<Mat> svd(jac.assembled(), Eigen::ComputeThinU);
    const Vec weak = svd.matrixU().col(svd.matrixU().cols() - 1);
    consider(weak);
    consider(-weak);
  }
  std::partial_sort(ranked.begin(), ranked.begin() + std::min<std::size_t>(8, ranked.size()),
                    ranked.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });

  // Pattern search on the sphere from the best few starts; the objective is
  // piecewise smooth, so probe many tangent directions and shrink slowly.
  double best = ranked.front().first;
  for (std::size_t s0 = 0; s0 < std::min<std::size_t>(8, ranked.size()); ++s0) {
    Vec d = ranked[s0].second;
    double val = ranked[s0].first;
    double sigma = 0.2;
    std::uint64_t epoch = 0;
    while (sigma > 1e-11) {
      const auto basis = detail::tangent_basis(d);
      bool improved = false;
      const int probes = (n == 2) ? 8 : 24;
      ++epoch;
      for (int a = 0; a < probes; ++a) {
        Vec t = Vec::Zero(n);
        if (basis.size() == 1) {
          if (a >= 2) break;
          t = (a == 0) ? basis[0] : Vec(-basis[0]);
        } else {
          SampleRng rng(0x5EED ^ (epoch << 16), static_cast<std::uint64_t>(a));
          for (const auto& b : basis) t += rng.next_gaussian() * b;
          if (t.norm() == 0.0) continue;
          t.normalize();
        }
        const Vec cand = (d + sigma * t).normalized();
        const double v = f(cand);
        if (v < val - 1e-18) {
          val = v;
          d = cand;
          improved = true;
        }
      }
      if (!improved) sigma *= 0.6;
    }
    best = std::min(best, val);
  }
  if (best < 1e-15) best = 0.0;
  return target_scale * best;
}

// ---------------------------------------------------------------------------
// Singular controls

/// Is the discretized differential rank-deficient in the stretched sense?
/// The computed stretching is a lower bound of the continuous one over all
/// bounded variations, so tau <= tol certifies singularity of the
/// discretized family.
inline bool is_singular(const GradedAlgebraSpec& spec, const ControlSignal& u, const Vec& o,
                        double tol = 1e-8) {
  return minimal_stretching(endpoint_jacobian_product(spec, u, o), u.norm) <= tol;
}

struct ScanEntry {
  Vec direction;
  double tau = 0.0;
  bool flagged = false;
};

struct ScanReport {
  std::vector<ScanEntry> entries;
  int flagged_count = 0;
};

/// Unit directions used by the constant-control scan: an angle grid for rank
/// 2, a Fibonacci sphere (poles included) for rank 3.
inline std::vector<Vec> scan_directions(int rank, int count) {
  std::vector<Vec> dirs;
  if (rank == 1) {
    Vec d(1);
    d << 1.0;
    dirs.push_back(d);
    return dirs;
  }
  if (rank == 2) {
    for (int i = 0; i < count; ++i) {
      const double th = 2.0 * M_PI * i / count;
      Vec d(2);
      d << std::cos(th), std::sin(th);
      dirs.push_back(d);
    }
    return dirs;
  }
  if (rank == 3) {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * static_cast<double>(i) / (count - 1);
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vec d(3);
      d << rad * std::cos(golden * i), rad * std::sin(golden * i), z;
      dirs.push_back(d);
    }
    return dirs;
  }
  throw std::invalid_argument("scan_directions: rank above 3 unsupported");
}

/// Scans constant controls along the given first-layer directions and flags
/// the ones whose discretized stretching drops below tol.
inline ScanReport singular_scan(const GradedAlgebraSpec& spec, const std::vector<Vec>& directions,
                                int m, double tol = 1e-8,
                                const ControlNorm& norm = ControlNorm::euclidean(),
                                int workers = 1) {
  ScanReport rep;
  rep.entries.resize(directions.size());
  parallel_for(directions.size(), workers, [&](std::size_t i) {
    ControlSignal u;
    u.norm = norm;
    u.values.resize(spec.rank(), m);
    for (int j = 0; j < m; ++j) u.values.col(j) = directions[i];
    ScanEntry e;
    e.direction = directions[i];
    e.tau = minimal_stretching(endpoint_jacobian_product(spec, u, Vec::Zero(spec.dim())), norm);
    e.flagged = e.tau <= tol;
    rep.entries[i] = std::move(e);
  });
  for (const auto& e : rep.entries) rep.flagged_count += e.flagged ? 1 : 0;
  return rep;
}

// ---------------------------------------------------------------------------
// Geodesic solver

struct GeodesicSolution {
  ControlSignal control;
  double value = 0.0;           // L-infinity energy of the returned control
  double endpoint_error = 0.0;  // Euclidean distance of End(u) to the target
  bool converged = false;
  int restarts_used = 0;
};

struct GeodesicOptions {
  int outer_iterations = 10;
  double penalty_start = 10.0;   // relative weight of the feasibility term at the start
  double penalty_growth = 10.0;
  double penalty_cap = 1e12;
  int inner_iterations = 400;
  double feasibility_tol = 1e-7;
  double power_mean_exponent = 8.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

namespace detail {

/// Augmented Lagrangian of the smoothed L-infinity energy: the power mean of
/// the segment norms plus multiplier and quadratic terms on the end-point
/// residual.
struct PenaltyObjective {
  const GradedAlgebraSpec& spec;
  const ControlNorm& norm;
  const Vec& target;
  Vec lambda;
  double mu;
  double p_exp;

  Vec residual(const ControlSignal& u) const {
    return endpoint(spec, u, Vec::Zero(spec.dim())) - target;
  }

  double power_mean(const ControlSignal& u) const {
    const int m = u.segments();
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += std::pow(norm.norm(u.values.col(j)), p_exp);
    return std::pow(s / m, 1.0 / p_exp);
  }

  double value(const ControlSignal& u) const {
    const Vec res = residual(u);
    return power_mean(u) + lambda.dot(res) + mu * res.squaredNorm();
  }

  /// Gradient with respect to the segment values.
  Mat gradient(const ControlSignal& u) const {
    const int m = u.segments();
    const int r = u.rank();
    double s = 0.0;
    std::vector<double> norms(m);
    for (int j = 0; j < m; ++j) {
      norms[j] = norm.norm(u.values.col(j));
      s += std::pow(norms[j], p_exp);
    }
    const double pm = std::pow(s / m, 1.0 / p_exp);
    Mat grad = Mat::Zero(r, m);
    if (s > 0.0) {
      for (int j = 0; j < m; ++j) {
        if (norms[j] == 0.0) continue;
        const double coeff = pm / s * std::pow(norms[j], p_exp - 1.0);
        grad.col(j) = coeff * norm.subgradient(u.values.col(j));
      }
    }
    const EndpointJacobian jac = endpoint_jacobian_product(spec, u, Vec::Zero(spec.dim()));
    const Vec w = lambda + 2.0 * mu * residual(u);
    for (int j = 0; j < m; ++j) grad.col(j) += jac.blocks[j].transpose() * w;
    return grad;
  }
};

/// Barzilai-Borwein descent with backtracking on the penalty objective.
inline void bb_descent(const PenaltyObjective& obj, ControlSignal* u, int max_iters) {
  double fx = obj.value(*u);
  Mat g = obj.gradient(*u);
  Mat x_prev = u->values;
  Mat g_prev = g;
  double alpha = 1e-2 / std::max(1.0, g.norm());
  for (int it = 0; it < max_iters; ++it) {
    const double gn = g.norm();
    if (gn <= 1e-10 * std::max(1.0, u->values.norm())) break;
    double step = alpha;
    ControlSignal trial = *u;
    double ft = 0.0;
    bool ok = false;
    for (int bt = 0; bt < 40; ++bt) {
      trial.values = u->values - step * g;
      ft = obj.value(trial);
      if (ft <= fx - 1e-4 * step * gn * gn) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;
    x_prev = u->values;
    g_prev = g;
    u->values = trial.values;
    fx = ft;
    g = obj.gradient(*u);
    const Mat sdiff = u->values - x_prev;
    const Mat ydiff = g - g_prev;
    const double sy = (sdiff.array() * ydiff.array()).sum();
    const double ss = sdiff.squaredNorm();
    alpha = (sy > 1e-18) ? std::clamp(ss / sy, 1e-8, 1e3) : step * 2.0;
  }
}

inline ControlSignal initial_control(const GradedAlgebraSpec& spec, const ControlNorm& norm,
                                     const Vec& target, int m, int restart, std::uint64_t seed) {
  const int r = spec.rank();
  ControlSignal u;
  u.norm = norm;
  u.values.resize(r, m);
  const Vec straight = spec.to_first_layer(target);
  const double scale = std::max(quasi_norm(spec, target), 0.1);
  if (restart == 0) {
    for (int j = 0; j < m; ++j) u.values.col(j) = straight;
    return u;
  }
  if (restart <= 4 && r >= 2) {
    // Rotating first-two-coordinate controls with winding +-1, +-2; these are
    // the natural oscillation modes for reaching bracket directions.
    const int winding = (restart <= 2) ? ((restart == 1) ? 1 : -1) : ((restart == 3) ? 2 : -2);
    for (int j = 0; j < m; ++j) {
      const double t = (j + 0.5) / m;
      Vec v = Vec::Zero(r);
      v[0] = scale * std::cos(2.0 * M_PI * winding * t);
      v[1] = scale * std::sin(2.0 * M_PI * winding * t);
      u.values.col(j) = v + 0.3 * straight;
    }
    return u;
  }
  SampleRng rng(seed, static_cast<std::uint64_t>(restart));
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < r; ++k) u.values(k, j) = scale * rng.next_gaussian();
  return u;
}

}  // namespace detail

/// Minimizes the L-infinity energy max_j |u_j| subject to End(u) = target,
/// through a smooth power-mean surrogate with a growing quadratic end-point
/// penalty and multi-start. The returned control is feasible to the reported
/// end-point error, so its energy certifies an upper bound on d(0, target).
inline GeodesicSolution geodesic_solve(const GradedAlgebraSpec& spec, const ControlNorm& norm,
                                       const Vec& target, int m = 32, int restarts = 20,
                                       const GeodesicOptions& opts = {}) {
  spec.check_point(target);
  if (spec.rank() == 0) throw std::invalid_argument("geodesic_solve: group has no first layer");

  std::vector<GeodesicSolution> results(restarts);
  parallel_for(static_cast<std::size_t>(restarts), opts.workers, [&](std::size_t rs) {
    ControlSignal u =
        detail::initial_control(spec, norm, target, m, static_cast<int>(rs), opts.seed);
    detail::PenaltyObjective obj{spec,
                                 norm,
                                 target,
                                 Vec::Zero(spec.dim()),
                                 0.0,
                                 opts.power_mean_exponent};
    // Scale the initial weight so the feasibility term dominates the energy
    // term from the first outer iteration; otherwise the inner solver
    // collapses the control toward the u = 0 saddle.
    const double res0 = obj.residual(u).squaredNorm();
    const double pm0 = std::max(obj.power_mean(u), 0.1);
    obj.mu = std::clamp(opts.penalty_start * pm0 / std::max(res0, 1e-8), opts.penalty_start,
                        1e8);
    double prev_res = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < opts.outer_iterations; ++outer) {
      detail::bb_descent(obj, &u, opts.inner_iterations);
      const Vec res = obj.residual(u);
      obj.lambda += 2.0 * obj.mu * res;
      const double rn = res.norm();
      if (rn > 0.25 * prev_res && obj.mu < opts.penalty_cap) obj.mu *= opts.penalty_growth;
      prev_res = rn;
      if (rn <= 1e-12) break;
    }
    GeodesicSolution sol;
    sol.control = u;
    sol.value = u.linf_energy();
    sol.endpoint_error = (endpoint(spec, u, Vec::Zero(spec.dim())) - target).norm();
    sol.converged = sol.endpoint_error <= opts.feasibility_tol;
    results[rs] = std::move(sol);
  });

  int best = 0;
  for (int i = 1; i < restarts; ++i) {
    const auto& a = results[i];
    const auto& b = results[best];
    const bool better = (a.converged && !b.converged) ||
                        (a.converged == b.converged &&
                         (a.converged ? a.value < b.value : a.endpoint_error < b.endpoint_error));
    if (better) best = i;
  }
  GeodesicSolution out = results[best];
  out.restarts_used = restarts;
  return out;
}

// ---------------------------------------------------------------------------
// Difference-quotient probes

struct QuotientProbe {
  std::vector<double> radii;
  std::vector<double> max_quotients;
};

/// Largest difference quotient of d0^2 (or d0) against the Euclidean metric
/// over point pairs inside shrinking balls around 0. Stable quotients across
/// radii indicate a Lipschitz function; growth indicates a Holder-only
/// modulus. An optional line direction restricts the probe to a ray family
/// through 0, which is where the worst modulus of homogeneous gauges lives.
inline QuotientProbe gauge_quotient_probe(const GradedAlgebraSpec& spec,
                                          const HomogeneousGauge& gauge, double radius,
                                          std::uint64_t n_pairs, std::uint64_t seed = 0,
                                          bool squared = true,
                                          std::optional<Vec> line_direction = std::nullopt,
                                          int workers = 1) {
  QuotientProbe probe;
  const int n = spec.dim();
  for (double r : {radius, radius / 2.0, radius / 4.0}) {
    std::atomic<double> worst{0.0};
    parallel_for(n_pairs, workers, [&](std::size_t i) {
      SampleRng rng(seed, i);
      Vec p(n), q(n);
      if (line_direction) {
        const Vec dir = line_direction->normalized();
        p = rng.uniform(-r, r) * dir;
        q = rng.uniform(-r, r) * dir;
      } else {
        for (int k = 0; k < n; ++k) p[k] = rng.uniform(-r, r);
        for (int k = 0; k < n; ++k) q[k] = rng.uniform(-r, r);
      }
      const double rho = (p - q).norm();
      if (rho < 1e-12) return;
      double a = gauge.evaluate(p);
      double b = gauge.evaluate(q);
      if (squared) {
        a *= a;
        b *= b;
      }
      const double quot = std::abs(a - b) / rho;
      double cur = worst.load(std::memory_order_relaxed);
      while (quot > cur && !worst.compare_exchange_weak(cur, quot)) {
      }
    });
    probe.radii.push_back(r);
    probe.max_quotients.push_back(worst.load());
  }
  return probe;
}

}  // namespace carnot
