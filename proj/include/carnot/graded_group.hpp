#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "carnot/rational.hpp"

namespace carnot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One structure constant: [e_i, e_j] takes the coefficient c on e_k.
struct BracketEntry {
  int i = 0;
  int j = 0;
  int k = 0;
  double c = 0.0;
};

/// A graded nilpotent Lie algebra given by structure constants and positive
/// rational layer weights. Group elements live in exponential coordinates of
/// the first kind, so the group product is the truncated
/// Baker-Campbell-Hausdorff polynomial, the identity is 0 and inversion is
/// coordinate negation.
class GradedAlgebraSpec {
 public:
  GradedAlgebraSpec(std::vector<Rational> weights, const std::vector<BracketEntry>& brackets)
      : weights_(std::move(weights)) {
    n_ = static_cast<int>(weights_.size());
    if (n_ <= 0) throw std::invalid_argument("GradedAlgebraSpec: empty weight list");
    if (n_ > 64) throw std::invalid_argument("GradedAlgebraSpec: dimension above 64 unsupported");
    for (const auto& w : weights_) {
      if (!w.positive()) throw std::invalid_argument("GradedAlgebraSpec: weights must be positive");
    }
    table_.assign(static_cast<std::size_t>(n_) * n_ * n_, 0.0);
    std::set<std::array<int, 3>> given;
    for (const auto& e : brackets) {
      check_index(e.i);
      check_index(e.j);
      check_index(e.k);
      table_[idx(e.i, e.j, e.k)] = e.c;
      given.insert({e.i, e.j, e.k});
    }
    // Complete antisymmetrically where only one orientation was listed.
    for (const auto& e : brackets) {
      if (!given.count({e.j, e.i, e.k})) table_[idx(e.j, e.i, e.k)] = -e.c;
    }
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          if (table_[idx(i, j, k)] != 0.0) entries_.push_back({i, j, k, table_[idx(i, j, k)]});
    build_layers();
  }

  int dim() const { return n_; }
  const std::vector<Rational>& weights() const { return weights_; }
  const Rational& weight(int k) const { return weights_[static_cast<std::size_t>(k)]; }
  /// Maximal weight of a nonzero layer.
  const Rational& step() const { return step_; }
  Rational min_weight() const { return layers_.front().first; }
  double c(int i, int j, int k) const { return table_[idx(i, j, k)]; }
  const std::vector<BracketEntry>& entries() const { return entries_; }

  /// Layers grouped by weight, ascending.
  const std::vector<std::pair<Rational, std::vector<int>>>& layers() const { return layers_; }

  /// Indices of weight exactly 1 (the horizontal layer of a stratified group).
  const std::vector<int>& first_layer() const { return first_layer_; }
  int rank() const { return static_cast<int>(first_layer_.size()); }

  Vec bracket(const Vec& u, const Vec& v) const {
    check_point(u);
    check_point(v);
    Vec out = Vec::Zero(n_);
    for (const auto& e : entries_) out[e.k] += e.c * u[e.i] * v[e.j];
    return out;
  }

  /// Matrix of ad_p = [p, .].
  Mat ad(const Vec& p) const {
    check_point(p);
    Mat a = Mat::Zero(n_, n_);
    for (const auto& e : entries_) a(e.k, e.j) += e.c * p[e.i];
    return a;
  }

  /// Embeds first-layer coordinates into the full algebra.
  Vec from_first_layer(const Vec& u) const {
    if (u.size() != rank()) throw std::invalid_argument("from_first_layer: size mismatch");
    Vec p = Vec::Zero(n_);
    for (int a = 0; a < rank(); ++a) p[first_layer_[static_cast<std::size_t>(a)]] = u[a];
    return p;
  }

  Vec to_first_layer(const Vec& p) const {
    check_point(p);
    Vec u(rank());
    for (int a = 0; a < rank(); ++a) u[a] = p[first_layer_[static_cast<std::size_t>(a)]];
    return u;
  }

  void check_point(const Vec& p) const {
    if (p.size() != n_) throw std::invalid_argument("point dimension mismatch");
  }

 private:
  void check_index(int i) const {
    if (i < 0 || i >= n_) throw std::invalid_argument("bracket index out of range");
  }
  std::size_t idx(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }
  void build_layers() {
    step_ = weights_[0];
    for (const auto& w : weights_)
      if (step_ < w) step_ = w;
    std::vector<Rational> distinct;
    for (const auto& w : weights_) {
      if (std::find(distinct.begin(), distinct.end(), w) == distinct.end()) distinct.push_back(w);
    }
    std::sort(distinct.begin(), distinct.end());
    for (const auto& w : distinct) {
      std::vector<int> ids;
      for (int k = 0; k < n_; ++k)
        if (weights_[static_cast<std::size_t>(k)] == w) ids.push_back(k);
      layers_.emplace_back(w, std::move(ids));
    }
    if (layers_.front().first == Rational(1)) first_layer_ = layers_.front().second;
  }

  int n_ = 0;
  std::vector<Rational> weights_;
  std::vector<double> table_;
  std::vector<BracketEntry> entries_;
  std::vector<std::pair<Rational, std::vector<int>>> layers_;
  std::vector<int> first_layer_;
  Rational step_ = Rational(1);
};

// ---------------------------------------------------------------------------
// Validation

struct AlgebraViolation {
  std::string kind;     // "antisymmetry" | "grading" | "jacobi" | "weight"
  std::string detail;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<AlgebraViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks antisymmetry, exact weight additivity of nonzero brackets and the
/// Jacobi identity (to tol). An empty report means the spec is a graded
/// nilpotent Lie algebra; nilpotency itself is automatic because iterated
/// brackets raise weight past the maximal one.
inline ValidationReport validate_algebra(const GradedAlgebraSpec& spec, double tol = 1e-12) {
  ValidationReport rep;
  const int n = spec.dim();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double s = spec.c(i, j, k) + spec.c(j, i, k);
        if (std::abs(s) > tol) {
          rep.violations.push_back({"antisymmetry",
                                    "c(" + std::to_string(i) + "," + std::to_string(j) + "," +
                                        std::to_string(k) + ") + c(" + std::to_string(j) + "," +
                                        std::to_string(i) + "," + std::to_string(k) + ") != 0",
                                    std::abs(s)});
        }
        if (std::abs(spec.c(i, j, k)) > tol &&
            spec.weight(k) != spec.weight(i) + spec.weight(j)) {
          rep.violations.push_back({"grading",
                                    "bracket [" + std::to_string(i) + "," + std::to_string(j) +
                                        "] hits index " + std::to_string(k) + " of weight " +
                                        spec.weight(k).str() + " != " +
                                        (spec.weight(i) + spec.weight(j)).str(),
                                    std::abs(spec.c(i, j, k))});
        }
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    Vec ei = Vec::Zero(n);
    ei[i] = 1.0;
    for (int j = i + 1; j < n; ++j) {
      Vec ej = Vec::Zero(n);
      ej[j] = 1.0;
      for (int k = j + 1; k < n; ++k) {
        Vec ek = Vec::Zero(n);
        ek[k] = 1.0;
        const Vec cyc = spec.bracket(ei, spec.bracket(ej, ek)) +
                        spec.bracket(ej, spec.bracket(ek, ei)) +
                        spec.bracket(ek, spec.bracket(ei, ej));
        const double m = cyc.lpNorm<Eigen::Infinity>();
        if (m > tol) {
          rep.violations.push_back({"jacobi",
                                    "triple (" + std::to_string(i) + "," + std::to_string(j) +
                                        "," + std::to_string(k) + ")",
                                    m});
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Group operations

namespace detail {
inline void require_truncation_valid(const GradedAlgebraSpec& spec) {
  // The product below keeps Dynkin terms through order 4. Five-letter
  // brackets have weight >= 5 * min weight and must vanish.
  const Rational five = Rational(5) * spec.min_weight();
  if (five <= spec.step())
    throw std::domain_error("group step too large for the order-4 product formula");
}
}  // namespace detail

/// Group product in exponential coordinates of the first kind:
/// p*q = p + q + [p,q]/2 + [p,[p,q]]/12 + [q,[q,p]]/12 - [q,[p,[p,q]]]/24,
/// exact for groups of step at most 4.
inline Vec bch_product(const GradedAlgebraSpec& spec, const Vec& p, const Vec& q) {
  spec.check_point(p);
  spec.check_point(q);
  detail::require_truncation_valid(spec);
  const Vec pq = spec.bracket(p, q);
  Vec out = p + q + 0.5 * pq;
  const Vec ppq = spec.bracket(p, pq);
  const Vec qpq = spec.bracket(q, pq);
  out += (ppq - qpq) / 12.0;
  out -= spec.bracket(q, ppq) / 24.0;
  return out;
}

inline Vec group_inverse(const Vec& p) { return -p; }

/// delta_lambda(p): coordinate k scales by lambda^{w_k}.
inline Vec dilate(const GradedAlgebraSpec& spec, double lambda, const Vec& p) {
  spec.check_point(p);
  if (!(lambda > 0.0)) throw std::domain_error("dilate: lambda must be positive");
  Vec out(p.size());
  for (int k = 0; k < spec.dim(); ++k) out[k] = std::pow(lambda, spec.weight(k).value()) * p[k];
  return out;
}

/// Generator of the dilation flow at p: coordinate k multiplied by w_k.
inline Vec delta_bar(const GradedAlgebraSpec& spec, const Vec& p) {
  spec.check_point(p);
  Vec out(p.size());
  for (int k = 0; k < spec.dim(); ++k) out[k] = spec.weight(k).value() * p[k];
  return out;
}

/// Homogeneous quasi-norm max_i |p_i|^{1/w_i} over layers (Euclidean norm of
/// each layer block). Exactly 1-homogeneous for the dilations.
inline double quasi_norm(const GradedAlgebraSpec& spec, const Vec& p) {
  spec.check_point(p);
  double out = 0.0;
  for (const auto& [w, ids] : spec.layers()) {
    double s = 0.0;
    for (int k : ids) s += p[k] * p[k];
    out = std::max(out, std::pow(std::sqrt(s), 1.0 / w.value()));
  }
  return out;
}

/// Differential at the identity of q -> p*q. Exact for step <= 4.
inline Mat left_jacobian(const GradedAlgebraSpec& spec, const Vec& p) {
  detail::require_truncation_valid(spec);
  const Mat a = spec.ad(p);
  return Mat::Identity(spec.dim(), spec.dim()) + 0.5 * a + (a * a) / 12.0;
}

/// Differential at the identity of q -> q*p. Exact for step <= 4.
inline Mat right_jacobian(const GradedAlgebraSpec& spec, const Vec& p) {
  detail::require_truncation_valid(spec);
  const Mat a = spec.ad(p);
  return Mat::Identity(spec.dim(), spec.dim()) - 0.5 * a + (a * a) / 12.0;
}

inline std::pair<Mat, Mat> translation_jacobians(const GradedAlgebraSpec& spec, const Vec& p) {
  return {left_jacobian(spec, p), right_jacobian(spec, p)};
}

// ---------------------------------------------------------------------------
// Algebraic span checks

struct SpanCheckResult {
  bool holds = false;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Tests whether dL_p(V_1) + dR_p(V_1) + span{delta_bar(p)} is the whole
/// tangent space. The point is first dilated onto the unit quasi-sphere, so
/// the verdict is invariant under dilations of p, and the threshold is
/// relative to the largest singular value of the assembled matrix.
inline SpanCheckResult tangent_span_check(const GradedAlgebraSpec& spec, const Vec& p,
                                          double tol = 1e-8) {
  spec.check_point(p);
  const int n = spec.dim();
  const int r = spec.rank();
  Vec q = p;
  const double eta = quasi_norm(spec, p);
  if (eta > 0.0) q = dilate(spec, 1.0 / eta, p);
  const Mat dl = left_jacobian(spec, q);
  const Mat dr = right_jacobian(spec, q);
  Mat cols(n, 2 * r + 1);
  for (int a = 0; a < r; ++a) {
    cols.col(a) = dl.col(spec.first_layer()[static_cast<std::size_t>(a)]);
    cols.col(r + a) = dr.col(spec.first_layer()[static_cast<std::size_t>(a)]);
  }
  cols.col(2 * r) = delta_bar(spec, q);
  Eigen::JacobiSVD<Mat> svd(cols);
  SpanCheckResult res;
  res.sigma_max = svd.singularValues()(0);
  res.sigma_min = svd.singularValues()(std::min<int>(n, 2 * r + 1) - 1);
  if (2 * r + 1 < n) res.sigma_min = 0.0;
  res.holds = res.sigma_min > tol * res.sigma_max;
  return res;
}

namespace detail {
inline bool spans_whole_space(const Mat& cols, int n, double tol) {
  Eigen::JacobiSVD<Mat> svd(cols);
  if (cols.cols() < n) return false;
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(n - 1);
  return smax > 0.0 && smin > tol * smax;
}
}  // namespace detail

/// Does V_1 + [X, V_1] span the algebra? Necessary for the tangent span
/// condition at exp(X) when X lies in the first layer.
inline bool first_layer_bracket_spans(const GradedAlgebraSpec& spec, const Vec& x,
                                      double tol = 1e-8) {
  spec.check_point(x);
  const int n = spec.dim();
  const int r = spec.rank();
  Mat cols(n, 2 * r);
  for (int a = 0; a < r; ++a) {
    Vec ea = Vec::Zero(n);
    ea[spec.first_layer()[static_cast<std::size_t>(a)]] = 1.0;
    cols.col(a) = ea;
    cols.col(r + a) = spec.bracket(x, ea);
  }
  return detail::spans_whole_space(cols, n, tol);
}

/// Does V_1 + span{Z} span the algebra? Z is expected in the top layer.
inline bool top_vector_spans(const GradedAlgebraSpec& spec, const Vec& z, double tol = 1e-8) {
  spec.check_point(z);
  const int n = spec.dim();
  const int r = spec.rank();
  Mat cols(n, r + 1);
  for (int a = 0; a < r; ++a) {
    Vec ea = Vec::Zero(n);
    ea[spec.first_layer()[static_cast<std::size_t>(a)]] = 1.0;
    cols.col(a) = ea;
  }
  cols.col(r) = z;
  return detail::spans_whole_space(cols, n, tol);
}

// ---------------------------------------------------------------------------
// Built-in groups

/// R^2 with weights (w1, w2) and no bracket.
inline GradedAlgebraSpec abelian_plane(int w1, int w2) {
  return GradedAlgebraSpec({Rational(w1), Rational(w2)}, {});
}

/// Basis X, Y, Z with [X, Y] = Z, weights (1, 1, 2).
inline GradedAlgebraSpec heisenberg() {
  return GradedAlgebraSpec({Rational(1), Rational(1), Rational(2)}, {{0, 1, 2, 1.0}});
}

/// Appends a commuting weight-1 generator to an existing group.
inline GradedAlgebraSpec product_with_line(const GradedAlgebraSpec& spec) {
  std::vector<Rational> w = spec.weights();
  w.push_back(Rational(1));
  std::vector<BracketEntry> entries = spec.entries();
  return GradedAlgebraSpec(std::move(w), entries);
}

/// Heisenberg with an extra central weight-1 generator S (coordinates
/// x, y, z, s).
inline GradedAlgebraSpec heisenberg_times_line() { return product_with_line(heisenberg()); }

/// Basis X1..X4 with [X1, X2] = X3, [X1, X3] = X4, weights (1, 1, 2, 3).
inline GradedAlgebraSpec engel() {
  return GradedAlgebraSpec({Rational(1), Rational(1), Rational(2), Rational(3)},
                           {{0, 1, 2, 1.0}, {0, 2, 3, 1.0}});
}

}  // namespace carnot
