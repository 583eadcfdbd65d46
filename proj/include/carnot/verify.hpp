#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carnot/gauge.hpp"
#include "carnot/graded_group.hpp"
#include "carnot/rng.hpp"

namespace carnot {

/// First failing configuration of a sampled check, with full coordinates.
struct Witness {
  std::vector<std::pair<std::string, Vec>> points;
  std::vector<std::pair<std::string, double>> scalars;
};

/// Outcome of one sampled verification. `worst_slack` is the smallest signed
/// margin seen; a sample counts as a violation when its slack drops below the
/// tolerance (default -1e-9).
struct CheckReport {
  std::string check;
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  std::optional<Witness> witness;

  bool pass() const { return violations == 0; }
};

enum class BallCheck { Compact, Interior, Symmetric, Combination };

inline std::string ball_check_name(BallCheck c) {
  switch (c) {
    case BallCheck::Compact: return "compact";
    case BallCheck::Interior: return "interior";
    case BallCheck::Symmetric: return "symmetric";
    case BallCheck::Combination: return "combination";
  }
  return "?";
}

namespace detail {

/// Rejection-samples a point with margin >= 0 from the ball's hint box.
/// Deterministic per (seed, stream) and independent of worker count.
inline bool sample_in_ball(const BallSpec& ball, std::uint64_t seed, std::uint64_t stream, Vec* out,
                           int max_attempts = 20000) {
  SampleRng rng(seed, stream);
  const int n = static_cast<int>(ball.sampler_box.size());
  Vec p(n);
  for (int a = 0; a < max_attempts; ++a) {
    for (int k = 0; k < n; ++k) p[k] = rng.uniform(-ball.sampler_box[k], ball.sampler_box[k]);
    if (ball.margin(p) >= 0.0) {
      *out = p;
      return true;
    }
  }
  return false;
}

/// Tracks the worst slack and the first (lowest-index) violation across
/// worker threads; merging is order-independent, so reports are identical
/// for any worker count. Violations are assumed rare, the common path is
/// lock-free.
class SlackTracker {
 public:
  explicit SlackTracker(double tol) : tol_(tol) {
    worst_.store(std::numeric_limits<double>::infinity());
  }

  void record(std::uint64_t index, double slack, const std::function<Witness()>& make_witness) {
    double cur = worst_.load(std::memory_order_relaxed);
    while (slack < cur && !worst_.compare_exchange_weak(cur, slack)) {
    }
    if (slack < tol_) {
      violations_.fetch_add(1, std::memory_order_relaxed);
      std::lock_guard<std::mutex> lock(mu_);
      if (index < first_index_) {
        first_index_ = index;
        witness_ = make_witness();
      }
    }
  }

  void fill(CheckReport* rep) const {
    rep->violations = violations_.load();
    rep->worst_slack = worst_.load();
    if (rep->violations > 0) rep->witness = witness_;
  }

 private:
  double tol_;
  std::atomic<double> worst_;
  std::atomic<std::uint64_t> violations_{0};
  mutable std::mutex mu_;
  std::uint64_t first_index_ = std::numeric_limits<std::uint64_t>::max();
  Witness witness_;
};

}  // namespace detail

/// Sampled verification of the homogeneous-ball characterization: membership
/// of delta_t(p) * delta_{1-t}(q) for p, q in the ball and t on a uniform
/// 21-point grid, plus symmetry, the compactness proxy (samples stay inside
/// the bounding radius) and the interior box. Deterministic given the seed.
inline std::vector<CheckReport> verify_ball_conditions(
    const GradedAlgebraSpec& spec, const BallSpec& ball, std::uint64_t n_samples,
    std::uint64_t seed, const std::vector<BallCheck>& which = {BallCheck::Compact,
                                                              BallCheck::Interior,
                                                              BallCheck::Symmetric,
                                                              BallCheck::Combination},
    double slack_tol = -1e-9, int workers = 1, int t_grid = 21) {
  std::vector<CheckReport> reports;
  std::atomic<std::uint64_t> sampling_failures{0};

  for (BallCheck c : which) {
    CheckReport rep;
    rep.check = ball_check_name(c);

    if (c == BallCheck::Interior) {
      // Deterministic probe of the certified interior box.
      detail::SlackTracker tracker(slack_tol);
      const int n = spec.dim();
      const double r = ball.interior_radius;
      std::vector<double> ticks = {-r, -0.5 * r, 0.0, 0.5 * r, r};
      std::uint64_t count = 1;
      for (int k = 0; k < n; ++k) count *= ticks.size();
      rep.samples = count;
      for (std::uint64_t code = 0; code < count; ++code) {
        std::uint64_t c2 = code;
        Vec p(n);
        for (int k = 0; k < n; ++k) {
          p[k] = ticks[c2 % ticks.size()];
          c2 /= ticks.size();
        }
        const double slack = ball.margin(p);
        tracker.record(code, slack, [&] {
          Witness w;
          w.points.emplace_back("point", p);
          w.scalars.emplace_back("margin", slack);
          return w;
        });
      }
      tracker.fill(&rep);
      reports.push_back(std::move(rep));
      continue;
    }

    detail::SlackTracker tracker(slack_tol);
    rep.samples = n_samples;
    parallel_for(n_samples, workers, [&](std::size_t i) {
      Vec p;
      if (!detail::sample_in_ball(ball, seed, 2 * i, &p)) {
        ++sampling_failures;
        return;
      }
      switch (c) {
        case BallCheck::Compact: {
          const double slack = ball.bounding_radius - p.norm();
          tracker.record(i, slack, [&] {
            Witness w;
            w.points.emplace_back("p", p);
            w.scalars.emplace_back("norm", p.norm());
            return w;
          });
          break;
        }
        case BallCheck::Symmetric: {
          const double slack = ball.margin(-p);
          tracker.record(i, slack, [&] {
            Witness w;
            w.points.emplace_back("p", p);
            w.scalars.emplace_back("margin_of_negation", slack);
            return w;
          });
          break;
        }
        case BallCheck::Combination: {
          Vec q;
          if (!detail::sample_in_ball(ball, seed, 2 * i + 1, &q)) {
            ++sampling_failures;
            return;
          }
          for (int a = 0; a < t_grid; ++a) {
            const double t = static_cast<double>(a) / (t_grid - 1);
            Vec comb;
            if (t == 0.0)
              comb = q;
            else if (t == 1.0)
              comb = p;
            else
              comb = bch_product(spec, dilate(spec, t, p), dilate(spec, 1.0 - t, q));
            const double slack = ball.margin(comb);
            tracker.record(i, slack, [&] {
              Witness w;
              w.points.emplace_back("p", p);
              w.points.emplace_back("q", q);
              w.points.emplace_back("combination", comb);
              w.scalars.emplace_back("t", t);
              w.scalars.emplace_back("margin", slack);
              return w;
            });
          }
          break;
        }
        default: break;
      }
    });
    tracker.fill(&rep);
    reports.push_back(std::move(rep));
  }

  if (sampling_failures.load() > 0) {
    CheckReport rep;
    rep.check = "rejection-sampling";
    rep.samples = n_samples;
    rep.violations = sampling_failures.load();
    rep.worst_slack = -std::numeric_limits<double>::infinity();
    reports.push_back(std::move(rep));
  }
  return reports;
}

/// Sampled verification of the homogeneous norm axioms for a gauge:
/// triangle inequality N(pq) <= N(p) + N(q), symmetry N(-p) = N(p), and
/// 1-homogeneity over lambda in {2^-10, ..., 2^10}.
inline std::vector<CheckReport> verify_norm_axioms(const GradedAlgebraSpec& spec,
                                                   const HomogeneousGauge& gauge,
                                                   std::uint64_t n_samples, std::uint64_t seed,
                                                   double slack_tol = -1e-9, int workers = 1,
                                                   double box_half_width = 1.5) {
  const int n = spec.dim();
  CheckReport triangle;
  triangle.check = "triangle";
  triangle.samples = n_samples;
  CheckReport symmetry;
  symmetry.check = "symmetry";
  symmetry.samples = n_samples;
  CheckReport homogeneity;
  homogeneity.check = "homogeneity";
  homogeneity.samples = n_samples;

  detail::SlackTracker tri_tracker(slack_tol);
  detail::SlackTracker sym_tracker(slack_tol);
  detail::SlackTracker hom_tracker(slack_tol);

  parallel_for(n_samples, workers, [&](std::size_t i) {
    SampleRng rng(seed, i);
    Vec p(n), q(n);
    for (int k = 0; k < n; ++k) p[k] = rng.uniform(-box_half_width, box_half_width);
    for (int k = 0; k < n; ++k) q[k] = rng.uniform(-box_half_width, box_half_width);

    const double np = gauge.evaluate(p);
    const double nq = gauge.evaluate(q);
    const double npq = gauge.evaluate(bch_product(spec, p, q));
    tri_tracker.record(i, np + nq - npq, [&] {
      Witness w;
      w.points.emplace_back("p", p);
      w.points.emplace_back("q", q);
      w.scalars.emplace_back("N(p)", np);
      w.scalars.emplace_back("N(q)", nq);
      w.scalars.emplace_back("N(pq)", npq);
      return w;
    });

    const double nneg = gauge.evaluate(-p);
    sym_tracker.record(i, -std::abs(np - nneg), [&] {
      Witness w;
      w.points.emplace_back("p", p);
      w.scalars.emplace_back("N(p)", np);
      w.scalars.emplace_back("N(-p)", nneg);
      return w;
    });

    if (np > 0.0) {
      double worst_rel = 0.0;
      double worst_lambda = 1.0;
      for (int e = -10; e <= 10; ++e) {
        const double lambda = std::pow(2.0, e);
        const double lhs = gauge.evaluate(dilate(spec, lambda, p));
        const double rel = std::abs(lhs - lambda * np) / (lambda * np);
        if (rel > worst_rel) {
          worst_rel = rel;
          worst_lambda = lambda;
        }
      }
      hom_tracker.record(i, -worst_rel, [&] {
        Witness w;
        w.points.emplace_back("p", p);
        w.scalars.emplace_back("lambda", worst_lambda);
        w.scalars.emplace_back("rel_error", worst_rel);
        return w;
      });
    }
  });

  tri_tracker.fill(&triangle);
  sym_tracker.fill(&symmetry);
  hom_tracker.fill(&homogeneity);
  return {triangle, symmetry, homogeneity};
}

struct EquivalenceResult {
  double c = 1.0;  // smallest empirical C with gauge1/C <= gauge2 <= C*gauge1
  std::uint64_t samples = 0;
};

/// Empirical equivalence constant between two homogeneous gauges. By
/// homogeneity it suffices to sample the unit sphere of gauge1.
inline EquivalenceResult equivalence_constants(const GradedAlgebraSpec& spec,
                                               const HomogeneousGauge& gauge1,
                                               const HomogeneousGauge& gauge2,
                                               std::uint64_t n_samples, std::uint64_t seed = 0,
                                               int workers = 1) {
  const int n = spec.dim();
  std::atomic<double> c{1.0};
  auto raise = [&c](double v) {
    double cur = c.load(std::memory_order_relaxed);
    while (v > cur && !c.compare_exchange_weak(cur, v)) {
    }
  };
  parallel_for(n_samples, workers, [&](std::size_t i) {
    SampleRng rng(seed, i);
    Vec u(n);
    for (int k = 0; k < n; ++k) u[k] = rng.next_gaussian();
    if (u.norm() == 0.0) return;
    u /= u.norm();
    const double n1 = gauge1.evaluate(u);
    if (!(n1 > 0.0)) throw std::runtime_error("equivalence_constants: gauge1 vanishes off 0");
    const Vec p = dilate(spec, 1.0 / n1, u);
    const double v = gauge2.evaluate(p);
    if (!(v > 0.0)) throw std::runtime_error("equivalence_constants: gauge2 vanishes off 0");
    raise(v);
    raise(1.0 / v);
  });
  return {c.load(), n_samples};
}

struct HolderBoundResult {
  double c = 0.0;  // smallest C with rho^{1/k1}/C <= d <= C rho^{1/k2} on sampled pairs
  std::uint64_t samples = 0;
  double epsilon = 0.0;
};

/// Empirical two-sided Holder comparison of a homogeneous distance with the
/// Euclidean metric in coordinates, for pairs closer than epsilon.
inline HolderBoundResult holder_bound_check(const GradedAlgebraSpec& spec,
                                            const HomogeneousGauge& gauge, double k1, double k2,
                                            std::uint64_t n_samples, double epsilon,
                                            std::uint64_t seed = 0, int workers = 1) {
  for (const auto& [w, ids] : spec.layers()) {
    if (w.value() < k1 - 1e-12 || w.value() > k2 + 1e-12)
      throw std::invalid_argument("holder_bound_check: layer weight outside [k1, k2]");
  }
  const int n = spec.dim();
  std::atomic<double> c{0.0};
  parallel_for(n_samples, workers, [&](std::size_t i) {
    SampleRng rng(seed, i);
    Vec p(n), dir(n);
    for (int k = 0; k < n; ++k) p[k] = rng.uniform(-1.0, 1.0);
    for (int k = 0; k < n; ++k) dir[k] = rng.next_gaussian();
    if (dir.norm() == 0.0) return;
    dir /= dir.norm();
    // Log-uniform separations so the comparison sees all scales below epsilon.
    const double rho = epsilon * std::pow(2.0, -10.0 * rng.next_double());
    const Vec q = p + rho * dir;
    const double d = distance(spec, gauge, p, q);
    if (!(d > 0.0)) return;
    const double need = std::max(d / std::pow(rho, 1.0 / k2), std::pow(rho, 1.0 / k1) / d);
    double cur = c.load(std::memory_order_relaxed);
    while (need > cur && !c.compare_exchange_weak(cur, need)) {
    }
  });
  return {c.load(), n_samples, epsilon};
}

}  // namespace carnot
