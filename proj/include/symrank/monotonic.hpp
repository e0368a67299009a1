#ifndef SYMRANK_MONOTONIC_HPP
#define SYMRANK_MONOTONIC_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "symrank/core.hpp"
#include "symrank/expression.hpp"

namespace symrank {

enum class Direction { Increasing, Decreasing };

inline const char* to_string(Direction d) { return d == Direction::Increasing ? "increasing" : "decreasing"; }

struct MonotoneSegment {
  Expression expr;  // univariate in x1
  Direction direction = Direction::Increasing;
};

inline constexpr std::size_t kMonotoneCheckGrid = 101;
inline constexpr double kBisectionTolerance = 1e-10;
inline constexpr double kBreakpointTolerance = 1e-12;

/// Univariate map that is strictly monotone on each piece of
/// [domain.lo, b_1), [b_1, b_2), ..., [b_k, domain.hi].
class PiecewiseMonotone {
 public:
  static PiecewiseMonotone make(Interval domain, std::vector<double> breakpoints, std::vector<MonotoneSegment> segments) {
    if (!std::isfinite(domain.lo) || !std::isfinite(domain.hi) || !(domain.lo < domain.hi))
      throw Error(ErrorKind::InvalidTransform, "domain must be a finite interval with lo < hi");
    if (segments.size() != breakpoints.size() + 1)
      throw Error(ErrorKind::InvalidTransform, "need exactly one segment more than breakpoints");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
      if (!(breakpoints[i] > domain.lo && breakpoints[i] < domain.hi))
        throw Error(ErrorKind::InvalidTransform, "breakpoints must lie strictly inside the domain");
      if (i > 0 && !(breakpoints[i] > breakpoints[i - 1]))
        throw Error(ErrorKind::InvalidTransform, "breakpoints must be strictly ascending");
    }
    for (std::size_t i = 1; i < segments.size(); ++i)
      if (segments[i].direction == segments[i - 1].direction)
        throw Error(ErrorKind::InvalidTransform,
                    "adjacent segments " + std::to_string(i - 1) + " and " + std::to_string(i) +
                        " share a direction; merge them");
    PiecewiseMonotone t;
    t.domain_ = Interval{domain.lo, domain.hi, true, true};
    t.breakpoints_ = std::move(breakpoints);
    t.segments_ = std::move(segments);
    for (std::size_t s = 0; s < t.segments_.size(); ++s) t.check_segment(s);
    return t;
  }

  /// Single strictly monotone piece over the whole domain.
  static PiecewiseMonotone single(Interval domain, Expression expr, Direction dir) {
    return make(domain, {}, {MonotoneSegment{std::move(expr), dir}});
  }

  const Interval& domain() const noexcept { return domain_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<MonotoneSegment>& segments() const noexcept { return segments_; }

  double segment_lo(std::size_t s) const { return s == 0 ? domain_.lo : breakpoints_[s - 1]; }
  double segment_hi(std::size_t s) const { return s == breakpoints_.size() ? domain_.hi : breakpoints_[s]; }

  Interval segment_interval(std::size_t s) const {
    return Interval{segment_lo(s), segment_hi(s), true, s == breakpoints_.size()};
  }

  std::size_t segment_of(double x) const {
    return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin());
  }

  double operator()(double x) const { return segments_[segment_of(x)].expr(x); }

  /// Segment index wholly containing [lo, hi], if one exists.
  std::optional<std::size_t> segment_containing(double lo, double hi) const {
    const std::size_t s = segment_of(lo + kBreakpointTolerance);
    if (lo >= segment_lo(s) - kBreakpointTolerance && hi <= segment_hi(s) + kBreakpointTolerance) return s;
    return std::nullopt;
  }

  /// The same map plus a constant offset.
  PiecewiseMonotone shifted(double offset) const {
    PiecewiseMonotone t = *this;
    for (auto& seg : t.segments_) seg.expr = Expression::binary("+", seg.expr, Expression::constant(offset));
    return t;
  }

 private:
  void check_segment(std::size_t s) const {
    const double lo = segment_lo(s), hi = segment_hi(s);
    const auto& seg = segments_[s];
    std::optional<double> prev;
    for (std::size_t k = 0; k < kMonotoneCheckGrid; ++k) {
      const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(kMonotoneCheckGrid - 1);
      const double v = seg.expr(x);
      if (!std::isfinite(v)) {
        if (k == 0 || k + 1 == kMonotoneCheckGrid) continue;  // endpoint poles are allowed
        throw Error(ErrorKind::InvalidTransform, "segment " + std::to_string(s) + " is not finite inside its piece");
      }
      if (prev) {
        const bool ok = seg.direction == Direction::Increasing ? v > *prev : v < *prev;
        if (!ok)
          throw Error(ErrorKind::InvalidTransform, "segment " + std::to_string(s) + " (" + seg.expr.display() +
                                                       ") is not strictly " + to_string(seg.direction));
      }
      prev = v;
    }
  }

  Interval domain_;
  std::vector<double> breakpoints_;
  std::vector<MonotoneSegment> segments_;
};

/// Common refinement of the monotone pieces of two maps, ascending. Pieces
/// are half-open except the last, which is closed.
inline std::vector<Interval> refine(const PiecewiseMonotone& t1, const PiecewiseMonotone& t2) {
  if (!t1.domain().same_span(t2.domain(), kBreakpointTolerance))
    throw Error(ErrorKind::DomainMismatch, "transforms are defined on different domains");
  std::vector<double> cuts = t1.breakpoints();
  cuts.insert(cuts.end(), t2.breakpoints().begin(), t2.breakpoints().end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) <= kBreakpointTolerance; }),
             cuts.end());
  std::vector<Interval> out;
  double lo = t1.domain().lo;
  for (double c : cuts) {
    out.push_back(Interval{lo, c, true, false});
    lo = c;
  }
  out.push_back(Interval{lo, t1.domain().hi, true, true});
  return out;
}

struct PreimageResult {
  int count = 0;
  std::optional<double> location;
};

/// Number of solutions of t(x) = C on I (0 or 1). The range of t over I is
/// taken closed, so C at a range endpoint counts.
inline PreimageResult preimage_count(const PiecewiseMonotone& t, double c, const Interval& interval,
                                     double tol = kBisectionTolerance) {
  const auto s = t.segment_containing(interval.lo, interval.hi);
  if (!s) throw Error(ErrorKind::IntervalSpansBreakpoint, "interval crosses a breakpoint of the transform");
  const auto& seg = t.segments()[*s];
  const double flo = seg.expr(interval.lo), fhi = seg.expr(interval.hi);
  const double vmin = std::min(flo, fhi), vmax = std::max(flo, fhi);
  if (!(c >= vmin && c <= vmax)) return {};
  // g(x) = t(x) - C changes sign across [lo, hi]; oriented so g is increasing.
  const double sign = seg.direction == Direction::Increasing ? 1.0 : -1.0;
  double a = interval.lo, b = interval.hi;
  if (sign * (flo - c) >= 0) return {1, a};
  if (sign * (fhi - c) <= 0) return {1, b};
  while (b - a > tol) {
    const double mid = 0.5 * (a + b);
    if (sign * (seg.expr(mid) - c) < 0) a = mid;
    else b = mid;
  }
  return {1, 0.5 * (a + b)};
}

enum class IntervalCase { BothZero, FirstOnly, SecondOnly, BothOne };

inline const char* to_string(IntervalCase c) {
  switch (c) {
    case IntervalCase::BothZero: return "both-zero";
    case IntervalCase::FirstOnly: return "t1-only";
    case IntervalCase::SecondOnly: return "t2-only";
    case IntervalCase::BothOne: return "both-one";
  }
  return "unknown";
}

inline void require_refined(const PiecewiseMonotone& t1, const PiecewiseMonotone& t2, const Interval& interval) {
  for (const auto& r : refine(t1, t2))
    if (r.same_span(interval, kBreakpointTolerance)) return;
  throw Error(ErrorKind::NotRefinedInterval, "interval is not a refined monotonic interval of the pair");
}

/// Pre-image case of (t1 at C1, t2 at C2) on a refined interval. BothZero
/// means neither split separates the inputs in I; exactly one pre-image
/// means that transform's split is preferred there; BothOne needs data.
inline IntervalCase classify_interval(const PiecewiseMonotone& t1, const PiecewiseMonotone& t2, double c1, double c2,
                                      const Interval& interval) {
  require_refined(t1, t2, interval);
  const int n1 = preimage_count(t1, c1, interval).count;
  const int n2 = preimage_count(t2, c2, interval).count;
  if (n1 == 0 && n2 == 0) return IntervalCase::BothZero;
  if (n1 == 1 && n2 == 0) return IntervalCase::FirstOnly;
  if (n1 == 0 && n2 == 1) return IntervalCase::SecondOnly;
  return IntervalCase::BothOne;
}

/// log tau between the split {t1(x) <= C1} and the split {t2(x) <= C2},
/// restricted to samples with x in I. A threshold that leaves one side empty
/// yields the unsplit loss. Positive values favour t1.
inline double interval_log_decision_ratio(const PiecewiseMonotone& t1, const PiecewiseMonotone& t2, double c1,
                                          double c2, const Interval& interval, std::span<const double> x,
                                          std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "x and y differ in length");
  require_refined(t1, t2, interval);
  IndexSet inside;
  for (Index i = 0; i < x.size(); ++i)
    if (interval.contains(x[i])) inside.push_back(i);
  auto split_sse = [&](const PiecewiseMonotone& t, double c) {
    IndexSet left, right;
    for (Index i : inside) (t(x[i]) <= c ? left : right).push_back(i);
    if (left.empty() || right.empty()) return sse_of(y, inside);
    return sse_of(y, left) + sse_of(y, right);
  };
  return split_sse(t2, c2) - split_sse(t1, c1);
}

/// Input distribution given by its CDF.
class Measure {
 public:
  static Measure uniform(double lo, double hi) {
    if (!(lo < hi)) throw Error(ErrorKind::InvalidArgument, "uniform measure needs lo < hi");
    return Measure([lo, hi](double v) { return std::clamp((v - lo) / (hi - lo), 0.0, 1.0); });
  }

  /// CDF through (value, probability) knots with linear interpolation; 0
  /// below the first knot and 1 above the last.
  static Measure tabulated(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two quantile knots");
    for (std::size_t i = 0; i < knots.size(); ++i) {
      if (knots[i].second < 0.0 || knots[i].second > 1.0)
        throw Error(ErrorKind::InvalidArgument, "knot probabilities must lie in [0,1]");
      if (i > 0 && (!(knots[i].first > knots[i - 1].first) || knots[i].second < knots[i - 1].second))
        throw Error(ErrorKind::InvalidArgument, "knots must be strictly ascending in value and monotone in probability");
    }
    return Measure([k = std::move(knots)](double v) {
      if (v <= k.front().first) return v < k.front().first ? 0.0 : k.front().second;
      if (v >= k.back().first) return 1.0;
      auto it = std::upper_bound(k.begin(), k.end(), v, [](double a, const auto& kn) { return a < kn.first; });
      const auto& [x1, p1] = *it;
      const auto& [x0, p0] = *(it - 1);
      return p0 + (p1 - p0) * (v - x0) / (x1 - x0);
    });
  }

  double cdf(double v) const { return cdf_(v); }
  double probability(const Interval& i) const { return cdf_(i.hi) - cdf_(i.lo); }

 private:
  explicit Measure(std::function<double(double)> cdf) : cdf_(std::move(cdf)) {}
  std::function<double(double)> cdf_;
};

struct PreferenceReport {
  std::vector<Interval> intervals_pref_1;  // t1 has the pre-image, t2 none
  std::vector<Interval> intervals_pref_2;
  double p_value = 0.0;                    // P(union pref_1) - P(union pref_2)
};

/// Signed probability that the split at a common threshold C prefers t1
/// over t2. Throws CaseThreePresent when both maps have a pre-image on some
/// refined interval (apply offset_shift first).
inline PreferenceReport preference_probability(const PiecewiseMonotone& t1, const PiecewiseMonotone& t2, double c,
                                               const Measure& measure) {
  PreferenceReport rep;
  for (const auto& interval : refine(t1, t2)) {
    switch (classify_interval(t1, t2, c, c, interval)) {
      case IntervalCase::BothZero: break;
      case IntervalCase::FirstOnly: rep.intervals_pref_1.push_back(interval); break;
      case IntervalCase::SecondOnly: rep.intervals_pref_2.push_back(interval); break;
      case IntervalCase::BothOne:
        throw Error(ErrorKind::CaseThreePresent, "both transforms have a pre-image of C on [" +
                                                     format_number(interval.lo) + ", " + format_number(interval.hi) +
                                                     "]");
    }
  }
  for (const auto& i : rep.intervals_pref_1) rep.p_value += measure.probability(i);
  for (const auto& i : rep.intervals_pref_2) rep.p_value -= measure.probability(i);
  return rep;
}

namespace detail {

inline std::pair<double, double> value_range(const PiecewiseMonotone& t) {
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (std::size_t s = 0; s < t.segments().size(); ++s) {
    for (double x : {t.segment_lo(s), t.segment_hi(s)}) {
      const double v = t.segments()[s].expr(x);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

}  // namespace detail

/// C0 = sup t2 - inf t1 + 1; t1 + C0 then never shares a threshold's
/// pre-image interval with t2.
inline double offset_shift(const PiecewiseMonotone& t1, const PiecewiseMonotone& t2) {
  const double inf1 = detail::value_range(t1).first;
  const double sup2 = detail::value_range(t2).second;
  if (!std::isfinite(inf1) || !std::isfinite(sup2))
    throw Error(ErrorKind::UnboundedTransform, "sup of t2 or inf of t1 is not finite on the domain");
  return sup2 - inf1 + 1.0;
}

}  // namespace symrank

#endif  // SYMRANK_MONOTONIC_HPP
