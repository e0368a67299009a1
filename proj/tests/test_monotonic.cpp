#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "symrank/io.hpp"
#include "test_util.hpp"

using namespace symrank;
using symrank::testing::uniforms;

namespace {

using V = std::vector<double>;

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::InvalidArgument;
}

const Interval kUnit = Interval::make(0.0, 1.0);

PiecewiseMonotone linear(double offset) {
  return PiecewiseMonotone::single(kUnit, parse_expression("x+" + format_number(offset)), Direction::Increasing);
}

PiecewiseMonotone folded() {
  const auto e = parse_expression("-4*x^2+4*x");
  return PiecewiseMonotone::make(kUnit, {0.5}, {{e, Direction::Increasing}, {e, Direction::Decreasing}});
}

const Interval kLeftHalf{0.0, 0.5, true, false};
const Interval kRightHalf{0.5, 1.0, true, true};

/// sin(w x + phi) on [0, 1] split at its extrema.
PiecewiseMonotone random_wave(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uw(2.0, 15.0), up(-3.0, 3.0);
  for (;;) {
    const double w = uw(rng), phi = up(rng);
    const auto e = Expression::unary(
        "sin", Expression::binary("+", Expression::binary("*", Expression::constant(w), Expression::variable(0)),
                                  Expression::constant(phi)));
    std::vector<double> bps;
    const double pi = std::acos(-1.0);
    for (int k = -10; k <= 10; ++k) {
      const double x = (pi / 2 + k * pi - phi) / w;
      if (x > 0.0 && x < 1.0) bps.push_back(x);
    }
    std::sort(bps.begin(), bps.end());
    bool spaced = bps.empty() || (bps.front() > 0.02 && bps.back() < 0.98);
    for (std::size_t i = 1; i < bps.size(); ++i) spaced = spaced && bps[i] - bps[i - 1] > 0.02;
    if (!spaced) continue;
    // derivative sign at the left end decides the first direction
    Direction d = std::cos(phi) > 0 ? Direction::Increasing : Direction::Decreasing;
    std::vector<MonotoneSegment> segs;
    for (std::size_t s = 0; s <= bps.size(); ++s) {
      segs.push_back({e, d});
      d = d == Direction::Increasing ? Direction::Decreasing : Direction::Increasing;
    }
    return PiecewiseMonotone::make(kUnit, bps, segs);
  }
}

}  // namespace

TEST(PiecewiseMonotone, ConstructionChecks) {
  EXPECT_NO_THROW(folded());
  EXPECT_EQ(kind_of([] { PiecewiseMonotone::single(kUnit, parse_expression("-x"), Direction::Increasing); }),
            ErrorKind::InvalidTransform);
  EXPECT_EQ(kind_of([] {
              const auto e = parse_expression("x");
              PiecewiseMonotone::make(kUnit, {0.5}, {{e, Direction::Increasing}, {e, Direction::Increasing}});
            }),
            ErrorKind::InvalidTransform);
  EXPECT_EQ(kind_of([] {
              const auto e = parse_expression("-4*x^2+4*x");
              PiecewiseMonotone::make(kUnit, {1.5}, {{e, Direction::Increasing}, {e, Direction::Decreasing}});
            }),
            ErrorKind::InvalidTransform);
  EXPECT_EQ(kind_of([] {
              PiecewiseMonotone::make(kUnit, {0.5}, {{parse_expression("x"), Direction::Increasing}});
            }),
            ErrorKind::InvalidTransform);
  EXPECT_DOUBLE_EQ(folded()(0.25), 0.75);
  EXPECT_DOUBLE_EQ(folded()(0.75), 0.75);
}

TEST(Refine, Examples) {
  const auto r = refine(linear(1.2), folded());
  ASSERT_EQ(r.size(), 2u);
  EXPECT_TRUE(r[0].same_span(kLeftHalf));
  EXPECT_TRUE(r[1].same_span(kRightHalf));
  EXPECT_FALSE(r[0].hi_closed);
  EXPECT_TRUE(r[1].hi_closed);

  const auto same = refine(linear(0.0), linear(0.0));
  ASSERT_EQ(same.size(), 1u);
  EXPECT_TRUE(same[0].same_span(kUnit));

  const auto up = parse_expression("(x-0.3333333333333333)^2");
  const auto a = PiecewiseMonotone::make(kUnit, {1.0 / 3}, {{up, Direction::Decreasing}, {up, Direction::Increasing}});
  const auto dn = parse_expression("(x-0.6666666666666666)^2");
  const auto b = PiecewiseMonotone::make(kUnit, {2.0 / 3}, {{dn, Direction::Decreasing}, {dn, Direction::Increasing}});
  const auto three = refine(a, b);
  ASSERT_EQ(three.size(), 3u);
  EXPECT_TRUE(three[0].same_span(Interval{0, 1.0 / 3}));
  EXPECT_TRUE(three[1].same_span(Interval{1.0 / 3, 2.0 / 3}));
  EXPECT_TRUE(three[2].same_span(Interval{2.0 / 3, 1}));
}

TEST(Refine, DomainMismatch) {
  const auto other = PiecewiseMonotone::single(Interval::make(0, 2), parse_expression("x"), Direction::Increasing);
  EXPECT_EQ(kind_of([&] { refine(linear(0), other); }), ErrorKind::DomainMismatch);
}

TEST(Refine, CoversTheDomain) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = refine(random_wave(rng), random_wave(rng));
    EXPECT_DOUBLE_EQ(r.front().lo, 0.0);
    EXPECT_DOUBLE_EQ(r.back().hi, 1.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_LT(r[i].lo, r[i].hi);
      if (i > 0) {
        EXPECT_EQ(r[i].lo, r[i - 1].hi);
      }
    }
    for (double x : uniforms(50, rng)) {
      int hits = 0;
      for (const auto& i : r) hits += i.contains(x) ? 1 : 0;
      EXPECT_EQ(hits, 1);
    }
  }
}

TEST(Preimage, Examples) {
  const auto p = preimage_count(folded(), 0.5, kLeftHalf);
  EXPECT_EQ(p.count, 1);
  ASSERT_TRUE(p.location);
  EXPECT_NEAR(*p.location, (1.0 - std::sqrt(0.5)) / 2.0, 1e-9);
  EXPECT_NEAR(*p.location, 0.14645, 1e-5);
  EXPECT_EQ(preimage_count(linear(1.2), 0.5, kLeftHalf).count, 0);
  const auto edge = preimage_count(linear(1.2), 1.2, kLeftHalf);
  EXPECT_EQ(edge.count, 1);
  EXPECT_DOUBLE_EQ(*edge.location, 0.0);
  EXPECT_EQ(preimage_count(linear(1.2), 1.7, kLeftHalf).count, 1);
  EXPECT_EQ(kind_of([] { preimage_count(folded(), 0.5, kUnit); }), ErrorKind::IntervalSpansBreakpoint);
}

TEST(Preimage, AgreesWithDenseGrid) {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> uc(-1.1, 1.1);
  const double tol = kBisectionTolerance;
  int located = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = random_wave(rng);
    for (const auto& interval : refine(t, t)) {
      const double c = uc(rng);
      constexpr int kGrid = 2001;
      V xs(kGrid), vs(kGrid);
      for (int k = 0; k < kGrid; ++k) {
        xs[k] = interval.lo + (interval.hi - interval.lo) * k / (kGrid - 1);
        vs[k] = t.segments()[t.segment_of(interval.lo)].expr(xs[k]);
      }
      const double vmin = *std::min_element(vs.begin(), vs.end());
      const double vmax = *std::max_element(vs.begin(), vs.end());
      if (std::abs(c - vmin) < 1e-9 || std::abs(c - vmax) < 1e-9) continue;
      const auto r = preimage_count(t, c, interval);
      const bool grid_hit = c > vmin && c < vmax;
      ASSERT_EQ(r.count, grid_hit ? 1 : 0);
      if (!grid_hit) continue;
      int k = 0;
      while (k + 1 < kGrid && !((vs[k] - c) * (vs[k + 1] - c) <= 0)) ++k;
      ASSERT_LT(k + 1, kGrid);
      EXPECT_GE(*r.location, xs[k] - tol * 10);
      EXPECT_LE(*r.location, xs[k + 1] + tol * 10);
      ++located;
    }
  }
  EXPECT_GT(located, 100);
}

TEST(Classify, SmallExampleCases) {
  const auto t1 = linear(1.2), t2 = folded();
  EXPECT_EQ(classify_interval(t1, t2, 1.0, -0.5, kLeftHalf), IntervalCase::BothZero);
  EXPECT_EQ(classify_interval(t1, t2, 1.5, -0.5, kLeftHalf), IntervalCase::FirstOnly);
  EXPECT_EQ(classify_interval(t1, t2, 1.0, 0.5, kLeftHalf), IntervalCase::SecondOnly);
  EXPECT_EQ(classify_interval(t1, t2, 1.5, 0.5, kLeftHalf), IntervalCase::BothOne);
  EXPECT_EQ(classify_interval(t1, t2, 1.2, 0.0, kLeftHalf), IntervalCase::BothOne);
  EXPECT_EQ(classify_interval(t1, t2, 2.2, 1.5, kLeftHalf), IntervalCase::BothZero);
  EXPECT_STREQ(to_string(IntervalCase::FirstOnly), "t1-only");
  EXPECT_EQ(kind_of([&] { classify_interval(t1, t2, 1.5, 0.5, kUnit); }), ErrorKind::NotRefinedInterval);
  EXPECT_EQ(kind_of([&] { classify_interval(t1, t2, 1.5, 0.5, Interval{0.0, 0.4}); }),
            ErrorKind::NotRefinedInterval);
}

TEST(Preference, SmallExampleTable) {
  const auto t1 = linear(1.2), t2 = folded();
  const auto m = Measure::uniform(0, 1);
  const auto a = preference_probability(t1, t2, 1.5, m);
  EXPECT_DOUBLE_EQ(a.p_value, 0.5);
  ASSERT_EQ(a.intervals_pref_1.size(), 1u);
  EXPECT_TRUE(a.intervals_pref_1[0].same_span(kLeftHalf));
  EXPECT_TRUE(a.intervals_pref_2.empty());

  const auto b = preference_probability(t1, t2, 1.9, m);
  EXPECT_DOUBLE_EQ(b.p_value, 0.5);
  ASSERT_EQ(b.intervals_pref_1.size(), 1u);
  EXPECT_TRUE(b.intervals_pref_1[0].same_span(kRightHalf));

  const auto c = preference_probability(t1, t2, 0.5, m);
  EXPECT_DOUBLE_EQ(c.p_value, -1.0);
  EXPECT_EQ(c.intervals_pref_2.size(), 2u);

  EXPECT_DOUBLE_EQ(preference_probability(t1, t2, -1.0, m).p_value, 0.0);
  EXPECT_DOUBLE_EQ(preference_probability(t1, t2, 1.1, m).p_value, 0.0);
  EXPECT_DOUBLE_EQ(preference_probability(t1, t2, 3.0, m).p_value, 0.0);
  EXPECT_EQ(kind_of([&] { preference_probability(linear(0.0), t2, 0.3, m); }), ErrorKind::CaseThreePresent);
}

TEST(Preference, Antisymmetric) {
  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> uc(-1.5, 1.5);
  const auto m = Measure::uniform(0, 1);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto t1 = random_wave(rng);
    const auto t2 = random_wave(rng).shifted(uc(rng));
    const double c = uc(rng);
    try {
      const double p12 = preference_probability(t1, t2, c, m).p_value;
      EXPECT_NEAR(p12, -preference_probability(t2, t1, c, m).p_value, 1e-15);
      ++checked;
    } catch (const Error& e) {
      ASSERT_EQ(e.kind(), ErrorKind::CaseThreePresent);
      EXPECT_EQ(kind_of([&] { preference_probability(t2, t1, c, m); }), ErrorKind::CaseThreePresent);
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Preference, MonteCarloAgreement) {
  // Availability of a split on the interval holding x is judged from a grid
  // of the transform there, not from the closed-range rule.
  const auto t1 = linear(1.2), t2 = folded();
  const auto intervals = refine(t1, t2);
  auto available = [](const PiecewiseMonotone& t, double c, const Interval& i) {
    bool below = false, above = false;
    for (int k = 0; k <= 400; ++k) {
      const double v = t(i.lo + (i.hi - i.lo) * k / 400.0 * (1 - 1e-12));
      below = below || v <= c;
      above = above || v >= c;
    }
    return below && above;
  };
  std::mt19937_64 rng(64);
  for (double c : {-1.0, 0.5, 1.1, 1.5, 1.9, 3.0}) {
    const double p = preference_probability(t1, t2, c, Measure::uniform(0, 1)).p_value;
    double sum = 0, sum2 = 0;
    const int n = 10000;
    for (double x : uniforms(n, rng)) {
      const auto& i = *std::find_if(intervals.begin(), intervals.end(), [&](const Interval& r) { return r.contains(x); });
      const bool a1 = available(t1, c, i), a2 = available(t2, c, i);
      const double s = (a1 && !a2) ? 1.0 : (a2 && !a1) ? -1.0 : 0.0;
      sum += s;
      sum2 += s * s;
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n);
    EXPECT_LE(std::abs(mean - p), std::max(3.0 * se, 1e-12)) << "C=" << c;
  }
}

TEST(Preference, TabulatedMeasure) {
  const auto m = Measure::tabulated({{0.0, 0.0}, {0.5, 0.8}, {1.0, 1.0}});
  EXPECT_DOUBLE_EQ(m.cdf(0.25), 0.4);
  EXPECT_DOUBLE_EQ(m.cdf(-1), 0.0);
  EXPECT_DOUBLE_EQ(m.cdf(2), 1.0);
  EXPECT_NEAR(preference_probability(linear(1.2), folded(), 1.5, m).p_value, 0.8, 1e-15);
  EXPECT_NEAR(preference_probability(linear(1.2), folded(), 1.9, m).p_value, 0.2, 1e-15);
  EXPECT_EQ(kind_of([] { Measure::tabulated({{0.0, 0.5}, {0.0, 0.6}}); }), ErrorKind::InvalidArgument);
}

TEST(OffsetShift, Examples) {
  EXPECT_DOUBLE_EQ(offset_shift(linear(0.0), folded()), 2.0);
  EXPECT_NEAR(offset_shift(linear(1.2), folded()), 0.8, 1e-15);
  EXPECT_GT(offset_shift(folded(), folded()), 0.0);
  const auto pole = PiecewiseMonotone::single(kUnit, parse_expression("log(x)"), Direction::Increasing);
  EXPECT_EQ(kind_of([&] { offset_shift(pole, folded()); }), ErrorKind::UnboundedTransform);
}

TEST(OffsetShift, RemovesCaseThree) {
  std::mt19937_64 rng(65);
  const auto m = Measure::uniform(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t1 = random_wave(rng), t2 = random_wave(rng);
    const auto s1 = t1.shifted(offset_shift(t1, t2));
    for (double c = -3.0; c <= 5.0; c += 0.25) EXPECT_NO_THROW(preference_probability(s1, t2, c, m));
  }
}

TEST(IntervalRatio, BothZeroIsExactlyNeutral) {
  const auto t1 = linear(1.2), t2 = folded();
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 50; ++trial) {
    const V x = uniforms(30, rng);
    const V y = uniforms(30, rng, -5, 5);
    ASSERT_EQ(classify_interval(t1, t2, 1.0, -0.5, kLeftHalf), IntervalCase::BothZero);
    EXPECT_EQ(interval_log_decision_ratio(t1, t2, 1.0, -0.5, kLeftHalf, x, y), 0.0);
  }
}

TEST(IntervalRatio, MatchesTreeDecisionRatioOnPulledBackRules) {
  const auto t1 = linear(1.2), t2 = folded();
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 100; ++trial) {
    const V x = uniforms(40, rng);
    const V y = uniforms(40, rng, -5, 5);
    IndexSet in;
    for (Index i = 0; i < x.size(); ++i)
      if (kLeftHalf.contains(x[i])) in.push_back(i);
    if (in.size() < 3) continue;
    Matrix z(in.size(), 2);
    V yi(in.size());
    for (std::size_t r = 0; r < in.size(); ++r) {
      z(r, 0) = t1(x[in[r]]);
      z(r, 1) = t2(x[in[r]]);
      yi[r] = y[in[r]];
    }
    // an observed non-maximal value on each feature: both maps increase on I
    const auto by_x = argsort(z.column(0));
    const double c1 = z(by_x[rng() % (in.size() - 1)], 0);
    const double c2 = z(by_x[rng() % (in.size() - 1)], 1);
    ASSERT_EQ(classify_interval(t1, t2, c1, c2, kLeftHalf), IntervalCase::BothOne);
    EXPECT_NEAR(interval_log_decision_ratio(t1, t2, c1, c2, kLeftHalf, x, y),
                log_principal_decision_ratio(z, yi, SplitRule{0, c1}, SplitRule{1, c2}), 1e-9);
  }
}

TEST(PiecewiseJson, RoundTrip) {
  const auto j = piecewise_to_json(folded());
  const auto back = piecewise_from_json(Json::parse(j.dump()));
  for (double x : {0.0, 0.1, 0.5, 0.77, 1.0}) EXPECT_DOUBLE_EQ(back(x), folded()(x));
  EXPECT_EQ(back.breakpoints(), folded().breakpoints());
  EXPECT_EQ(kind_of([] { piecewise_from_json(Json::parse(R"({"domain": [0, 1], "segments": [{"expr": "x"}]})")); }),
            ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] {
              piecewise_from_json(
                  Json::parse(R"({"domain": [0, 1], "segments": [{"expr": "x", "direction": "sideways"}]})"));
            }),
            ErrorKind::ParseError);
}
