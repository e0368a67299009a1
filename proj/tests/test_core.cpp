#include <gtest/gtest.h>

#include <random>
#include <set>

#include "test_util.hpp"

using namespace symrank;
using symrank::testing::kFiveA_Y;

namespace {

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

}  // namespace

TEST(BuildDataset, AcceptsMinimalInput) {
  const Dataset ds = build_dataset(Matrix::from_rows({{1.0}, {2.0}}), {3.0, 4.0});
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.dims(), 1u);
  EXPECT_EQ(ds.column_names(), std::vector<std::string>{"x1"});
}

TEST(BuildDataset, RejectsTiedResponses) {
  EXPECT_EQ(kind_of([] { build_dataset(Matrix::from_rows({{1.0}, {2.0}}), {3.0, 3.0}); }), ErrorKind::TiesInResponse);
}

TEST(BuildDataset, RejectsRowCountMismatch) {
  EXPECT_EQ(kind_of([] { build_dataset(Matrix::from_rows({{1.0, 2.0}}), {1.0, 5.0}); }), ErrorKind::DimensionMismatch);
}

TEST(BuildDataset, RejectsNonFiniteAndEmpty) {
  EXPECT_EQ(kind_of([] { build_dataset(Matrix::from_rows({{1.0}, {NAN}}), {1.0, 2.0}); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([] { build_dataset(Matrix::from_rows({{1.0}, {2.0}}), {1.0, INFINITY}); }),
            ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([] { build_dataset(Matrix(0, 1), {}); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([] { build_dataset(Matrix::from_rows({{1.0}}), {1.0}, {"a", "b"}); }),
            ErrorKind::DimensionMismatch);
}

TEST(BuildDataset, TiesInFeaturesAreAllowed) {
  EXPECT_NO_THROW(build_dataset(Matrix::from_rows({{1.0}, {1.0}}), {0.0, 1.0}));
}

TEST(SortByResponse, FivePointData) {
  const Dataset ds = build_dataset(symrank::testing::column_matrix(symrank::testing::kFiveA_X), kFiveA_Y);
  EXPECT_EQ(sort_by_response(ds).order, (std::vector<Index>{2, 3, 1, 4, 0}));
}

TEST(SortByResponse, SmallCases) {
  auto order = [](std::vector<double> y) {
    std::vector<double> x(y.size(), 0.0);
    return sort_by_response(build_dataset(symrank::testing::column_matrix(x), y)).order;
  };
  EXPECT_EQ(order({1, 2, 3}), (std::vector<Index>{0, 1, 2}));
  EXPECT_EQ(order({3, 1, 2}), (std::vector<Index>{1, 2, 0}));
}

TEST(SortByResponse, RowPermutationGivesSameSortedSequence) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    auto y = symrank::testing::distinct_normals(n, rng);
    std::vector<double> x(n, 0.0);
    const auto ds = build_dataset(symrank::testing::column_matrix(x), y);
    auto shuffled = y;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto ds2 = build_dataset(symrank::testing::column_matrix(x), shuffled);
    std::vector<double> a, b;
    for (Index i : sort_by_response(ds).order) a.push_back(y[i]);
    for (Index i : sort_by_response(ds2).order) b.push_back(shuffled[i]);
    ASSERT_EQ(a, b);
    ASSERT_TRUE(std::is_sorted(a.begin(), a.end()));
  }
}

TEST(RankPermutation, CheckedRejectsNonPermutations) {
  EXPECT_NO_THROW(RankPermutation::checked({2, 0, 1}));
  EXPECT_EQ(kind_of([] { RankPermutation::checked({0, 0, 1}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { RankPermutation::checked({0, 3}); }), ErrorKind::InvalidArgument);
}

TEST(Partition2, CachedStatisticsMatchDefinition) {
  const Partition2 p = make_partition(kFiveA_Y, {4, 0});
  EXPECT_EQ(p.left, (IndexSet{0, 4}));
  EXPECT_EQ(p.right, (IndexSet{1, 2, 3}));
  EXPECT_DOUBLE_EQ(p.mean_left, 4.5);
  EXPECT_NEAR(p.mean_right, 5.1 / 3.0, 1e-15);
  EXPECT_NEAR(p.sse_left, 0.5, 1e-15);
  EXPECT_NEAR(p.sse_right, 0.74, 1e-14);
  EXPECT_NEAR(p.loss(), 1.24, 1e-12);
}

TEST(Partition2, SidesMustBeNonemptyAndValid) {
  EXPECT_EQ(kind_of([] { make_partition(kFiveA_Y, {}); }), ErrorKind::EmptySide);
  EXPECT_EQ(kind_of([] { make_partition(kFiveA_Y, {0, 1, 2, 3, 4}); }), ErrorKind::EmptySide);
  EXPECT_EQ(kind_of([] { make_partition(kFiveA_Y, {0, 0}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { make_partition(kFiveA_Y, {9}); }), ErrorKind::InvalidArgument);
}

TEST(Partition2, SameSplitIgnoresSideLabels) {
  const auto a = make_partition(kFiveA_Y, {0, 4});
  const auto b = make_partition(kFiveA_Y, {1, 2, 3});
  EXPECT_TRUE(a.same_split(b));
  EXPECT_FALSE(a.same_split(make_partition(kFiveA_Y, {0, 1})));
}

TEST(Interval, Invariants) {
  EXPECT_NO_THROW(Interval::make(1.0, 1.0));
  EXPECT_EQ(kind_of([] { Interval::make(1.0, 1.0, true, false); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { Interval::make(2.0, 1.0); }), ErrorKind::InvalidArgument);
  const Interval half = Interval::make(0.0, 0.5, true, false);
  EXPECT_TRUE(half.contains(0.0));
  EXPECT_FALSE(half.contains(0.5));
  EXPECT_DOUBLE_EQ(half.length(), 0.5);
}

TEST(Seeding, DerivedStreamsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(42, s));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(42, 3), derive_seed(42, 3));
  EXPECT_NE(derive_seed(42, 3), derive_seed(43, 3));
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows) {
  std::vector<int> hits(257, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 5) throw Error(ErrorKind::InvalidArgument, "boom");
               }),
               Error);
}

TEST(ParallelFor, NestedCallsComplete) {
  std::vector<std::vector<int>> out(8, std::vector<int>(8, 0));
  parallel_for(8, [&](std::size_t i) { parallel_for(8, [&](std::size_t j) { out[i][j] = static_cast<int>(i * j); }); });
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(out[i][j], static_cast<int>(i * j));
}
