#ifndef SYMRANK_CORE_HPP
#define SYMRANK_CORE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace symrank {

enum class ErrorKind {
  TiesInResponse,
  DimensionMismatch,
  LengthMismatch,
  ZeroVariance,
  TiesPresent,
  EmptySide,
  SizeOutOfRange,
  TooLarge,
  TooSmall,
  MembershipViolation,
  Unsplittable,
  InadmissibleRule,
  ColumnMismatch,
  DomainMismatch,
  IntervalSpansBreakpoint,
  NotRefinedInterval,
  CaseThreePresent,
  UnboundedTransform,
  InvalidTransform,
  PartialOperatorDomain,
  UnknownOperator,
  ParseError,
  KTooLarge,
  NoPositives,
  SizeMismatch,
  InvalidArgument,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TiesInResponse: return "TiesInResponse";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::TiesPresent: return "TiesPresent";
    case ErrorKind::EmptySide: return "EmptySide";
    case ErrorKind::SizeOutOfRange: return "SizeOutOfRange";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::TooSmall: return "TooSmall";
    case ErrorKind::MembershipViolation: return "MembershipViolation";
    case ErrorKind::Unsplittable: return "Unsplittable";
    case ErrorKind::InadmissibleRule: return "InadmissibleRule";
    case ErrorKind::ColumnMismatch: return "ColumnMismatch";
    case ErrorKind::DomainMismatch: return "DomainMismatch";
    case ErrorKind::IntervalSpansBreakpoint: return "IntervalSpansBreakpoint";
    case ErrorKind::NotRefinedInterval: return "NotRefinedInterval";
    case ErrorKind::CaseThreePresent: return "CaseThreePresent";
    case ErrorKind::UnboundedTransform: return "UnboundedTransform";
    case ErrorKind::InvalidTransform: return "InvalidTransform";
    case ErrorKind::PartialOperatorDomain: return "PartialOperatorDomain";
    case ErrorKind::UnknownOperator: return "UnknownOperator";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::NoPositives: return "NoPositives";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

using Index = std::size_t;
using IndexSet = std::vector<Index>;  // always sorted ascending

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix{};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols_)
        throw Error(ErrorKind::DimensionMismatch, "ragged rows in matrix literal");
      std::copy(rows[r].begin(), rows[r].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(r * m.cols_));
    }
    return m;
  }

  static Matrix from_columns(const std::vector<std::vector<double>>& cols) {
    if (cols.empty()) return Matrix{};
    Matrix m(cols.front().size(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c].size() != m.rows_)
        throw Error(ErrorKind::DimensionMismatch, "ragged columns in matrix literal");
      for (std::size_t r = 0; r < m.rows_; ++r) m(r, c) = cols[c][r];
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Validated regression data: inputs x (N x d) and a tie-free response y.
class Dataset {
 public:
  const Matrix& x() const noexcept { return x_; }
  const std::vector<double>& y() const noexcept { return y_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }
  std::size_t size() const noexcept { return y_.size(); }
  std::size_t dims() const noexcept { return x_.cols(); }

 private:
  friend Dataset build_dataset(Matrix x, std::vector<double> y, std::vector<std::string> names);
  Matrix x_;
  std::vector<double> y_;
  std::vector<std::string> names_;
};

/// Returns the first pair of positions holding equal values, if any.
inline std::optional<std::pair<Index, Index>> find_tie(std::span<const double> v) {
  std::vector<Index> order(v.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v[a] < v[b]; });
  for (std::size_t k = 1; k < order.size(); ++k)
    if (v[order[k - 1]] == v[order[k]]) return std::pair{std::min(order[k - 1], order[k]), std::max(order[k - 1], order[k])};
  return std::nullopt;
}

inline Dataset build_dataset(Matrix x, std::vector<double> y, std::vector<std::string> names = {}) {
  if (x.rows() != y.size())
    throw Error(ErrorKind::DimensionMismatch,
                "x has " + std::to_string(x.rows()) + " rows but y has " + std::to_string(y.size()) + " entries");
  if (y.empty() || x.cols() == 0)
    throw Error(ErrorKind::DimensionMismatch, "dataset needs N >= 1 and d >= 1");
  if (!names.empty() && names.size() != x.cols())
    throw Error(ErrorKind::DimensionMismatch, "column name count does not match d");
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (double v : x.row(r))
      if (!std::isfinite(v)) throw Error(ErrorKind::DimensionMismatch, "non-finite input at row " + std::to_string(r));
  for (std::size_t r = 0; r < y.size(); ++r)
    if (!std::isfinite(y[r])) throw Error(ErrorKind::DimensionMismatch, "non-finite response at row " + std::to_string(r));
  if (auto tie = find_tie(y))
    throw Error(ErrorKind::TiesInResponse,
                "y[" + std::to_string(tie->first) + "] == y[" + std::to_string(tie->second) + "]");
  if (names.empty()) {
    for (std::size_t c = 0; c < x.cols(); ++c) names.push_back("x" + std::to_string(c + 1));
  }
  Dataset ds;
  ds.x_ = std::move(x);
  ds.y_ = std::move(y);
  ds.names_ = std::move(names);
  return ds;
}

/// A permutation j_1..j_N of 0..N-1.
struct RankPermutation {
  std::vector<Index> order;

  bool operator==(const RankPermutation&) const = default;

  static RankPermutation checked(std::vector<Index> order) {
    std::vector<char> seen(order.size(), 0);
    for (Index j : order) {
      if (j >= order.size() || seen[j])
        throw Error(ErrorKind::InvalidArgument, "order is not a permutation of 0..N-1");
      seen[j] = 1;
    }
    return RankPermutation{std::move(order)};
  }
};

/// Indices sorted by ascending value; equal values keep index order.
inline std::vector<Index> argsort(std::span<const double> v) {
  std::vector<Index> order(v.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v[a] < v[b]; });
  return order;
}

inline RankPermutation sort_by_response(const Dataset& ds) {
  return RankPermutation{argsort(ds.y())};
}

inline double mean_of(std::span<const double> y, std::span<const Index> idx) {
  double s = 0.0;
  for (Index i : idx) s += y[i];
  return s / static_cast<double>(idx.size());
}

/// Two-pass within-group sum of squares.
inline double sse_of(std::span<const double> y, std::span<const Index> idx) {
  if (idx.empty()) return 0.0;
  const double m = mean_of(y, idx);
  double s = 0.0;
  for (Index i : idx) s += (y[i] - m) * (y[i] - m);
  return s;
}

/// A 2-way split of the node 0..n-1 with cached group statistics.
struct Partition2 {
  IndexSet left;
  IndexSet right;
  double mean_left = 0.0;
  double mean_right = 0.0;
  double sse_left = 0.0;
  double sse_right = 0.0;

  double loss() const noexcept { return sse_left + sse_right; }

  bool same_split(const Partition2& other) const {
    return (left == other.left && right == other.right) || (left == other.right && right == other.left);
  }
};

/// Builds the partition {left, complement} of 0..n-1 and its statistics.
inline Partition2 make_partition(std::span<const double> y, IndexSet left) {
  const std::size_t n = y.size();
  std::sort(left.begin(), left.end());
  if (std::adjacent_find(left.begin(), left.end()) != left.end())
    throw Error(ErrorKind::InvalidArgument, "duplicate index in partition side");
  if (!left.empty() && left.back() >= n) throw Error(ErrorKind::InvalidArgument, "partition index out of range");
  std::vector<char> in_left(n, 0);
  for (Index i : left) in_left[i] = 1;
  IndexSet right;
  for (Index i = 0; i < n; ++i)
    if (!in_left[i]) right.push_back(i);
  if (left.empty() || right.empty()) throw Error(ErrorKind::EmptySide, "both partition sides must be nonempty");
  Partition2 p;
  p.mean_left = mean_of(y, left);
  p.mean_right = mean_of(y, right);
  p.sse_left = sse_of(y, left);
  p.sse_right = sse_of(y, right);
  p.left = std::move(left);
  p.right = std::move(right);
  return p;
}

/// Real interval with per-endpoint closedness.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;
  bool hi_closed = true;

  static Interval make(double lo, double hi, bool lo_closed = true, bool hi_closed = true) {
    if (!(lo <= hi)) throw Error(ErrorKind::InvalidArgument, "interval needs lo <= hi");
    if (lo == hi && !(lo_closed && hi_closed))
      throw Error(ErrorKind::InvalidArgument, "a point interval must be closed at both ends");
    return Interval{lo, hi, lo_closed, hi_closed};
  }

  bool contains(double v) const noexcept {
    return (v > lo || (lo_closed && v == lo)) && (v < hi || (hi_closed && v == hi));
  }
  double length() const noexcept { return hi - lo; }
  bool same_span(const Interval& o, double tol = 1e-12) const noexcept {
    return std::abs(lo - o.lo) <= tol && std::abs(hi - o.hi) <= tol;
  }
};

// Seeding: a master 64-bit seed fans out to independent streams by hashing.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

/// Worker count: SYMRANK_THREADS if set, otherwise hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SYMRANK_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(std::min<long>(v, hw));
  }
  return hw;
}

namespace detail {
inline thread_local bool inside_parallel_region = false;
}  // namespace detail

/// Runs fn(i) for i in [0, n). Results must be written to per-index slots.
/// Calls made from inside a worker run serially.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
  if (workers <= 1 || detail::inside_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      detail::inside_parallel_region = true;
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace symrank

#endif  // SYMRANK_CORE_HPP
