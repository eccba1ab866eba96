#include "randchan/channels.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <string>

#include "randchan/parallel.hpp"
#include "randchan/rng.hpp"

namespace randchan::channels {

namespace {

using exactmath::BigInt;
using linalg::Matrix;
using linalg::RationalMatrix;
using linalg::Vector;

constexpr std::uint64_t kDefaultCap = 10'000'000;
constexpr std::uint64_t kMcChunk = 4096;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// columns A^i b_c for i = 0..depth-1, c = 0..m-1
std::vector<std::vector<Vector>> power_columns(const Matrix& a, const Matrix& b, int depth) {
  std::vector<std::vector<Vector>> table(static_cast<size_t>(depth));
  Matrix v = b;
  for (int i = 0; i < depth; ++i) {
    auto& row = table[static_cast<size_t>(i)];
    row.reserve(static_cast<size_t>(b.cols()));
    for (int c = 0; c < b.cols(); ++c) row.push_back(v.col(c));
    if (i + 1 < depth) v = a * v;
  }
  return table;
}

std::vector<std::vector<std::vector<linalg::Rational>>> power_columns_exact(
    const RationalMatrix& a, const RationalMatrix& b, int depth) {
  const int n = b.rows(), m = b.cols();
  std::vector<std::vector<std::vector<linalg::Rational>>> table(static_cast<size_t>(depth));
  RationalMatrix v = b;
  for (int i = 0; i < depth; ++i) {
    auto& row = table[static_cast<size_t>(i)];
    row.resize(static_cast<size_t>(m));
    for (int c = 0; c < m; ++c) {
      auto& col = row[static_cast<size_t>(c)];
      col.resize(static_cast<size_t>(n));
      for (int r = 0; r < n; ++r) col[static_cast<size_t>(r)] = v(r, c);
    }
    if (i + 1 < depth) {
      RationalMatrix next(n, m);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < m; ++c) {
          linalg::Rational acc = 0;
          for (int j = 0; j < n; ++j) acc += a(r, j) * v(j, c);
          next(r, c) = acc;
        }
      v = next;
    }
  }
  return table;
}

// Depth-first generation of index sequences d(0..n-1) over {0..m-1} in which
// every channel appears; branches that cannot cover anymore are pruned, so
// exactly m! * S(n, m) leaves are visited, in lexicographic order of d.
// Position i of d is the channel whose column carries A^i, i.e.
// d(i) = gamma(n-1-i).  Returns false once `spans` rejects a leaf.
template <class SpanTest>
bool covering_scan(std::vector<int>& d, int pos, unsigned mask, int n, int m,
                   std::uint64_t& tested, std::vector<int>& failure, SpanTest&& spans) {
  if (pos == n) {
    ++tested;
    if (spans(d)) return true;
    failure = d;
    return false;
  }
  for (int c = 0; c < m; ++c) {
    const unsigned next_mask = mask | (1u << c);
    if (m - std::popcount(next_mask) > n - pos - 1) continue;
    d[static_cast<size_t>(pos)] = c;
    if (!covering_scan(d, pos + 1, next_mask, n, m, tested, failure,
                       std::forward<SpanTest>(spans)))
      return false;
  }
  return true;
}

template <class SpanTest>
RcVerdict covering_verdict(int n, int m, SpanTest&& spans) {
  require(m >= 1, "random channel test requires at least one channel");
  require(m <= n,
          "random channel test requires channels <= state dimension "
          "(a covering length-n sequence must fit all channels)");
  const BigInt cover_count = exactmath::factorial(m) * exactmath::stirling2(n, m);
  if (cover_count > enumeration_cap())
    throw CapExceeded("covering-sequence enumeration of size " + cover_count.str() +
                      " exceeds cap " + std::to_string(enumeration_cap()));

  RcVerdict verdict;
  verdict.holds = true;
  std::vector<int> d(static_cast<size_t>(n), 0);
  std::vector<int> failure;
  if (!covering_scan(d, 0, 0u, n, m, verdict.sequences_tested, failure,
                     std::forward<SpanTest>(spans))) {
    verdict.holds = false;
    ChannelSequence gamma;
    gamma.indices.assign(failure.rbegin(), failure.rend());  // gamma(j) = d(n-1-j)
    verdict.counterexample = std::move(gamma);
  }
  return verdict;
}

RcVerdict rcc_numeric(const Matrix& a, const Matrix& b, double tol) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  const auto powers = power_columns(a, b, n);
  Matrix candidate(n, n);
  auto verdict = covering_verdict(n, m, [&](const std::vector<int>& d) {
    for (int i = 0; i < n; ++i)
      candidate.col(i) = powers[static_cast<size_t>(i)][static_cast<size_t>(d[i])];
    return linalg::rank(candidate, tol) == n;
  });
  verdict.singular_a_warning = linalg::rank(a, tol) < n;
  return verdict;
}

RcVerdict rcc_exact_impl(const RationalMatrix& a, const RationalMatrix& b) {
  const int n = a.rows();
  const int m = b.cols();
  const auto powers = power_columns_exact(a, b, n);
  RationalMatrix candidate(n, n);
  auto verdict = covering_verdict(n, m, [&](const std::vector<int>& d) {
    for (int i = 0; i < n; ++i) {
      const auto& col = powers[static_cast<size_t>(i)][static_cast<size_t>(d[i])];
      for (int r = 0; r < n; ++r) candidate(r, i) = col[static_cast<size_t>(r)];
    }
    return linalg::rank(candidate) == n;
  });
  verdict.singular_a_warning = linalg::rank(a) < n;
  return verdict;
}

// (A, columns) pair for the requested side; output side works on the dual
std::pair<Matrix, Matrix> side_pair(const LtiSystem& sys, Side side) {
  if (side == Side::Input) return {sys.A, sys.B};
  require(sys.has_output(), "output-side analysis requires a C matrix");
  return {sys.A.transpose(), sys.C.transpose()};
}

}  // namespace

LtiSystem LtiSystem::make(Matrix a, Matrix b, Matrix c) {
  require(a.rows() > 0 && a.rows() == a.cols(), "A must be square and nonempty");
  require(b.rows() == a.rows() && b.cols() >= 1, "B must be n x m with m >= 1");
  if (c.size() > 0) require(c.cols() == a.rows(), "C must be q x n");
  require(a.allFinite() && b.allFinite() && (c.size() == 0 || c.allFinite()),
          "system matrices must be finite");
  return LtiSystem{std::move(a), std::move(b), std::move(c)};
}

RationalLti RationalLti::make(RationalMatrix a, RationalMatrix b, RationalMatrix c) {
  require(a.rows() > 0 && a.rows() == a.cols(), "A must be square and nonempty");
  require(b.rows() == a.rows() && b.cols() >= 1, "B must be n x m with m >= 1");
  if (c.rows() > 0) require(c.cols() == a.rows(), "C must be q x n");
  return RationalLti{std::move(a), std::move(b), std::move(c)};
}

LtiSystem RationalLti::to_double() const {
  return LtiSystem::make(A.to_double(), B.to_double(),
                         C.rows() > 0 ? C.to_double() : Matrix{});
}

std::uint64_t enumeration_cap() {
  if (const char* env = std::getenv("RANDCHAN_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return kDefaultCap;
}

bool kalman_controllable(const LtiSystem& sys, double tol) {
  const int n = sys.n(), m = sys.m();
  Matrix ctrl(n, static_cast<Eigen::Index>(n) * m);
  Matrix block = sys.B;
  for (int i = 0; i < n; ++i) {
    ctrl.middleCols(static_cast<Eigen::Index>(i) * m, m) = block;
    if (i + 1 < n) block = sys.A * block;
  }
  return linalg::rank(ctrl, tol) == n;
}

bool kalman_observable(const LtiSystem& sys, double tol) {
  require(sys.has_output(), "kalman_observable requires a C matrix");
  return kalman_controllable(
      LtiSystem::make(sys.A.transpose(), sys.C.transpose()), tol);
}

RcVerdict is_rcc(const LtiSystem& sys, double tol) { return rcc_numeric(sys.A, sys.B, tol); }

RcVerdict is_rco(const LtiSystem& sys, double tol) {
  require(sys.has_output(), "is_rco requires a C matrix");
  return rcc_numeric(sys.A.transpose(), sys.C.transpose(), tol);
}

RcVerdict is_rcc_exact(const RationalLti& sys) { return rcc_exact_impl(sys.A, sys.B); }

RcVerdict is_rco_exact(const RationalLti& sys) {
  require(sys.has_output(), "is_rco_exact requires a C matrix");
  return rcc_exact_impl(sys.A.transpose(), sys.C.transpose());
}

SpanningFraction spanning_fraction_exact(const LtiSystem& sys, int k, Side side, double tol) {
  require(k >= 1, "spanning fraction requires k >= 1");
  const auto [a, cols] = side_pair(sys, side);
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(cols.cols());

  const BigInt total_big = exactmath::int_pow(m, k);
  if (total_big > enumeration_cap())
    throw CapExceeded("exact spanning enumeration of size " + total_big.str() +
                      " exceeds cap " + std::to_string(enumeration_cap()));
  const auto total = total_big.convert_to<std::uint64_t>();

  SpanningFraction out;
  out.mode = SpanningFraction::Mode::Exact;
  out.k = k;
  out.total = total;

  if (k >= n) {  // fewer than n vectors can never span
    const auto powers = power_columns(a, cols, k);
    const auto chunks = detail::chunk_count(total, kMcChunk);
    std::vector<std::uint64_t> counts(chunks, 0);
    detail::for_each_chunk(total, kMcChunk, 0, [&](std::uint64_t c, std::uint64_t lo,
                                                   std::uint64_t hi) {
      // decode lo into odometer digits d (d[0] most significant)
      std::vector<int> d(static_cast<size_t>(k), 0);
      std::uint64_t rem = lo;
      for (int i = k - 1; i >= 0; --i) {
        d[static_cast<size_t>(i)] = static_cast<int>(rem % m);
        rem /= m;
      }
      Matrix candidate(n, k);
      std::uint64_t hits = 0;
      for (std::uint64_t s = lo; s < hi; ++s) {
        for (int i = 0; i < k; ++i)
          candidate.col(i) = powers[static_cast<size_t>(i)][static_cast<size_t>(d[i])];
        if (linalg::rank(candidate, tol) == n) ++hits;
        int pos = k - 1;
        while (pos >= 0 && ++d[static_cast<size_t>(pos)] == m) {
          d[static_cast<size_t>(pos)] = 0;
          --pos;
        }
      }
      counts[c] = hits;
    });
    for (const auto h : counts) out.spanning_count += h;
  }
  out.value = exactmath::to_double(out.exact_value());
  return out;
}

SpanningFraction spanning_fraction_mc(const LtiSystem& sys, int k, std::uint64_t trials,
                                      std::uint64_t seed, Side side, double tol, int threads) {
  require(k >= 1, "spanning fraction requires k >= 1");
  require(trials >= 1, "spanning_fraction_mc requires trials >= 1");
  const auto [a, cols] = side_pair(sys, side);
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(cols.cols());
  const auto powers = power_columns(a, cols, k);

  const auto chunks = detail::chunk_count(trials, kMcChunk);
  std::vector<std::uint64_t> counts(chunks, 0);
  detail::for_each_chunk(trials, kMcChunk, threads, [&](std::uint64_t c, std::uint64_t lo,
                                                        std::uint64_t hi) {
    Matrix candidate(n, k);
    std::uint64_t hits = 0;
    for (std::uint64_t trial = lo; trial < hi; ++trial) {
      rng::Stream stream(seed, trial);
      for (int i = 0; i < k; ++i) {
        const auto channel = stream.next_below(static_cast<std::uint32_t>(m));
        candidate.col(i) = powers[static_cast<size_t>(i)][channel];
      }
      if (k >= n && linalg::rank(candidate, tol) == n) ++hits;
    }
    counts[c] = hits;
  });

  SpanningFraction out;
  out.mode = SpanningFraction::Mode::MonteCarlo;
  out.k = k;
  out.total = trials;
  for (const auto h : counts) out.spanning_count += h;
  out.value = static_cast<double>(out.spanning_count) / static_cast<double>(trials);
  out.std_error = std::sqrt(out.value * (1.0 - out.value) / static_cast<double>(trials));
  return out;
}

SteerResult steer(const LtiSystem& sys, const ChannelSequence& gamma, const Vector& x0,
                  const Vector& xf, double tol) {
  const int n = sys.n(), m = sys.m(), k = gamma.length();
  require(k >= 1, "steer requires a nonempty channel sequence");
  require(x0.size() == n && xf.size() == n, "steer: state dimension mismatch");
  for (const int c : gamma.indices)
    require(c >= 0 && c < m, "steer: channel index out of range");

  // column j carries A^j b_gamma(k-1-j)
  Matrix chain(n, k);
  Matrix block = sys.B;
  Vector drift = x0;
  for (int j = 0; j < k; ++j) {
    chain.col(j) = block.col(gamma.indices[static_cast<size_t>(k - 1 - j)]);
    drift = sys.A * drift;
    if (j + 1 < k) block = sys.A * block;
  }

  const Vector target = xf - drift;
  const Vector w = linalg::solve_min_norm(chain, target, tol);

  SteerResult out;
  out.inputs.resize(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) out.inputs[static_cast<size_t>(i)] = w(k - 1 - i);
  out.residual = (chain * w - target).norm();
  return out;
}

Vector propagate(const LtiSystem& sys, const ChannelSequence& gamma,
                 const std::vector<double>& inputs, const Vector& x0) {
  require(gamma.length() == static_cast<int>(inputs.size()),
          "propagate: schedule and input lengths differ");
  require(x0.size() == sys.n(), "propagate: state dimension mismatch");
  Vector x = x0;
  for (int i = 0; i < gamma.length(); ++i) {
    const int c = gamma.indices[static_cast<size_t>(i)];
    require(c >= 0 && c < sys.m(), "propagate: channel index out of range");
    x = sys.A * x + sys.B.col(c) * inputs[static_cast<size_t>(i)];
  }
  return x;
}

ReconstructResult reconstruct_state(const LtiSystem& sys, const ChannelSequence& gamma,
                                    const std::vector<double>& y_seq, double tol) {
  require(sys.has_output(), "reconstruct_state requires a C matrix");
  const int n = sys.n(), q = sys.q(), k = gamma.length();
  require(k == static_cast<int>(y_seq.size()),
          "reconstruct_state: schedule and output lengths differ");

  Matrix stacked(k, n);
  Matrix block = sys.C.transpose();  // columns (A^T)^j c_r^T
  for (int j = 0; j < k; ++j) {
    const int c = gamma.indices[static_cast<size_t>(j)];
    require(c >= 0 && c < q, "reconstruct_state: channel index out of range");
    stacked.row(j) = block.col(c).transpose();
    if (j + 1 < k) block = sys.A.transpose() * block;
  }

  const Vector y = Eigen::Map<const Vector>(y_seq.data(), k);
  ReconstructResult out;
  out.x0 = linalg::solve_min_norm(stacked, y, tol);
  out.residual = (stacked * out.x0 - y).norm();
  return out;
}

}  // namespace randchan::channels
