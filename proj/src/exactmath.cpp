#include "randchan/exactmath.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace randchan::exactmath {

namespace {

namespace mp = boost::multiprecision;

// Walks the triangle recurrence S(k, j) = j S(k-1, j) + S(k-1, j-1) one row
// at a time, keeping only columns 0..n_max.
class StirlingRow {
 public:
  explicit StirlingRow(int n_max) : row_(static_cast<size_t>(n_max) + 1) { row_[0] = 1; }

  void advance() {
    ++k_;
    for (size_t j = row_.size() - 1; j >= 1; --j) {
      row_[j] = static_cast<int>(j) * row_[j] + row_[j - 1];
    }
    row_[0] = 0;  // S(k, 0) = 0 for k >= 1
  }

  int k() const { return k_; }
  const BigInt& at(int n) const { return row_[static_cast<size_t>(n)]; }

 private:
  int k_ = 0;
  std::vector<BigInt> row_;
};

void check_span_args(int n, int k) {
  if (n < 1) throw std::invalid_argument("span probability requires n >= 1");
  if (k < 0) throw std::invalid_argument("span probability requires k >= 0");
}

// closed form of n * sum_{j >= k+1} j * rho^j with rho = (n-1)/n
double tail_majorant(int n, int k, double rho) {
  const double head = std::pow(rho, k + 1);
  return n * head * ((k + 1) - k * rho) / ((1.0 - rho) * (1.0 - rho));
}

}  // namespace

BigInt stirling2(int k, int n) {
  if (k < 0 || n < 0) throw std::invalid_argument("stirling2 requires k, n >= 0");
  if (n > k) return 0;
  if (n == 0) return k == 0 ? 1 : 0;
  StirlingRow row(n);
  while (row.k() < k) row.advance();
  return row.at(n);
}

BigInt factorial(int n) {
  if (n < 0) throw std::invalid_argument("factorial requires n >= 0");
  BigInt r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (int i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

BigInt int_pow(int base, int exp) {
  if (exp < 0) throw std::invalid_argument("int_pow requires exp >= 0");
  return mp::pow(BigInt(base), static_cast<unsigned>(exp));
}

double to_double(const Rational& r) {
  // convert through a wide float so huge numerators/denominators cannot
  // overflow on the way to double
  using Wide = mp::cpp_bin_float_50;
  const Wide num(mp::numerator(r));
  const Wide den(mp::denominator(r));
  return static_cast<double>(num / den);
}

Rational span_prob_exact(int n, int k) {
  check_span_args(n, k);
  if (k < n) return Rational(0);
  return Rational(factorial(n) * stirling2(k, n), int_pow(n, k));
}

double span_prob_float(int n, int k) {
  check_span_args(n, k);
  if (k < n) return 0.0;
  if (k <= 300) return to_double(span_prob_exact(n, k));
  double acc = 0.0;
  double sign = 1.0;
  for (int j = 0; j <= n; ++j) {
    const double coeff = to_double(Rational(binomial(n, j)));
    acc += sign * coeff * std::pow(static_cast<double>(n - j) / n, k);
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, acc));
}

double span_prob_asymptotic(int n, int k) {
  if (n < 2) throw std::invalid_argument("span_prob_asymptotic requires n >= 2");
  if (k < n) throw std::invalid_argument("span_prob_asymptotic requires k >= n");
  const double nd = n;
  return 1.0 - nd * std::pow((nd - 1.0) / nd, k) +
         0.5 * nd * (nd - 1.0) * std::pow((nd - 2.0) / nd, k);
}

SpanSeriesResult mean_nonspan_length(int n, double tol) {
  if (n < 2) throw std::invalid_argument("mean_nonspan_length requires n >= 2");
  if (!(tol > 0.0)) throw std::invalid_argument("mean_nonspan_length requires tol > 0");

  const double rho = static_cast<double>(n - 1) / n;
  const BigInt n_fact = factorial(n);
  StirlingRow row(n);
  row.advance();      // k = 1 contributes nothing: sequences of length >= 2
  BigInt n_pow = n;   // n^k for the current row

  SpanSeriesResult out;
  double sum = 0.0;
  int k = 1;
  while (true) {
    ++k;
    row.advance();
    n_pow *= n;
    const Rational not_span = Rational(1) - Rational(n_fact * row.at(n), n_pow);
    sum += k * to_double(not_span);
    ++out.terms_used;
    const double tail = tail_majorant(n, k, rho);
    if (k >= n && tail < tol) {
      out.truncation_bound = tail;
      break;
    }
  }
  out.value = sum;
  return out;
}

std::vector<SpanTableRow> spanning_table(const std::vector<int>& n_values, int k_max) {
  for (int n : n_values)
    if (n < 1) throw std::invalid_argument("spanning_table requires all n >= 1");
  if (k_max < 1) throw std::invalid_argument("spanning_table requires k_max >= 1");

  std::vector<SpanTableRow> rows;
  rows.reserve(n_values.size() * static_cast<size_t>(k_max));
  for (int n : n_values) {
    const BigInt n_fact = factorial(n);
    StirlingRow srow(n);
    BigInt n_pow = 1;
    for (int k = 1; k <= k_max; ++k) {
      srow.advance();
      n_pow *= n;
      Rational p(n_fact * srow.at(n), n_pow);
      rows.push_back({n, k, p, to_double(p)});
    }
  }
  return rows;
}

}  // namespace randchan::exactmath
