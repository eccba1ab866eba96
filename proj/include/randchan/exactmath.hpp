#pragma once

#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace randchan::exactmath {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Stirling number of the second kind S(k, n): partitions of k objects into n
// nonempty cells.  Exact for any size; S(k, n) = 0 for k < n, S(0, 0) = 1.
BigInt stirling2(int k, int n);

BigInt factorial(int n);
BigInt binomial(int n, int k);
BigInt int_pow(int base, int exp);

// nearest double for an exact rational of any magnitude
double to_double(const Rational& r);

// Probability that k uniform draws with replacement from a basis of R^n span
// R^n: n! * S(k, n) / n^k.
Rational span_prob_exact(int n, int k);

// Same value as a double.  Falls back to the inclusion-exclusion sum
// sum_j (-1)^j C(n,j) ((n-j)/n)^k for large k, where the exact rational gets
// unwieldy.
double span_prob_float(int n, int k);

// Three-term expansion 1 - n((n-1)/n)^k + (n(n-1)/2)((n-2)/n)^k; exact for
// n <= 3, error o(((n-2)/n)^k) otherwise.  Requires n >= 2, k >= n.
double span_prob_asymptotic(int n, int k);

struct SpanSeriesResult {
  double value = 0.0;
  int terms_used = 0;
  double truncation_bound = 0.0;  // certified bound on the discarded tail
};

// Mean length of non-spanning draw sequences: sum over k >= 2 of
// k * (1 - span_prob(n, k)).  The series is truncated once the geometric
// majorant of the tail, n * sum_{j>k} j ((n-1)/n)^j in closed form, drops
// below tol; that bound is returned so value..value+bound brackets the limit.
// Requires n >= 2, tol > 0.
SpanSeriesResult mean_nonspan_length(int n, double tol);

struct SpanTableRow {
  int n = 0;
  int k = 0;
  Rational p_exact;
  double p = 0.0;
};

// Rows (n, k, p) for every n in n_values and k = 1..k_max, ordered by (n, k).
std::vector<SpanTableRow> spanning_table(const std::vector<int>& n_values, int k_max);

}  // namespace randchan::exactmath
