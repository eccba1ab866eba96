#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "randchan/exactmath.hpp"
#include "randchan/linalg.hpp"

namespace randchan::channels {

// State-space triple x(k+1) = A x(k) + B u(k), y(k) = C x(k).  C may be
// 0 x n for systems without outputs; output-side analyses then refuse to run.
struct LtiSystem {
  linalg::Matrix A;
  linalg::Matrix B;
  linalg::Matrix C;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int q() const { return static_cast<int>(C.rows()); }
  bool has_output() const { return C.rows() > 0; }

  // validates dimension consistency; C may be empty
  static LtiSystem make(linalg::Matrix a, linalg::Matrix b, linalg::Matrix c = {});
};

// Exact-rational twin of LtiSystem, for certification on rational data.
struct RationalLti {
  linalg::RationalMatrix A;
  linalg::RationalMatrix B;
  linalg::RationalMatrix C;

  int n() const { return A.rows(); }
  int m() const { return B.cols(); }
  int q() const { return C.rows(); }
  bool has_output() const { return C.rows() > 0; }

  static RationalLti make(linalg::RationalMatrix a, linalg::RationalMatrix b,
                          linalg::RationalMatrix c = {});
  LtiSystem to_double() const;
};

// Realized channel index sequence gamma(0..k-1); indices are 0-based here,
// 1-based at every user-facing surface.
struct ChannelSequence {
  std::vector<int> indices;
  int length() const { return static_cast<int>(indices.size()); }
};

struct RcVerdict {
  bool holds = false;
  // a covering length-n sequence whose vector set fails to span (when !holds)
  std::optional<ChannelSequence> counterexample;
  std::uint64_t sequences_tested = 0;
  bool singular_a_warning = false;
};

enum class Side { Input, Output };

struct SpanningFraction {
  enum class Mode { Exact, MonteCarlo };
  Mode mode = Mode::Exact;
  int k = 0;
  std::uint64_t spanning_count = 0;  // exact: spanning sequences; MC: hits
  std::uint64_t total = 0;           // exact: channels^k;       MC: trials
  double value = 0.0;
  double std_error = 0.0;  // Monte Carlo only

  exactmath::Rational exact_value() const {
    return exactmath::Rational(exactmath::BigInt(spanning_count), exactmath::BigInt(total));
  }
};

struct SteerResult {
  std::vector<double> inputs;  // u(0..k-1) in time order
  double residual = 0.0;       // |x(k) - xf|
};

struct ReconstructResult {
  linalg::Vector x0;
  double residual = 0.0;  // output misfit norm
};

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// enumeration budget (number of rank tests / sequences); RANDCHAN_CAP
// overrides the default of 10^7
std::uint64_t enumeration_cap();

bool kalman_controllable(const LtiSystem& sys, double tol = linalg::kDefaultTol);
bool kalman_observable(const LtiSystem& sys, double tol = linalg::kDefaultTol);

// Random channel controllability: every length-n channel sequence that uses
// each of the m inputs at least once must yield a spanning set
// {b_g(n-1), A b_g(n-2), ..., A^{n-1} b_g(0)}.  Requires m <= n.  Scans
// covering sequences in lexicographic order of (g(n-1), ..., g(0)) and
// reports the first failure as counterexample.
RcVerdict is_rcc(const LtiSystem& sys, double tol = linalg::kDefaultTol);

// dual property over the rows of C, evaluated as is_rcc on (A^T, C^T)
RcVerdict is_rco(const LtiSystem& sys, double tol = linalg::kDefaultTol);

// exact-arithmetic versions (proof-grade on rational data)
RcVerdict is_rcc_exact(const RationalLti& sys);
RcVerdict is_rco_exact(const RationalLti& sys);

// Exact spanning fraction: enumerates all channels^k sequences and counts
// those whose vector chain spans R^n.  Throws CapExceeded when channels^k
// exceeds the cap.
SpanningFraction spanning_fraction_exact(const LtiSystem& sys, int k, Side side = Side::Input,
                                         double tol = linalg::kDefaultTol);

// Monte Carlo estimate of the same fraction with binomial standard error;
// bitwise deterministic for a fixed seed at any thread count.
SpanningFraction spanning_fraction_mc(const LtiSystem& sys, int k, std::uint64_t trials,
                                      std::uint64_t seed, Side side = Side::Input,
                                      double tol = linalg::kDefaultTol, int threads = 0);

// Minimum-norm inputs steering x0 toward xf along the realized channel
// sequence; inputs are returned in time order with the terminal residual.
SteerResult steer(const LtiSystem& sys, const ChannelSequence& gamma, const linalg::Vector& x0,
                  const linalg::Vector& xf, double tol = linalg::kDefaultTol);

// Runs x(k+1) = A x(k) + b_gamma(k) u(k) and returns the final state.
linalg::Vector propagate(const LtiSystem& sys, const ChannelSequence& gamma,
                         const std::vector<double>& inputs, const linalg::Vector& x0);

// Least-squares estimate of x(0) from y(j) = c_gamma(j) A^j x(0).
ReconstructResult reconstruct_state(const LtiSystem& sys, const ChannelSequence& gamma,
                                    const std::vector<double>& y_seq,
                                    double tol = linalg::kDefaultTol);

}  // namespace randchan::channels
