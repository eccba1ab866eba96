#pragma once

#include <cstdint>
#include <vector>

#include "randchan/channels.hpp"
#include "randchan/linalg.hpp"

namespace randchan::simulate {

// Scalar switch x(k+1) = a x(k) with probability p, else b x(k).
struct SwitchProcessParams {
  double a = 0.0;
  double b = 0.0;
  double p = 0.0;
};

struct MomentMultipliers {
  double m1 = 0.0;  // p a + (1-p) b, per-step growth of the mean
  double m2 = 0.0;  // p a^2 + (1-p) b^2, per-step growth of the second moment
};

MomentMultipliers moment_multipliers(const SwitchProcessParams& params);

struct StabilityReport {
  bool mean_stable = false;           // |m1| < 1
  bool second_moment_stable = false;  // m2 < 1
  bool oscillatory_mean = false;      // m1 < 0: the mean alternates sign
};

StabilityReport stability_report(const SwitchProcessParams& params);

enum class Moment { First, Second };

// Largest open-loop mode that stays stable in the given moment under uniform
// single-channel access out of n channels: n/(n-1), or its square root for
// the second moment.  Requires n >= 2.
double max_stable_mode(int n, Moment moment);

// x(0..horizon); one uniform draw per step from stream (seed, 0)
std::vector<double> simulate_bernoulli(const SwitchProcessParams& params, double x0,
                                       int horizon, std::uint64_t seed);

struct SchedulerSpec {
  enum class Kind {
    UniformSingle,     // one channel per step; weights or uniform 1/m
    BernoulliPattern,  // each channel independently active with prob p
  };
  Kind kind = Kind::UniformSingle;
  std::vector<double> weights;  // UniformSingle only; empty means uniform
  double activity_prob = 0.5;   // BernoulliPattern only

  void validate(int m) const;
};

struct SimConfig {
  channels::LtiSystem sys;
  linalg::Matrix gains;  // m x n; row j applies u = gains.row(j) * x when channel j is active
  SchedulerSpec scheduler;
  linalg::Vector x0;
  int horizon = 1;

  void validate() const;
};

// trajectories are clamped to this magnitude and flagged once they exceed it
inline constexpr double kOverflowClamp = 1e300;

struct ClosedLoopRun {
  std::vector<linalg::Vector> states;      // horizon + 1 entries
  std::vector<std::vector<int>> schedule;  // active channel set per step, 0-based
  bool overflowed = false;
};

// One closed-loop trajectory: x(k+1) = A x(k) + sum_{j active} b_j (k_j x(k)).
// Scheduler draws come from stream (seed, 0): one uniform per step for
// UniformSingle (inverse CDF over the cumulative weights), m uniforms per
// step in channel order for BernoulliPattern.
ClosedLoopRun simulate_closed_loop(const SimConfig& config, std::uint64_t seed);

struct EnsembleStats {
  int horizon = 0;
  int dim = 0;
  std::uint64_t trials = 0;
  std::uint64_t included = 0;    // trials that never overflowed
  std::uint64_t overflowed = 0;  // excluded from all statistics
  std::vector<double> mean;      // row-major [step][coord], steps 0..horizon
  std::vector<double> variance;  // unbiased, same layout
  std::vector<double> p05, p50, p95;  // nearest-rank; empty unless requested

  double mean_at(int step, int coord) const {
    return mean[static_cast<size_t>(step) * dim + coord];
  }
  double var_at(int step, int coord) const {
    return variance[static_cast<size_t>(step) * dim + coord];
  }
};

struct EnsembleOptions {
  int threads = 0;           // 0 = hardware concurrency
  bool percentiles = false;  // also track p05/p50/p95 (stores all samples)
};

// Independent trajectories with per-trial streams (seed, trial); results are
// bitwise identical for a fixed seed at any thread count.
EnsembleStats run_ensemble(const SimConfig& config, std::uint64_t trials, std::uint64_t seed,
                           const EnsembleOptions& options = {});

struct WaitingTimeStats {
  struct Channel {
    std::uint64_t count = 0;  // gaps observed
    double mean = 0.0;
    double variance = 0.0;                 // unbiased
    std::vector<std::uint64_t> histogram;  // histogram[g] = gaps of length g

    double central_moment(int order) const;
  };
  int channels = 0;
  std::vector<Channel> per_channel;
};

// Uniform single-channel selection over `horizon` steps per trial; gaps are
// the step differences between consecutive selections of the same channel.
WaitingTimeStats waiting_time_stats(int m, std::uint64_t trials, int horizon,
                                    std::uint64_t seed, int threads = 0);

}  // namespace randchan::simulate
