#include "randchan/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "randchan/parallel.hpp"
#include "randchan/rng.hpp"

namespace randchan::simulate {

namespace {

using linalg::Matrix;
using linalg::Vector;

constexpr std::uint64_t kEnsembleChunk = 256;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::vector<double> cumulative_weights(const SchedulerSpec& spec, int m) {
  std::vector<double> cum(static_cast<size_t>(m));
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    acc += spec.weights.empty() ? 1.0 / m : spec.weights[static_cast<size_t>(j)];
    cum[static_cast<size_t>(j)] = acc;
  }
  return cum;
}

int draw_single(rng::Stream& stream, const std::vector<double>& cum) {
  const double u = stream.next_double();
  for (size_t j = 0; j + 1 < cum.size(); ++j)
    if (u < cum[j]) return static_cast<int>(j);
  return static_cast<int>(cum.size()) - 1;
}

bool clamp_state(Vector& x) {
  bool clamped = false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x(i)) > kOverflowClamp || !std::isfinite(x(i))) {
      x(i) = std::clamp(x(i), -kOverflowClamp, kOverflowClamp);
      clamped = true;
    }
  }
  return clamped;
}

double nearest_rank(std::vector<double>& sorted_values, double quantile) {
  const auto n = sorted_values.size();
  const auto rank = std::max<size_t>(
      1, static_cast<size_t>(std::ceil(quantile * static_cast<double>(n))));
  return sorted_values[std::min(rank, n) - 1];
}

// Draws one scheduler step and advances the state in place; returns the
// active set through `active` and whether the state had to be clamped.
bool step_closed_loop(const SimConfig& config, const std::vector<double>& cum,
                      rng::Stream& stream, Vector& x, std::vector<int>& active) {
  active.clear();
  if (config.scheduler.kind == SchedulerSpec::Kind::UniformSingle) {
    active.push_back(draw_single(stream, cum));
  } else {
    for (int j = 0; j < config.sys.m(); ++j)
      if (stream.next_double() < config.scheduler.activity_prob) active.push_back(j);
  }
  Vector next = config.sys.A * x;
  for (const int j : active) next += config.sys.B.col(j) * (config.gains.row(j) * x).value();
  const bool clamped = clamp_state(next);
  x = next;
  return clamped;
}

}  // namespace

MomentMultipliers moment_multipliers(const SwitchProcessParams& params) {
  require(params.p >= 0.0 && params.p <= 1.0, "switch probability must lie in [0, 1]");
  require(std::isfinite(params.a) && std::isfinite(params.b), "multipliers must be finite");
  return {params.p * params.a + (1.0 - params.p) * params.b,
          params.p * params.a * params.a + (1.0 - params.p) * params.b * params.b};
}

StabilityReport stability_report(const SwitchProcessParams& params) {
  const auto [m1, m2] = moment_multipliers(params);
  return {std::abs(m1) < 1.0, m2 < 1.0, m1 < 0.0};
}

double max_stable_mode(int n, Moment moment) {
  if (n < 2) throw std::invalid_argument("max_stable_mode requires n >= 2");
  const double bound = static_cast<double>(n) / (n - 1);
  return moment == Moment::First ? bound : std::sqrt(bound);
}

std::vector<double> simulate_bernoulli(const SwitchProcessParams& params, double x0,
                                       int horizon, std::uint64_t seed) {
  require(horizon >= 1, "simulate_bernoulli requires horizon >= 1");
  require(params.p >= 0.0 && params.p <= 1.0, "switch probability must lie in [0, 1]");
  std::vector<double> traj(static_cast<size_t>(horizon) + 1);
  traj[0] = x0;
  rng::Stream stream(seed, 0);
  for (int k = 0; k < horizon; ++k) {
    const double mult = stream.next_double() < params.p ? params.a : params.b;
    traj[static_cast<size_t>(k) + 1] = mult * traj[static_cast<size_t>(k)];
  }
  return traj;
}

void SchedulerSpec::validate(int m) const {
  if (kind == Kind::UniformSingle) {
    if (!weights.empty()) {
      require(static_cast<int>(weights.size()) == m,
              "scheduler weights must have one entry per channel");
      double sum = 0.0;
      for (const double w : weights) {
        require(w >= 0.0 && w <= 1.0, "scheduler weights must lie in [0, 1]");
        sum += w;
      }
      require(std::abs(sum - 1.0) <= 1e-12, "scheduler weights must sum to 1");
    }
  } else {
    require(activity_prob >= 0.0 && activity_prob <= 1.0,
            "activity probability must lie in [0, 1]");
  }
}

void SimConfig::validate() const {
  scheduler.validate(sys.m());
  require(gains.rows() == sys.m() && gains.cols() == sys.n(),
          "gains must be m x n (one feedback row per channel)");
  require(x0.size() == sys.n(), "x0 dimension mismatch");
  require(horizon >= 1, "horizon must be >= 1");
}

ClosedLoopRun simulate_closed_loop(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  const int m = config.sys.m();
  const int horizon = config.horizon;
  const auto cum = cumulative_weights(config.scheduler, m);

  ClosedLoopRun run;
  run.states.reserve(static_cast<size_t>(horizon) + 1);
  run.schedule.reserve(static_cast<size_t>(horizon));
  run.states.push_back(config.x0);

  rng::Stream stream(seed, 0);
  Vector x = config.x0;
  std::vector<int> active;
  for (int k = 0; k < horizon; ++k) {
    if (step_closed_loop(config, cum, stream, x, active)) run.overflowed = true;
    run.states.push_back(x);
    run.schedule.push_back(active);
  }
  return run;
}

EnsembleStats run_ensemble(const SimConfig& config, std::uint64_t trials, std::uint64_t seed,
                           const EnsembleOptions& options) {
  config.validate();
  require(trials >= 2, "run_ensemble requires trials >= 2");
  const int dim = config.sys.n();
  const int horizon = config.horizon;
  const size_t cells = (static_cast<size_t>(horizon) + 1) * static_cast<size_t>(dim);

  struct ChunkAccum {
    std::vector<double> sum, sum_sq;
    std::uint64_t overflowed = 0;
  };
  const auto chunks = detail::chunk_count(trials, kEnsembleChunk);
  std::vector<ChunkAccum> acc(chunks);
  const auto cum = cumulative_weights(config.scheduler, config.sys.m());

  // per-trial sample storage, only when percentiles were requested
  std::vector<double> samples;
  std::vector<std::uint8_t> trial_overflowed(trials, 0);
  if (options.percentiles) samples.resize(cells * trials);

  detail::for_each_chunk(
      trials, kEnsembleChunk, options.threads,
      [&](std::uint64_t c, std::uint64_t lo, std::uint64_t hi) {
        auto& slot = acc[c];
        slot.sum.assign(cells, 0.0);
        slot.sum_sq.assign(cells, 0.0);
        std::vector<double> traj(cells);
        std::vector<int> active;
        for (std::uint64_t trial = lo; trial < hi; ++trial) {
          // same recursion as simulate_closed_loop, on stream (seed, trial)
          rng::Stream stream(seed, trial);
          Vector x = config.x0;
          for (int d = 0; d < dim; ++d) traj[static_cast<size_t>(d)] = x(d);
          bool overflowed = false;
          for (int k = 0; k < horizon; ++k) {
            if (step_closed_loop(config, cum, stream, x, active)) overflowed = true;
            for (int d = 0; d < dim; ++d)
              traj[(static_cast<size_t>(k) + 1) * dim + d] = x(d);
          }
          if (options.percentiles)
            std::copy(traj.begin(), traj.end(), samples.begin() + cells * trial);
          if (overflowed) {
            trial_overflowed[trial] = 1;
            ++slot.overflowed;
            continue;
          }
          for (size_t i = 0; i < cells; ++i) {
            slot.sum[i] += traj[i];
            slot.sum_sq[i] += traj[i] * traj[i];
          }
        }
      });

  EnsembleStats stats;
  stats.horizon = horizon;
  stats.dim = dim;
  stats.trials = trials;
  stats.mean.assign(cells, 0.0);
  stats.variance.assign(cells, 0.0);

  std::vector<double> sum(cells, 0.0), sum_sq(cells, 0.0);
  for (const auto& slot : acc) {  // chunk order: deterministic reduction
    stats.overflowed += slot.overflowed;
    for (size_t i = 0; i < cells; ++i) {
      sum[i] += slot.sum[i];
      sum_sq[i] += slot.sum_sq[i];
    }
  }
  stats.included = trials - stats.overflowed;
  if (stats.included >= 1) {
    const auto n = static_cast<double>(stats.included);
    for (size_t i = 0; i < cells; ++i) {
      stats.mean[i] = sum[i] / n;
      if (stats.included >= 2)
        stats.variance[i] = std::max(0.0, (sum_sq[i] - n * stats.mean[i] * stats.mean[i]) /
                                              (n - 1.0));
    }
  }

  if (options.percentiles && stats.included >= 1) {
    stats.p05.assign(cells, 0.0);
    stats.p50.assign(cells, 0.0);
    stats.p95.assign(cells, 0.0);
    std::vector<double> bucket;
    bucket.reserve(stats.included);
    for (size_t i = 0; i < cells; ++i) {
      bucket.clear();
      for (std::uint64_t t = 0; t < trials; ++t)
        if (!trial_overflowed[t]) bucket.push_back(samples[cells * t + i]);
      std::sort(bucket.begin(), bucket.end());
      stats.p05[i] = nearest_rank(bucket, 0.05);
      stats.p50[i] = nearest_rank(bucket, 0.50);
      stats.p95[i] = nearest_rank(bucket, 0.95);
    }
  }
  return stats;
}

double WaitingTimeStats::Channel::central_moment(int order) const {
  if (count == 0) return 0.0;
  double acc = 0.0;
  for (size_t g = 0; g < histogram.size(); ++g) {
    if (histogram[g] == 0) continue;
    acc += static_cast<double>(histogram[g]) *
           std::pow(static_cast<double>(g) - mean, order);
  }
  return acc / static_cast<double>(count);
}

WaitingTimeStats waiting_time_stats(int m, std::uint64_t trials, int horizon,
                                    std::uint64_t seed, int threads) {
  require(m >= 1, "waiting_time_stats requires m >= 1");
  require(trials >= 1 && horizon >= 1, "waiting_time_stats requires trials, horizon >= 1");

  using Histogram = std::vector<std::vector<std::uint64_t>>;  // [channel][gap]
  const auto chunks = detail::chunk_count(trials, kEnsembleChunk);
  std::vector<Histogram> acc(chunks);

  detail::for_each_chunk(trials, kEnsembleChunk, threads,
                         [&](std::uint64_t c, std::uint64_t lo, std::uint64_t hi) {
                           Histogram hist(static_cast<size_t>(m));
                           std::vector<int> last_seen(static_cast<size_t>(m));
                           for (std::uint64_t trial = lo; trial < hi; ++trial) {
                             rng::Stream stream(seed, trial);
                             std::fill(last_seen.begin(), last_seen.end(), -1);
                             for (int k = 0; k < horizon; ++k) {
                               const auto j = stream.next_below(static_cast<std::uint32_t>(m));
                               if (last_seen[j] >= 0) {
                                 const auto gap = static_cast<size_t>(k - last_seen[j]);
                                 if (hist[j].size() <= gap) hist[j].resize(gap + 1, 0);
                                 ++hist[j][gap];
                               }
                               last_seen[j] = k;
                             }
                           }
                           acc[c] = std::move(hist);
                         });

  WaitingTimeStats stats;
  stats.channels = m;
  stats.per_channel.resize(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    auto& ch = stats.per_channel[static_cast<size_t>(j)];
    for (const auto& hist : acc) {
      const auto& h = hist[static_cast<size_t>(j)];
      if (ch.histogram.size() < h.size()) ch.histogram.resize(h.size(), 0);
      for (size_t g = 0; g < h.size(); ++g) ch.histogram[g] += h[g];
    }
    std::uint64_t count = 0, sum = 0;
    for (size_t g = 0; g < ch.histogram.size(); ++g) {
      count += ch.histogram[g];
      sum += ch.histogram[g] * g;
    }
    ch.count = count;
    if (count >= 1) ch.mean = static_cast<double>(sum) / static_cast<double>(count);
    if (count >= 2)
      ch.variance = ch.central_moment(2) * static_cast<double>(count) /
                    (static_cast<double>(count) - 1.0);
  }
  return stats;
}

}  // namespace randchan::simulate
