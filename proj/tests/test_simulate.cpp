#include <doctest.h>

#include <cmath>
#include <vector>

#include "randchan/simulate.hpp"

using namespace randchan;
using namespace randchan::simulate;
using channels::LtiSystem;
using linalg::Matrix;
using linalg::Vector;

namespace {

SimConfig decoupled_config(int n, double mode, double gain, SchedulerSpec sched,
                           int horizon) {
  SimConfig config;
  config.sys = LtiSystem::make(Matrix::Identity(n, n) * mode, Matrix::Identity(n, n));
  config.gains = Matrix::Identity(n, n) * gain;
  config.scheduler = std::move(sched);
  config.x0 = Vector::Ones(n);
  config.horizon = horizon;
  return config;
}

}  // namespace

TEST_CASE("moment multipliers") {
  const auto fig = moment_multipliers({3.0, 0.3, 2.0 / 3.0});
  CHECK(fig.m1 == doctest::Approx(2.1).epsilon(1e-12));
  CHECK(fig.m2 == doctest::Approx(6.03).epsilon(1e-12));

  const auto degenerate = moment_multipliers({0.7, 0.7, 0.123});
  CHECK(degenerate.m1 == doctest::Approx(0.7));
  CHECK(degenerate.m2 == doctest::Approx(0.49));

  const auto half = moment_multipliers({1.8, 0.0, 0.5});
  CHECK(half.m1 == doctest::Approx(0.9));
  CHECK(half.m2 == doctest::Approx(1.62));

  CHECK_THROWS_AS(moment_multipliers({1.0, 1.0, 1.5}), std::invalid_argument);
}

TEST_CASE("stability report evaluates both strict inequalities") {
  const auto fig = stability_report({3.0, 0.3, 2.0 / 3.0});
  CHECK_FALSE(fig.mean_stable);
  CHECK_FALSE(fig.second_moment_stable);

  const auto half = stability_report({1.8, 0.0, 0.5});
  CHECK(half.mean_stable);
  CHECK_FALSE(half.second_moment_stable);
  CHECK_FALSE(half.oscillatory_mean);

  const auto contracting = stability_report({0.5, 0.5, 0.7});
  CHECK(contracting.mean_stable);
  CHECK(contracting.second_moment_stable);

  const auto oscillatory = stability_report({-2.0, 0.5, 0.5});
  CHECK(oscillatory.mean_stable);  // |m1| = 0.75
  CHECK(oscillatory.oscillatory_mean);
}

TEST_CASE("max stable mode thresholds") {
  CHECK(max_stable_mode(2, Moment::First) == 2.0);
  CHECK(max_stable_mode(2, Moment::Second) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(max_stable_mode(3, Moment::First) == 1.5);
  CHECK(max_stable_mode(3, Moment::Second) == std::sqrt(1.5));
  CHECK_THROWS_AS(max_stable_mode(1, Moment::First), std::invalid_argument);
}

TEST_CASE("bernoulli switch with degenerate probabilities is deterministic") {
  const auto sure_a = simulate_bernoulli({2.0, -1.0, 1.0}, 1.0, 3, 5);
  CHECK(sure_a == std::vector<double>{1, 2, 4, 8});

  const auto sure_b = simulate_bernoulli({9.0, 0.5, 0.0}, 4.0, 2, 5);
  CHECK(sure_b == std::vector<double>{4, 2, 1});

  // a == b contracts at exactly that rate regardless of the draws
  const auto both = simulate_bernoulli({0.5, 0.5, 0.37}, 8.0, 10, 17);
  for (int k = 0; k <= 10; ++k) CHECK(both[static_cast<size_t>(k)] == 8.0 * std::pow(0.5, k));
}

TEST_CASE("bernoulli ensemble mean follows m1^k") {
  const SwitchProcessParams params{1.8, 0.0, 0.5};
  const int trials = 20000, horizon = 10;
  std::vector<double> sum(horizon + 1, 0.0), sum_sq(horizon + 1, 0.0);
  for (int t = 0; t < trials; ++t) {
    const auto traj = simulate_bernoulli(params, 1.0, horizon, static_cast<std::uint64_t>(t));
    for (int k = 0; k <= horizon; ++k) {
      sum[static_cast<size_t>(k)] += traj[static_cast<size_t>(k)];
      sum_sq[static_cast<size_t>(k)] += traj[static_cast<size_t>(k)] * traj[static_cast<size_t>(k)];
    }
  }
  for (int k = 1; k <= horizon; ++k) {
    const double mean = sum[static_cast<size_t>(k)] / trials;
    const double var = (sum_sq[static_cast<size_t>(k)] - trials * mean * mean) / (trials - 1);
    const double se = std::sqrt(std::max(var, 0.0) / trials);
    CHECK(std::abs(mean - std::pow(0.9, k)) < 4.0 * se + 1e-12);
  }
}

TEST_CASE("closed loop with a single always-on channel is a scalar recursion") {
  SimConfig config;
  config.sys = LtiSystem::make(Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 1.0));
  config.gains = Matrix::Constant(1, 1, -2.7);
  config.scheduler.kind = SchedulerSpec::Kind::UniformSingle;
  config.scheduler.weights = {1.0};
  config.x0 = Vector::Ones(1);
  config.horizon = 3;
  const auto run = simulate_closed_loop(config, 99);
  REQUIRE(run.states.size() == 4);
  CHECK(run.states[1](0) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(run.states[2](0) == doctest::Approx(0.09).epsilon(1e-13));
  CHECK(run.states[3](0) == doctest::Approx(0.027).epsilon(1e-12));
  for (const auto& active : run.schedule) CHECK(active == std::vector<int>{0});
}

TEST_CASE("zero gains on an identity plant hold the state constant") {
  auto config = decoupled_config(2, 1.0, 0.0,
                                 SchedulerSpec{SchedulerSpec::Kind::UniformSingle, {}, 0.5}, 7);
  const auto run = simulate_closed_loop(config, 3);
  for (const auto& x : run.states) CHECK((x - config.x0).norm() == 0.0);
}

TEST_CASE("active coordinate closes the loop, inactive ones run open") {
  auto config = decoupled_config(3, 3.0, -2.7,
                                 SchedulerSpec{SchedulerSpec::Kind::UniformSingle, {}, 0.5}, 30);
  const auto run = simulate_closed_loop(config, 2024);
  for (int k = 0; k < config.horizon; ++k) {
    REQUIRE(run.schedule[static_cast<size_t>(k)].size() == 1);
    const int active = run.schedule[static_cast<size_t>(k)][0];
    for (int j = 0; j < 3; ++j) {
      const double prev = run.states[static_cast<size_t>(k)](j);
      const double next = run.states[static_cast<size_t>(k) + 1](j);
      CHECK(next == doctest::Approx((j == active ? 0.3 : 3.0) * prev).epsilon(1e-12));
    }
  }
}

TEST_CASE("last-channel coordinate couples exactly to the scalar switch") {
  // dyadic-friendly gain so both recursions stay within exact binary floats
  const int horizon = 25;
  auto config = decoupled_config(3, 3.0, -2.75,
                                 SchedulerSpec{SchedulerSpec::Kind::UniformSingle, {}, 0.5},
                                 horizon);
  const std::uint64_t seed = 77;
  const auto run = simulate_closed_loop(config, seed);

  double p = 0.0;  // replicate the scheduler's cumulative weights
  for (int i = 0; i < 2; ++i) p += 1.0 / 3.0;
  const auto scalar = simulate_bernoulli({3.0, 0.25, p}, 1.0, horizon, seed);

  for (int k = 0; k <= horizon; ++k)
    CHECK(run.states[static_cast<size_t>(k)](2) == scalar[static_cast<size_t>(k)]);
}

TEST_CASE("scheduler marginals match the requested distribution") {
  {
    auto config = decoupled_config(4, 1.0, 0.0,
                                   SchedulerSpec{SchedulerSpec::Kind::UniformSingle, {}, 0.5},
                                   20000);
    const auto run = simulate_closed_loop(config, 5150);
    std::vector<int> counts(4, 0);
    for (const auto& act : run.schedule) ++counts[static_cast<size_t>(act[0])];
    const double expect = 20000.0 / 4.0;
    const double se = std::sqrt(20000.0 * 0.25 * 0.75);
    for (const int c : counts) CHECK(std::abs(c - expect) < 4.0 * se);
  }
  {
    SchedulerSpec sched{SchedulerSpec::Kind::UniformSingle, {0.7, 0.2, 0.1}, 0.5};
    auto config = decoupled_config(3, 1.0, 0.0, sched, 20000);
    const auto run = simulate_closed_loop(config, 5151);
    std::vector<int> counts(3, 0);
    for (const auto& act : run.schedule) ++counts[static_cast<size_t>(act[0])];
    const std::vector<double> w{0.7, 0.2, 0.1};
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt(20000.0 * w[static_cast<size_t>(j)] * (1 - w[static_cast<size_t>(j)]));
      CHECK(std::abs(counts[static_cast<size_t>(j)] - 20000.0 * w[static_cast<size_t>(j)]) < 4.0 * se);
    }
  }
  {
    SchedulerSpec sched{SchedulerSpec::Kind::BernoulliPattern, {}, 0.3};
    auto config = decoupled_config(3, 1.0, 0.0, sched, 20000);
    const auto run = simulate_closed_loop(config, 5152);
    std::vector<int> counts(3, 0);
    for (const auto& act : run.schedule)
      for (const int j : act) ++counts[static_cast<size_t>(j)];
    const double se = std::sqrt(20000.0 * 0.3 * 0.7);
    for (const int c : counts) CHECK(std::abs(c - 20000.0 * 0.3) < 4.0 * se);
  }
}

TEST_CASE("ensemble statistics: determinism, variance, exclusion") {
  auto config = decoupled_config(3, 3.0, -2.7,
                                 SchedulerSpec{SchedulerSpec::Kind::UniformSingle, {}, 0.5}, 20);
  const auto base = run_ensemble(config, 500, 31337, {1, true});
  const auto threaded = run_ensemble(config, 500, 31337, {3, true});
  CHECK(base.mean == threaded.mean);  // bitwise, any thread count
  CHECK(base.variance == threaded.variance);
  CHECK(base.p95 == threaded.p95);
  CHECK(base.included == 500);

  // trial 0 of the ensemble replays simulate_closed_loop with the same seed,
  // so with two trials every sample is either the p05 or the p95 trajectory
  const auto run = simulate_closed_loop(config, 31337);
  const auto pair = run_ensemble(config, 2, 31337, {1, true});
  for (int k = 0; k <= 20; ++k)
    for (int d = 0; d < 3; ++d) {
      const double x = run.states[static_cast<size_t>(k)](d);
      const size_t cell = static_cast<size_t>(k) * 3 + static_cast<size_t>(d);
      CHECK((x == pair.p05[cell] || x == pair.p95[cell]));
    }

  // deterministic scheduler: variance identically zero
  SimConfig det;
  det.sys = LtiSystem::make(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0));
  det.gains = Matrix::Constant(1, 1, 0.25);
  det.scheduler.weights = {1.0};
  det.x0 = Vector::Ones(1);
  det.horizon = 10;
  const auto sure = run_ensemble(det, 50, 1, {0, true});
  for (const double v : sure.variance) CHECK(v == 0.0);
  for (size_t i = 0; i < sure.mean.size(); ++i) {
    CHECK(sure.p05[i] == sure.mean[i]);
    CHECK(sure.p95[i] == sure.mean[i]);
  }

  CHECK_THROWS_AS(run_ensemble(det, 1, 1), std::invalid_argument);
}

TEST_CASE("ensemble excludes clamped trajectories and counts them") {
  SimConfig config;
  config.sys = LtiSystem::make(Matrix::Constant(1, 1, 1e5), Matrix::Constant(1, 1, 1.0));
  config.gains = Matrix::Constant(1, 1, -1e5);  // active channel kills the state
  config.scheduler.kind = SchedulerSpec::Kind::BernoulliPattern;
  config.scheduler.activity_prob = 0.05;
  config.x0 = Vector::Ones(1);
  config.horizon = 70;  // 1e5^61 > 1e300: surviving runs clamp
  const auto stats = run_ensemble(config, 300, 8, {0, false});
  CHECK(stats.overflowed > 0);
  CHECK(stats.included + stats.overflowed == 300);
  for (const double m : stats.mean) CHECK(std::isfinite(m));
  const auto again = run_ensemble(config, 300, 8, {2, false});
  CHECK(again.overflowed == stats.overflowed);
  CHECK(again.mean == stats.mean);
}

TEST_CASE("mean decays while the second moment grows in the heavy-tail regime") {
  // scalar embedding of the a=1.8, b=0, p=0.5 switch
  SimConfig config;
  config.sys = LtiSystem::make(Matrix::Constant(1, 1, 1.8), Matrix::Constant(1, 1, 1.0));
  config.gains = Matrix::Constant(1, 1, -1.8);
  config.scheduler.kind = SchedulerSpec::Kind::BernoulliPattern;
  config.scheduler.activity_prob = 0.5;
  config.x0 = Vector::Ones(1);
  config.horizon = 8;
  const auto stats = run_ensemble(config, 30000, 606, {0, false});
  double mean_slope = 0.0, m2_slope = 0.0;
  for (int k = 1; k <= 8; ++k) {
    const double m_prev = stats.mean_at(k - 1, 0), m_cur = stats.mean_at(k, 0);
    const double s_prev = stats.var_at(k - 1, 0) + m_prev * m_prev;
    const double s_cur = stats.var_at(k, 0) + m_cur * m_cur;
    mean_slope += std::log(m_cur / m_prev);
    m2_slope += std::log(s_cur / s_prev);
  }
  CHECK(mean_slope < 0.0);  // mean contracts
  CHECK(m2_slope > 0.0);    // second moment explodes
}

TEST_CASE("waiting time statistics") {
  {
    const auto stats = waiting_time_stats(1, 10, 50, 3);
    REQUIRE(stats.per_channel.size() == 1);
    CHECK(stats.per_channel[0].mean == 1.0);
    CHECK(stats.per_channel[0].variance == 0.0);
    CHECK(stats.per_channel[0].count == 490);  // 49 gaps per trial
  }
  for (const int m : {2, 3}) {
    const auto stats = waiting_time_stats(m, 60, 2000, 4);
    for (const auto& ch : stats.per_channel) {
      REQUIRE(ch.count > 10000);
      const double se_mean = std::sqrt(ch.variance / static_cast<double>(ch.count));
      CHECK(std::abs(ch.mean - m) < 4.0 * se_mean);
      const double mu4 = ch.central_moment(4);
      const double n = static_cast<double>(ch.count);
      const double se_var = std::sqrt(
          std::max(0.0, mu4 - ch.variance * ch.variance * (n - 3.0) / (n - 1.0)) / n);
      const double expect_var = (1.0 - 1.0 / m) * m * m;  // (1-p)/p^2
      CHECK(std::abs(ch.variance - expect_var) < 4.0 * se_var);
    }
  }
  const auto a = waiting_time_stats(3, 60, 2000, 4, 1);
  const auto b = waiting_time_stats(3, 60, 2000, 4, 3);
  for (int j = 0; j < 3; ++j) {
    CHECK(a.per_channel[static_cast<size_t>(j)].histogram ==
          b.per_channel[static_cast<size_t>(j)].histogram);
  }
}
