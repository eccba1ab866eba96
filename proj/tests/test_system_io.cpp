#include <doctest.h>

#include <json.hpp>

#include "randchan/system_io.hpp"

using namespace randchan;
using nlohmann::json;

TEST_CASE("system files parse numbers and rational strings") {
  const json j = {{"A", {{1, "1/3"}, {0.5, 2}}}, {"B", {{1}, {"-2/4"}}}};
  const auto parsed = io::parse_system(j);
  CHECK(parsed.sys.n() == 2);
  CHECK(parsed.sys.m() == 1);
  CHECK_FALSE(parsed.sys.has_output());
  CHECK(parsed.sys.A(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(parsed.sys.B(1, 0) == -0.5);
  CHECK_FALSE(parsed.exact.has_value());  // 0.5 is a float entry

  const json j2 = {{"A", {{1, "1/3"}, {"1/2", 2}}}, {"B", {{1}, {"-2/4"}}}};
  const auto exact = io::parse_system(j2);
  REQUIRE(exact.exact.has_value());
  CHECK(exact.exact->A(0, 1) == exactmath::Rational(1, 3));
  CHECK(exact.exact->B(1, 0) == exactmath::Rational(-1, 2));  // reduced
}

TEST_CASE("round trip: parse, serialize, parse yields identical matrices") {
  const json cases[] = {
      json::parse(R"({"A": [[2,0],[0,3]], "B": [[1,0],[0,1]], "C": [[1,0]]})"),
      json::parse(R"({"A": [["1/3",0],["7/5",1]], "B": [[1],["-9/2"]]})"),
      json::parse(
          R"({"A": [[0.25,-1.75],[3.5,0.125]], "B": [[1.1],[2.2]], "labels": {"name": "float plant"}})"),
  };
  for (const auto& j : cases) {
    const auto first = io::parse_system(j);
    const auto emitted = io::system_to_json(first);
    const auto second = io::parse_system(emitted);
    CHECK(first.sys.A == second.sys.A);
    CHECK(first.sys.B == second.sys.B);
    CHECK(first.sys.C == second.sys.C);
    CHECK(first.exact.has_value() == second.exact.has_value());
    if (first.exact) {
      CHECK(first.exact->A == second.exact->A);
      CHECK(first.exact->B == second.exact->B);
    }
    CHECK(io::system_to_json(second) == emitted);
  }
}

TEST_CASE("malformed systems are rejected") {
  CHECK_THROWS(io::parse_system(json{{"A", {{1, 0}, {0, 1}}}}));  // missing B
  CHECK_THROWS(io::parse_system(json{{"A", {{1, 0}}}, {"B", {{1}, {1}}}}));   // A not square
  CHECK_THROWS(io::parse_system(json{{"A", {{1, 0}, {0, 1}}}, {"B", {{1}}}}));  // B rows != n
  CHECK_THROWS(io::parse_system(json{{"A", {{1, 0}, {0, 1}}}, {"B", {{1}, {1}}},
                                     {"C", {{1, 0, 0}}}}));  // C cols != n
  CHECK_THROWS(io::parse_system(json{{"A", {{"1/0", 0}, {0, 1}}}, {"B", {{1}, {1}}}}));
  CHECK_THROWS(io::parse_system(json{{"A", {{"x", 0}, {0, 1}}}, {"B", {{1}, {1}}}}));
  CHECK_THROWS(io::parse_system(json{{"A", {{1, 0}, {0}}}, {"B", {{1}, {1}}}}));  // ragged
  CHECK_THROWS(io::load_system("/no/such/file.json"));
}

TEST_CASE("rational text parsing") {
  CHECK(io::parse_rational("3/7") == exactmath::Rational(3, 7));
  CHECK(io::parse_rational("-6/4") == exactmath::Rational(-3, 2));
  CHECK(io::parse_rational("12") == exactmath::Rational(12));
  CHECK_THROWS(io::parse_rational("3/"));
  CHECK_THROWS(io::parse_rational("/3"));
  CHECK_THROWS(io::parse_rational("a/b"));
  CHECK_THROWS(io::parse_rational("1/2/3"));
  CHECK_THROWS(io::parse_rational(""));
}

TEST_CASE("sim config parsing and validation") {
  const json good = {
      {"system", {{"A", {{3, 0}, {0, 3}}}, {"B", {{1, 0}, {0, 1}}}}},
      {"gains", {{-2.7, 0}, {0, -2.7}}},
      {"scheduler", {{"kind", "uniform-single"}, {"weights", {0.25, 0.75}}}},
      {"x0", {1, 1}},
      {"horizon", 10},
  };
  const auto config = io::parse_sim_config(good);
  CHECK(config.sys.n() == 2);
  CHECK(config.horizon == 10);
  CHECK(config.scheduler.weights == std::vector<double>{0.25, 0.75});

  json pattern = good;
  pattern["scheduler"] = {{"kind", "bernoulli-pattern"}, {"p", 0.4}};
  CHECK(io::parse_sim_config(pattern).scheduler.kind ==
        simulate::SchedulerSpec::Kind::BernoulliPattern);

  json bad_weights = good;
  bad_weights["scheduler"] = {{"kind", "uniform-single"}, {"weights", {0.5, 0.4}}};
  CHECK_THROWS(io::parse_sim_config(bad_weights));

  json bad_gains = good;
  bad_gains["gains"] = {{1.0, 0.0}};
  CHECK_THROWS(io::parse_sim_config(bad_gains));

  json no_horizon = good;
  no_horizon.erase("horizon");
  CHECK_THROWS(io::parse_sim_config(no_horizon));

  json bad_kind = good;
  bad_kind["scheduler"] = {{"kind", "round-robin"}};
  CHECK_THROWS(io::parse_sim_config(bad_kind));
}

TEST_CASE("bundled data files load and classify") {
  // paths are provided by the build; fall back to the source tree layout
  const char* dir = std::getenv("RANDCHAN_DATA_DIR");
  const std::string base = dir ? dir : std::string(RANDCHAN_SOURCE_DIR) + "/data";

  const auto diag = io::load_system(base + "/diagonal_full_access.json");
  CHECK(diag.exact.has_value());
  CHECK(channels::is_rcc(diag.sys).holds);

  const auto blocked = io::load_system(base + "/two_channel_blocked.json");
  CHECK_FALSE(channels::is_rcc(blocked.sys).holds);
  CHECK_FALSE(channels::is_rcc_exact(*blocked.exact).holds);

  const auto mixing = io::load_system(base + "/two_channel_mixing.json");
  CHECK(channels::is_rcc(mixing.sys).holds);
  CHECK(channels::is_rcc_exact(*mixing.exact).holds);

  const auto config = io::load_sim_config(base + "/unstable_triple_ensemble.json");
  CHECK(config.sys.n() == 3);
  CHECK(config.horizon == 50);
  CHECK(config.gains(0, 0) == -2.7);
}
