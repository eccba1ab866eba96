#include "randchan/system_io.hpp"

#include <fstream>
#include <limits>
#include <stdexcept>

namespace randchan::io {

namespace {

using exactmath::BigInt;
using exactmath::Rational;
using linalg::Matrix;
using linalg::RationalMatrix;
using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

bool is_rational_text(const std::string& s) {
  if (s.empty()) return false;
  size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  bool seen_slash = false, digits = false;
  for (; i < s.size(); ++i) {
    if (s[i] == '/' && !seen_slash && digits) {
      seen_slash = true;
      digits = false;
    } else if (s[i] >= '0' && s[i] <= '9') {
      digits = true;
    } else {
      return false;
    }
  }
  return digits;
}

struct Entry {
  double value = 0.0;
  std::optional<Rational> exact;
};

Entry parse_entry(const json& e, const std::string& name) {
  Entry out;
  if (e.is_number_integer()) {
    out.exact = Rational(e.get<std::int64_t>());
    out.value = exactmath::to_double(*out.exact);
  } else if (e.is_number()) {
    out.value = e.get<double>();
  } else if (e.is_string()) {
    const auto s = e.get<std::string>();
    if (!is_rational_text(s)) fail(name + ": malformed rational entry '" + s + "'");
    out.exact = parse_rational(s);
    out.value = exactmath::to_double(*out.exact);
  } else {
    fail(name + ": entries must be numbers or \"p/q\" strings");
  }
  return out;
}

struct MatrixPair {
  Matrix num;
  std::optional<RationalMatrix> exact;
};

MatrixPair parse_matrix_pair(const json& rows, const std::string& name) {
  if (!rows.is_array() || rows.empty()) fail(name + " must be a nonempty array of rows");
  const auto r = static_cast<int>(rows.size());
  if (!rows[0].is_array() || rows[0].empty()) fail(name + " rows must be nonempty arrays");
  const auto c = static_cast<int>(rows[0].size());

  MatrixPair out{Matrix(r, c), RationalMatrix(r, c)};
  bool all_exact = true;
  for (int i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != c)
      fail(name + " must be rectangular");
    for (int j = 0; j < c; ++j) {
      const Entry e = parse_entry(row[static_cast<size_t>(j)], name);
      out.num(i, j) = e.value;
      if (e.exact)
        (*out.exact)(i, j) = *e.exact;
      else
        all_exact = false;
    }
  }
  if (!all_exact) out.exact.reset();
  return out;
}

json entry_to_json(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1 && num >= std::numeric_limits<std::int64_t>::min() &&
      num <= std::numeric_limits<std::int64_t>::max())
    return num.convert_to<std::int64_t>();
  return num.str() + "/" + den.str();
}

json matrix_to_json(const Matrix& m, const RationalMatrix* exact) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (exact)
        row.push_back(entry_to_json((*exact)(static_cast<int>(i), static_cast<int>(j))));
      else
        row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail(path + ": " + e.what());
  }
  return j;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  if (!is_rational_text(text)) fail("malformed rational '" + text + "'");
  const auto slash = text.find('/');
  if (slash == std::string::npos) return Rational(BigInt(text));
  const BigInt num(text.substr(0, slash));
  const BigInt den(text.substr(slash + 1));
  if (den == 0) fail("rational with zero denominator: '" + text + "'");
  return Rational(num, den);
}

Matrix parse_matrix(const json& rows, const std::string& name) {
  return parse_matrix_pair(rows, name).num;
}

linalg::Vector parse_vector(const json& entries, const std::string& name) {
  if (!entries.is_array() || entries.empty()) fail(name + " must be a nonempty array");
  linalg::Vector v(static_cast<Eigen::Index>(entries.size()));
  for (size_t i = 0; i < entries.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = parse_entry(entries[i], name).value;
  return v;
}

ParsedSystem parse_system(const json& j) {
  if (!j.contains("A") || !j.contains("B")) fail("system file needs matrices A and B");
  auto a = parse_matrix_pair(j["A"], "A");
  auto b = parse_matrix_pair(j["B"], "B");
  MatrixPair c{Matrix(0, 0), std::nullopt};
  const bool has_c = j.contains("C") && !j["C"].is_null();
  if (has_c) c = parse_matrix_pair(j["C"], "C");

  ParsedSystem out{channels::LtiSystem::make(a.num, b.num, has_c ? c.num : Matrix{}),
                   std::nullopt, j.value("labels", json())};
  if (a.exact && b.exact && (!has_c || c.exact)) {
    out.exact = channels::RationalLti::make(
        std::move(*a.exact), std::move(*b.exact),
        has_c ? std::move(*c.exact) : RationalMatrix{});
  }
  return out;
}

ParsedSystem load_system(const std::string& path) { return parse_system(read_file(path)); }

json system_to_json(const ParsedSystem& parsed) {
  json j;
  j["A"] = matrix_to_json(parsed.sys.A, parsed.exact ? &parsed.exact->A : nullptr);
  j["B"] = matrix_to_json(parsed.sys.B, parsed.exact ? &parsed.exact->B : nullptr);
  if (parsed.sys.has_output())
    j["C"] = matrix_to_json(parsed.sys.C, parsed.exact ? &parsed.exact->C : nullptr);
  if (!parsed.labels.is_null()) j["labels"] = parsed.labels;
  return j;
}

simulate::SimConfig parse_sim_config(const json& j) {
  if (!j.contains("system")) fail("config file needs a \"system\" object");
  auto parsed = parse_system(j["system"]);

  simulate::SimConfig config;
  config.sys = std::move(parsed.sys);
  if (!j.contains("gains")) fail("config file needs a \"gains\" matrix (m rows of n)");
  config.gains = parse_matrix(j["gains"], "gains");
  if (!j.contains("x0")) fail("config file needs an \"x0\" vector");
  config.x0 = parse_vector(j["x0"], "x0");
  config.horizon = j.value("horizon", 0);

  const json sched = j.value("scheduler", json::object());
  const std::string kind = sched.value("kind", "uniform-single");
  if (kind == "uniform-single") {
    config.scheduler.kind = simulate::SchedulerSpec::Kind::UniformSingle;
    if (sched.contains("weights")) {
      const auto w = parse_vector(sched["weights"], "scheduler.weights");
      config.scheduler.weights.assign(w.data(), w.data() + w.size());
    }
  } else if (kind == "bernoulli-pattern") {
    config.scheduler.kind = simulate::SchedulerSpec::Kind::BernoulliPattern;
    if (!sched.contains("p")) fail("bernoulli-pattern scheduler needs \"p\"");
    config.scheduler.activity_prob = sched["p"].get<double>();
  } else {
    fail("unknown scheduler kind: " + kind);
  }

  config.validate();
  return config;
}

simulate::SimConfig load_sim_config(const std::string& path) {
  return parse_sim_config(read_file(path));
}

}  // namespace randchan::io
