#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "randchan/channels.hpp"
#include "randchan/simulate.hpp"

namespace randchan::io {

// A system file carries A, B and optionally C as nested row-major arrays.
// Entries are JSON numbers or exact-rational strings like "3/7"; when every
// entry is an integer or such a string, an exact twin is retained so the
// certification paths can run in rational arithmetic.
struct ParsedSystem {
  channels::LtiSystem sys;
  std::optional<channels::RationalLti> exact;
  nlohmann::json labels;  // passed through untouched
};

ParsedSystem parse_system(const nlohmann::json& j);
ParsedSystem load_system(const std::string& path);
nlohmann::json system_to_json(const ParsedSystem& parsed);

simulate::SimConfig parse_sim_config(const nlohmann::json& j);
simulate::SimConfig load_sim_config(const std::string& path);

// shared element parsers
linalg::Matrix parse_matrix(const nlohmann::json& rows, const std::string& name);
linalg::Vector parse_vector(const nlohmann::json& entries, const std::string& name);
exactmath::Rational parse_rational(const std::string& text);

}  // namespace randchan::io
