#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace volbench {

// Minimal TOML reader covering what manifests need: [table] and [[array]]
// headers (dotted paths attach through the newest array element), dotted and
// quoted keys, strings, integers, floats, booleans, arrays, inline tables,
// and # comments. Errors carry 1-based line numbers.
nlohmann::json parse_toml(const std::string& text);

}  // namespace volbench
