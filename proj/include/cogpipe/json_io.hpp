#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace cogpipe {

// Pretty-prints like nlohmann::json::dump(indent), except that floating-point numbers
// are written as the shortest decimal that round-trips (std::to_chars).
// Object keys come out sorted, so equal documents give identical bytes.
std::string dump_json(const nlohmann::json& doc, int indent = 2);

}  // namespace cogpipe
