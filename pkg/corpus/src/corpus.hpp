#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

namespace corpus {

using json = nlohmann::json;

// Dispatch one decoded request document to the named corpus function.
// Unknown functions and callee exceptions become {"status":"fault",...}.
json dispatch(const json& request);

// Canonical IEEE-754 hex literal, matching the wire format exactly
// (13 mantissa hex digits, explicit exponent sign, inf/nan spelled out).
std::string float_to_hex(double x);
double hex_to_float(const std::string& text);

// Frame helpers: 4-byte little-endian length + UTF-8 JSON body.
std::string encode_frame(const json& doc);

}  // namespace corpus
