#pragma once

// Canonical payload serialization and state fingerprinting.
//
// State identity is content-addressed: two state nodes are the same node
// exactly when their (lane, payload) canonical bytes match. The byte
// format below is therefore part of the on-disk/wire contract and must
// not change:
//
//   input    = '"lane":"' <lane name> '",' canon(payload)
//   canon(b) = "true" | "false"
//   canon(i) = decimal integer, no leading zeros, '-' for negatives
//   canon(f) = shortest round-trip decimal (std::to_chars); if the result
//              contains neither '.' nor 'e', ".0" is appended so floats
//              never collide with integers. Non-finite floats are invalid.
//   canon(s) = '"' escaped '"', escaping only: \" \\ \b \t \n \f \r and
//              \u00XX (lowercase hex) for other control bytes < 0x20.
//              All other bytes pass through verbatim (UTF-8).
//   canon(l) = '[' canon(v0) ',' canon(v1) ... ']'
//   canon(m) = '{' '"'key'"' ':' canon(v) ... '}' with keys sorted
//              ascending bytewise and comma-separated; keys escape like
//              strings. No whitespace anywhere.
//
//   fingerprint = lowercase hex SHA-256 of input
//
// The payload part is valid JSON, so `echo -n '"lane":"..",{..}'` piped
// through sha256sum reproduces any fingerprint.

#include <charconv>
#include <cstdint>
#include <string>

#include <vakg/sha256.hpp>
#include <vakg/types.hpp>

namespace vakg {

using StateFingerprint = std::string;  // 64 lowercase hex chars

namespace detail {

inline void canon_string(const std::string& text, std::string& out) {
    out.push_back('"');
    for (const char ch : text) {
        const auto byte = static_cast<unsigned char>(ch);
        switch (byte) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\b': out += "\\b"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case '\f': out += "\\f"; break;
        case '\r': out += "\\r"; break;
        default:
            if (byte < 0x20) {
                static constexpr char kHex[] = "0123456789abcdef";
                out += "\\u00";
                out.push_back(kHex[byte >> 4]);
                out.push_back(kHex[byte & 0x0f]);
            } else {
                out.push_back(ch);
            }
        }
    }
    out.push_back('"');
}

inline void canon_double(double value, std::string& out) {
    if (!std::isfinite(value)) {
        throw VakgError(ErrorCode::InvalidPayload, "non-finite float in payload");
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    std::string text(buf, res.ptr);
    if (text.find('.') == std::string::npos && text.find('e') == std::string::npos) {
        text += ".0";
    }
    out += text;
}

inline void canon_value(const PropertyMap& value, std::string& out) {
    switch (value.type()) {
    case nlohmann::json::value_t::boolean:
        out += value.get<bool>() ? "true" : "false";
        return;
    case nlohmann::json::value_t::number_integer:
        out += std::to_string(value.get<std::int64_t>());
        return;
    case nlohmann::json::value_t::number_unsigned:
        out += std::to_string(value.get<std::uint64_t>());
        return;
    case nlohmann::json::value_t::number_float:
        canon_double(value.get<double>(), out);
        return;
    case nlohmann::json::value_t::string:
        canon_string(value.get_ref<const std::string&>(), out);
        return;
    case nlohmann::json::value_t::array: {
        out.push_back('[');
        bool first = true;
        for (const auto& item : value) {
            if (!first) out.push_back(',');
            first = false;
            canon_value(item, out);
        }
        out.push_back(']');
        return;
    }
    case nlohmann::json::value_t::object: {
        out.push_back('{');
        bool first = true;
        // nlohmann objects iterate in sorted key order (std::map backing).
        for (const auto& [key, item] : value.items()) {
            if (!first) out.push_back(',');
            first = false;
            canon_string(key, out);
            out.push_back(':');
            canon_value(item, out);
        }
        out.push_back('}');
        return;
    }
    default:
        throw VakgError(ErrorCode::InvalidPayload,
                        std::string("unsupported value type ") + value.type_name());
    }
}

}  // namespace detail

// Canonical bytes of a payload alone (valid JSON).
inline std::string canonical_payload(const PropertyMap& payload) {
    std::string out;
    detail::canon_value(payload, out);
    return out;
}

// The exact SHA-256 input for a state node.
inline std::string fingerprint_input(Lane lane, const PropertyMap& payload) {
    std::string out = "\"lane\":\"";
    out += lane_name(lane);
    out += "\",";
    detail::canon_value(payload, out);
    return out;
}

// Content address of a state. Pure in (lane, payload); key order of the
// payload object does not matter.
inline StateFingerprint fingerprint_state(Lane lane, const PropertyMap& payload) {
    if (!is_state_lane(lane)) {
        throw VakgError(ErrorCode::IllegalLane,
                        "fingerprint_state: " + std::string(lane_name(lane)) +
                            " is not a state lane");
    }
    validate_payload_object(payload, "payload");
    return sha256_hex(fingerprint_input(lane, payload));
}

}  // namespace vakg
