#pragma once

// Core vocabulary for the four-lane temporal knowledge graph:
// lanes, operation kinds, payload property maps, and the error type
// shared by every module.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace vakg {

// Payloads are JSON objects with lexicographically sorted keys (the
// default nlohmann object backing). Allowed values: string, integer,
// float, boolean, nested objects, and arrays thereof. null and
// non-finite floats are rejected at ingest (see validate_payload).
//
// Reserved keys, by convention:
//   "subtasks"    - list of string tags marking workflow abstractions
//   "attachments" - list of URI strings (screenshots, exports, ...)
//   "delta"       - free-form description of what changed
using PropertyMap = nlohmann::json;

// The four lanes. State lanes hold atemporal, content-addressed state
// nodes; Update lanes hold per-session temporal update nodes.
enum class Lane : std::uint8_t {
    ComputerState,
    HumanState,
    ComputerUpdate,
    HumanUpdate,
};

constexpr bool is_state_lane(Lane lane) {
    return lane == Lane::ComputerState || lane == Lane::HumanState;
}

constexpr bool is_update_lane(Lane lane) {
    return lane == Lane::ComputerUpdate || lane == Lane::HumanUpdate;
}

// Computer-side lanes describe the tool; human-side lanes describe the user.
constexpr bool is_human_lane(Lane lane) {
    return lane == Lane::HumanState || lane == Lane::HumanUpdate;
}

constexpr std::string_view lane_name(Lane lane) {
    switch (lane) {
    case Lane::ComputerState: return "ComputerState";
    case Lane::HumanState: return "HumanState";
    case Lane::ComputerUpdate: return "ComputerUpdate";
    case Lane::HumanUpdate: return "HumanUpdate";
    }
    return "?";
}

std::optional<Lane> lane_from_name(std::string_view name);

// Which side of the workflow a transition belongs to.
enum class Side : std::uint8_t { Computer, Human };

constexpr Lane state_lane(Side side) {
    return side == Side::Computer ? Lane::ComputerState : Lane::HumanState;
}

constexpr Lane update_lane(Side side) {
    return side == Side::Computer ? Lane::ComputerUpdate : Lane::HumanUpdate;
}

constexpr std::string_view side_name(Side side) {
    return side == Side::Computer ? "computer" : "human";
}

// Operation kinds carried by update nodes. The letter aliases are the
// wire encoding: X, P, E are legal only on HumanUpdate nodes; V, A only
// on ComputerUpdate nodes.
enum class OperationKind : std::uint8_t {
    Externalization,    // X
    Perception,         // P
    Exploration,        // E
    Visualization,      // V
    AutomaticAnalysis,  // A
};

constexpr char op_letter(OperationKind op) {
    switch (op) {
    case OperationKind::Externalization: return 'X';
    case OperationKind::Perception: return 'P';
    case OperationKind::Exploration: return 'E';
    case OperationKind::Visualization: return 'V';
    case OperationKind::AutomaticAnalysis: return 'A';
    }
    return '?';
}

std::optional<OperationKind> op_from_letter(char letter);

constexpr bool op_legal_in_lane(OperationKind op, Lane lane) {
    switch (op) {
    case OperationKind::Externalization:
    case OperationKind::Perception:
    case OperationKind::Exploration:
        return lane == Lane::HumanUpdate;
    case OperationKind::Visualization:
    case OperationKind::AutomaticAnalysis:
        return lane == Lane::ComputerUpdate;
    }
    return false;
}

enum class ErrorCode : std::uint8_t {
    IllegalLane,
    IllegalOps,
    InvalidPayload,
    UnknownSession,
    DuplicateSessionStart,
    OutOfOrderSeq,
    SessionClosed,
    NoNodesAtStep,
    ParseError,
    SchemaMismatch,
    UnsupportedFormat,
    IoError,
    EmptyGraph,
    UnknownNode,
    NoPath,
    BadWeights,
    InvalidGraph,
    UnreachableGoal,
    InfeasibleConfig,
};

constexpr std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::IllegalLane: return "IllegalLane";
    case ErrorCode::IllegalOps: return "IllegalOps";
    case ErrorCode::InvalidPayload: return "InvalidPayload";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::DuplicateSessionStart: return "DuplicateSessionStart";
    case ErrorCode::OutOfOrderSeq: return "OutOfOrderSeq";
    case ErrorCode::SessionClosed: return "SessionClosed";
    case ErrorCode::NoNodesAtStep: return "NoNodesAtStep";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::BadWeights: return "BadWeights";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::UnreachableGoal: return "UnreachableGoal";
    case ErrorCode::InfeasibleConfig: return "InfeasibleConfig";
    }
    return "?";
}

// Domain error. `position`, when set, is the index of the offending
// item in a batch (event list line/offset, replay index).
class VakgError : public std::runtime_error {
public:
    VakgError(ErrorCode code, std::string message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    VakgError(ErrorCode code, std::string message, std::size_t position)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message +
                             " (at position " + std::to_string(position) + ")"),
          code_(code),
          position_(position) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> position() const noexcept { return position_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> position_;
};

// Rejects payloads outside the supported value set. `where` names the
// payload in error messages.
inline void validate_payload(const PropertyMap& payload, const std::string& where) {
    if (payload.is_null()) {
        throw VakgError(ErrorCode::InvalidPayload, where + ": null is not a payload value");
    }
    switch (payload.type()) {
    case nlohmann::json::value_t::object:
        for (const auto& [key, value] : payload.items()) {
            validate_payload(value, where + "." + key);
        }
        return;
    case nlohmann::json::value_t::array: {
        std::size_t i = 0;
        for (const auto& value : payload) {
            validate_payload(value, where + "[" + std::to_string(i++) + "]");
        }
        return;
    }
    case nlohmann::json::value_t::string:
    case nlohmann::json::value_t::boolean:
    case nlohmann::json::value_t::number_integer:
    case nlohmann::json::value_t::number_unsigned:
        return;
    case nlohmann::json::value_t::number_float: {
        const double v = payload.get<double>();
        if (!std::isfinite(v)) {
            throw VakgError(ErrorCode::InvalidPayload, where + ": non-finite float");
        }
        return;
    }
    default:
        throw VakgError(ErrorCode::InvalidPayload,
                        where + ": unsupported value type " + std::string(payload.type_name()));
    }
}

// Node payloads are always objects at the top level.
inline void validate_payload_object(const PropertyMap& payload, const std::string& where) {
    if (!payload.is_object()) {
        throw VakgError(ErrorCode::InvalidPayload, where + ": payload must be a JSON object");
    }
    validate_payload(payload, where);
}

inline std::optional<Lane> lane_from_name(std::string_view name) {
    if (name == "ComputerState") return Lane::ComputerState;
    if (name == "HumanState") return Lane::HumanState;
    if (name == "ComputerUpdate") return Lane::ComputerUpdate;
    if (name == "HumanUpdate") return Lane::HumanUpdate;
    return std::nullopt;
}

inline std::optional<OperationKind> op_from_letter(char letter) {
    switch (letter) {
    case 'X': return OperationKind::Externalization;
    case 'P': return OperationKind::Perception;
    case 'E': return OperationKind::Exploration;
    case 'V': return OperationKind::Visualization;
    case 'A': return OperationKind::AutomaticAnalysis;
    }
    return std::nullopt;
}

}  // namespace vakg
