#pragma once

// EventRecord is the unit of the append-only log and the only way data
// enters a graph. One JSON object per event; the wire field names below
// are the interchange contract.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include <vakg/types.hpp>

namespace vakg {

enum class EventKind : std::uint8_t { SessionStart, Step, Annotation, SessionEnd };

constexpr std::string_view event_kind_name(EventKind kind) {
    switch (kind) {
    case EventKind::SessionStart: return "SessionStart";
    case EventKind::Step: return "Step";
    case EventKind::Annotation: return "Annotation";
    case EventKind::SessionEnd: return "SessionEnd";
    }
    return "?";
}

inline std::optional<EventKind> event_kind_from_name(std::string_view name) {
    if (name == "SessionStart") return EventKind::SessionStart;
    if (name == "Step") return EventKind::Step;
    if (name == "Annotation") return EventKind::Annotation;
    if (name == "SessionEnd") return EventKind::SessionEnd;
    return std::nullopt;
}

struct StepPart {
    std::set<OperationKind> ops;
    PropertyMap update_payload = PropertyMap::object();
    PropertyMap new_state_payload = PropertyMap::object();

    bool operator==(const StepPart&) const = default;
};

struct EventRecord {
    EventKind kind = EventKind::Step;
    std::string session_id;
    std::uint64_t seq = 0;

    // SessionStart only
    std::string user_id;
    PropertyMap initial_computer_state = PropertyMap::object();
    PropertyMap initial_human_state = PropertyMap::object();

    // Step only; at least one part present
    std::optional<StepPart> computer_part;
    std::optional<StepPart> human_part;
    std::optional<std::string> wall_clock;

    // Annotation only
    PropertyMap annotation = PropertyMap::object();

    bool operator==(const EventRecord&) const = default;

    static EventRecord session_start(std::string session_id, std::string user_id,
                                     PropertyMap initial_computer, PropertyMap initial_human) {
        EventRecord e;
        e.kind = EventKind::SessionStart;
        e.session_id = std::move(session_id);
        e.seq = 0;
        e.user_id = std::move(user_id);
        e.initial_computer_state = std::move(initial_computer);
        e.initial_human_state = std::move(initial_human);
        return e;
    }

    static EventRecord step(std::string session_id, std::uint64_t seq,
                            std::optional<StepPart> computer, std::optional<StepPart> human,
                            std::optional<std::string> wall_clock = std::nullopt) {
        EventRecord e;
        e.kind = EventKind::Step;
        e.session_id = std::move(session_id);
        e.seq = seq;
        e.computer_part = std::move(computer);
        e.human_part = std::move(human);
        e.wall_clock = std::move(wall_clock);
        return e;
    }

    static EventRecord annotation_event(std::string session_id, std::uint64_t seq,
                                        PropertyMap payload) {
        EventRecord e;
        e.kind = EventKind::Annotation;
        e.session_id = std::move(session_id);
        e.seq = seq;
        e.annotation = std::move(payload);
        return e;
    }

    static EventRecord session_end(std::string session_id, std::uint64_t seq) {
        EventRecord e;
        e.kind = EventKind::SessionEnd;
        e.session_id = std::move(session_id);
        e.seq = seq;
        return e;
    }
};

// Outcome of one ingested event, per side. update_id is empty for
// SessionStart (states only).
struct SideOutcome {
    std::string update_id;
    std::string state_id;
    bool state_created = false;

    bool operator==(const SideOutcome&) const = default;
};

struct StepResult {
    std::optional<std::uint64_t> step;  // graph step consumed, if any
    std::optional<SideOutcome> computer;
    std::optional<SideOutcome> human;
    std::size_t sync_edges_added = 0;
};

// ---------------------------------------------------------------------------
// wire format
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json ops_to_json(const std::set<OperationKind>& ops) {
    auto arr = nlohmann::json::array();
    for (const OperationKind op : ops) {
        arr.push_back(std::string(1, op_letter(op)));
    }
    return arr;
}

inline std::set<OperationKind> ops_from_json(const nlohmann::json& arr, const std::string& where) {
    if (!arr.is_array()) {
        throw VakgError(ErrorCode::ParseError, where + ".ops must be an array");
    }
    std::set<OperationKind> ops;
    for (const auto& item : arr) {
        if (!item.is_string() || item.get_ref<const std::string&>().size() != 1) {
            throw VakgError(ErrorCode::ParseError,
                            where + ".ops entries must be one-letter strings");
        }
        const auto op = op_from_letter(item.get_ref<const std::string&>()[0]);
        if (!op) {
            throw VakgError(ErrorCode::ParseError,
                            where + ".ops: unknown operation " + item.get<std::string>());
        }
        ops.insert(*op);
    }
    return ops;
}

inline nlohmann::json part_to_json(const StepPart& part) {
    return {{"ops", ops_to_json(part.ops)},
            {"update_payload", part.update_payload},
            {"new_state_payload", part.new_state_payload}};
}

inline StepPart part_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) {
        throw VakgError(ErrorCode::ParseError, where + " must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "ops" && key != "update_payload" && key != "new_state_payload") {
            throw VakgError(ErrorCode::ParseError, where + ": unknown field " + key);
        }
    }
    StepPart part;
    part.ops = ops_from_json(j.value("ops", nlohmann::json()), where);
    part.update_payload = j.value("update_payload", nlohmann::json::object());
    part.new_state_payload = j.value("new_state_payload", nlohmann::json::object());
    return part;
}

inline std::string require_string(const nlohmann::json& j, const char* field) {
    const auto it = j.find(field);
    if (it == j.end() || !it->is_string()) {
        throw VakgError(ErrorCode::ParseError, std::string("missing string field ") + field);
    }
    return it->get<std::string>();
}

}  // namespace detail

inline nlohmann::json event_to_json(const EventRecord& event) {
    nlohmann::json j{{"kind", std::string(event_kind_name(event.kind))},
                     {"session_id", event.session_id},
                     {"seq", event.seq}};
    switch (event.kind) {
    case EventKind::SessionStart:
        j["user_id"] = event.user_id;
        j["initial_computer_state"] = event.initial_computer_state;
        j["initial_human_state"] = event.initial_human_state;
        break;
    case EventKind::Step:
        if (event.computer_part) j["computer_part"] = detail::part_to_json(*event.computer_part);
        if (event.human_part) j["human_part"] = detail::part_to_json(*event.human_part);
        if (event.wall_clock) j["wall_clock"] = *event.wall_clock;
        break;
    case EventKind::Annotation:
        j["annotation"] = event.annotation;
        break;
    case EventKind::SessionEnd:
        break;
    }
    return j;
}

inline EventRecord event_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw VakgError(ErrorCode::ParseError, "event must be a JSON object");
    }
    const std::string kind_name = detail::require_string(j, "kind");
    const auto kind = event_kind_from_name(kind_name);
    if (!kind) {
        throw VakgError(ErrorCode::ParseError, "unknown event kind " + kind_name);
    }

    static const std::set<std::string> kCommon{"kind", "session_id", "seq"};
    static const std::map<EventKind, std::set<std::string>> kAllowed{
        {EventKind::SessionStart,
         {"user_id", "initial_computer_state", "initial_human_state"}},
        {EventKind::Step, {"computer_part", "human_part", "wall_clock"}},
        {EventKind::Annotation, {"annotation"}},
        {EventKind::SessionEnd, {}},
    };
    const auto& allowed = kAllowed.at(*kind);
    for (const auto& [key, value] : j.items()) {
        if (kCommon.count(key) == 0 && allowed.count(key) == 0) {
            throw VakgError(ErrorCode::ParseError,
                            kind_name + " event: unknown field " + key);
        }
    }

    EventRecord event;
    event.kind = *kind;
    event.session_id = detail::require_string(j, "session_id");
    const auto seq_it = j.find("seq");
    const bool seq_ok =
        seq_it != j.end() &&
        (seq_it->is_number_unsigned() ||
         (seq_it->is_number_integer() && seq_it->get<std::int64_t>() >= 0));
    if (!seq_ok) {
        throw VakgError(ErrorCode::ParseError, "seq must be a non-negative integer");
    }
    event.seq = seq_it->get<std::uint64_t>();

    switch (*kind) {
    case EventKind::SessionStart:
        event.user_id = detail::require_string(j, "user_id");
        event.initial_computer_state = j.value("initial_computer_state", nlohmann::json::object());
        event.initial_human_state = j.value("initial_human_state", nlohmann::json::object());
        break;
    case EventKind::Step: {
        if (j.contains("computer_part")) {
            event.computer_part = detail::part_from_json(j.at("computer_part"), "computer_part");
        }
        if (j.contains("human_part")) {
            event.human_part = detail::part_from_json(j.at("human_part"), "human_part");
        }
        if (!event.computer_part && !event.human_part) {
            throw VakgError(ErrorCode::ParseError, "Step event needs at least one part");
        }
        if (j.contains("wall_clock")) {
            if (!j.at("wall_clock").is_string()) {
                throw VakgError(ErrorCode::ParseError, "wall_clock must be a string");
            }
            event.wall_clock = j.at("wall_clock").get<std::string>();
        }
        break;
    }
    case EventKind::Annotation:
        event.annotation = j.value("annotation", nlohmann::json::object());
        break;
    case EventKind::SessionEnd:
        break;
    }
    return event;
}

inline nlohmann::json step_result_to_json(const StepResult& result) {
    auto side = [](const std::optional<SideOutcome>& outcome) -> nlohmann::json {
        if (!outcome) return nullptr;
        nlohmann::json j{{"state_id", outcome->state_id},
                         {"state_created", outcome->state_created}};
        if (!outcome->update_id.empty()) j["update_id"] = outcome->update_id;
        return j;
    };
    nlohmann::json j{{"computer", side(result.computer)},
                     {"human", side(result.human)},
                     {"sync_edges_added", result.sync_edges_added}};
    if (result.step) {
        j["step"] = *result.step;
    } else {
        j["step"] = nullptr;
    }
    return j;
}

}  // namespace vakg
