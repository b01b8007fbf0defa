#pragma once

// Event ingestion: translates the event stream into graph mutations,
// enforcing per-session lifecycle and seq contiguity.
//
// The builder is the single writer for its graph. Events of different
// sessions may interleave arbitrarily; within a session, seq must be
// contiguous from 0 (SessionStart), and nothing may follow SessionEnd.
// A rejected event consumes nothing: every check runs before the first
// graph mutation, so the caller may fix and resubmit the same seq.
// The resulting graph is a pure function of the accepted event list.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <vakg/event.hpp>
#include <vakg/graph.hpp>

namespace vakg {

class GraphBuilder {
public:
    GraphBuilder() = default;

    const VakgGraph& graph() const { return graph_; }
    VakgGraph&& take_graph() && { return std::move(graph_); }

    StepResult ingest_event(const EventRecord& event) {
        switch (event.kind) {
        case EventKind::SessionStart: return ingest_session_start(event);
        case EventKind::Step: return ingest_step(event);
        case EventKind::Annotation: return ingest_annotation(event);
        case EventKind::SessionEnd: return ingest_session_end(event);
        }
        throw VakgError(ErrorCode::ParseError, "unknown event kind");
    }

private:
    struct SessionPhase {
        std::uint64_t next_seq = 0;
        bool ended = false;
        std::vector<PropertyMap> pending_annotations;
    };

    // Lifecycle and seq checks for non-SessionStart events; does not
    // advance the sequence.
    SessionPhase& require_phase(const EventRecord& event) {
        const auto it = phases_.find(event.session_id);
        if (it == phases_.end()) {
            throw VakgError(ErrorCode::UnknownSession, "session " + event.session_id);
        }
        SessionPhase& phase = it->second;
        if (phase.ended) {
            throw VakgError(ErrorCode::SessionClosed, "session " + event.session_id);
        }
        if (event.seq != phase.next_seq) {
            throw VakgError(ErrorCode::OutOfOrderSeq,
                            "session " + event.session_id + " expected seq " +
                                std::to_string(phase.next_seq) + ", got " +
                                std::to_string(event.seq));
        }
        return phase;
    }

    StepResult ingest_session_start(const EventRecord& event) {
        if (phases_.count(event.session_id) > 0) {
            throw VakgError(ErrorCode::DuplicateSessionStart, "session " + event.session_id);
        }
        if (event.seq != 0) {
            throw VakgError(ErrorCode::OutOfOrderSeq,
                            "SessionStart must carry seq 0, got " + std::to_string(event.seq));
        }
        validate_payload_object(event.initial_computer_state, "initial_computer_state");
        validate_payload_object(event.initial_human_state, "initial_human_state");

        const auto opened = graph_.open_session(event.session_id, event.user_id,
                                                event.initial_computer_state,
                                                event.initial_human_state);
        phases_[event.session_id].next_seq = 1;

        StepResult result;
        result.computer = SideOutcome{"", opened.computer_state, opened.computer_created};
        result.human = SideOutcome{"", opened.human_state, opened.human_created};
        return result;
    }

    StepResult ingest_step(const EventRecord& event) {
        if (!event.computer_part && !event.human_part) {
            throw VakgError(ErrorCode::InvalidPayload, "Step event needs at least one part");
        }
        SessionPhase& phase = require_phase(event);
        if (event.computer_part) check_part(*event.computer_part, Side::Computer);
        if (event.human_part) check_part(*event.human_part, Side::Human);

        // Prepare the merged human payload before the first mutation so
        // a merge failure rejects the whole event.
        std::optional<PropertyMap> human_update_payload;
        if (event.human_part) {
            human_update_payload = event.human_part->update_payload;
            if (!phase.pending_annotations.empty()) {
                merge_annotations(*human_update_payload, phase.pending_annotations);
            }
        }

        const std::uint64_t step = graph_.next_step(event.session_id);
        StepResult result;
        result.step = step;
        if (event.computer_part) {
            const auto r = graph_.add_transition(
                event.session_id,
                {Side::Computer, event.computer_part->ops, event.computer_part->update_payload,
                 event.computer_part->new_state_payload, event.wall_clock},
                step);
            result.computer = SideOutcome{r.update_id, r.state_id, r.state_created};
        }
        if (event.human_part) {
            const auto r = graph_.add_transition(
                event.session_id,
                {Side::Human, event.human_part->ops, *human_update_payload,
                 event.human_part->new_state_payload, event.wall_clock},
                step);
            result.human = SideOutcome{r.update_id, r.state_id, r.state_created};
            phase.pending_annotations.clear();
        }
        result.sync_edges_added = graph_.add_sync(event.session_id, step);
        phase.next_seq += 1;
        return result;
    }

    StepResult ingest_annotation(const EventRecord& event) {
        SessionPhase& phase = require_phase(event);
        validate_payload_object(event.annotation, "annotation");
        phase.pending_annotations.push_back(event.annotation);
        phase.next_seq += 1;
        return {};
    }

    StepResult ingest_session_end(const EventRecord& event) {
        SessionPhase& phase = require_phase(event);
        StepResult result;
        if (!phase.pending_annotations.empty()) {
            // Leftover annotations become one final externalization step;
            // the human state itself is not changed by it.
            const std::uint64_t step = graph_.next_step(event.session_id);
            PropertyMap update_payload = PropertyMap::object();
            merge_annotations(update_payload, phase.pending_annotations);
            phase.pending_annotations.clear();
            const StateNode* current = graph_.find_state(
                graph_.session(event.session_id).current_state[side_index(Side::Human)]);
            const auto r = graph_.add_transition(
                event.session_id,
                {Side::Human, {OperationKind::Externalization}, update_payload, current->payload,
                 std::nullopt},
                step);
            result.step = step;
            result.human = SideOutcome{r.update_id, r.state_id, r.state_created};
            result.sync_edges_added = graph_.add_sync(event.session_id, step);
        }
        graph_.close_session(event.session_id);
        phase.ended = true;
        phase.next_seq += 1;
        return result;
    }

    static void check_part(const StepPart& part, Side side) {
        if (part.ops.empty()) {
            throw VakgError(ErrorCode::IllegalOps, "ops must be non-empty");
        }
        for (const OperationKind op : part.ops) {
            if (!op_legal_in_lane(op, update_lane(side))) {
                throw VakgError(ErrorCode::IllegalOps,
                                std::string(1, op_letter(op)) + " is not legal in " +
                                    std::string(lane_name(update_lane(side))));
            }
        }
        validate_payload_object(part.update_payload, "update_payload");
        validate_payload_object(part.new_state_payload, "new_state_payload");
    }

    // Buffered annotations land under the reserved "annotations" key of
    // the update payload, appended in arrival order.
    static void merge_annotations(PropertyMap& update_payload,
                                  const std::vector<PropertyMap>& pending) {
        auto& slot = update_payload["annotations"];
        if (slot.is_null()) {
            slot = nlohmann::json::array();
        } else if (!slot.is_array()) {
            throw VakgError(ErrorCode::InvalidPayload,
                            "update_payload.annotations must be an array");
        }
        for (const PropertyMap& annotation : pending) {
            slot.push_back(annotation);
        }
    }

    VakgGraph graph_;
    std::map<std::string, SessionPhase> phases_;
};

// Builds a graph from a full event list. The first failing event aborts
// with its index attached. Replaying the same list always yields the
// same node ids and edge multiset.
inline VakgGraph replay(const std::vector<EventRecord>& events) {
    GraphBuilder builder;
    for (std::size_t i = 0; i < events.size(); ++i) {
        try {
            builder.ingest_event(events[i]);
        } catch (const VakgError& err) {
            throw VakgError(err.code(), err.what(), i);
        }
    }
    return std::move(builder).take_graph();
}

}  // namespace vakg
