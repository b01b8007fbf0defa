#pragma once

// Hand-built event logs reused across tests and the acceptance suite.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <vakg/event.hpp>

namespace fixtures {

using vakg::EventRecord;
using vakg::OperationKind;
using vakg::PropertyMap;
using vakg::StepPart;

inline StepPart computer_view(const std::string& view,
                              OperationKind op = OperationKind::Visualization) {
    StepPart part;
    part.ops = {op};
    part.update_payload = PropertyMap{{"action", "goto-" + view}};
    part.new_state_payload = PropertyMap{{"view", view}};
    return part;
}

inline StepPart human_insight(const std::string& insight,
                              OperationKind op = OperationKind::Perception) {
    StepPart part;
    part.ops = {op};
    part.update_payload = PropertyMap{{"focus", insight}};
    part.new_state_payload = PropertyMap{{"insight", insight}};
    return part;
}

// One session walking the given computer views, no human steps.
inline void append_computer_walk(std::vector<EventRecord>& events, const std::string& session,
                                 const std::string& user, const PropertyMap& initial_human,
                                 const std::vector<std::string>& views) {
    events.push_back(EventRecord::session_start(session, user, PropertyMap{{"view", views.at(0)}},
                                                initial_human));
    for (std::size_t i = 1; i < views.size(); ++i) {
        events.push_back(EventRecord::step(session, i, computer_view(views[i]), std::nullopt));
    }
    events.push_back(EventRecord::session_end(session, views.size()));
}

// Two users start identically and part ways: one Divergence at "fork".
inline std::vector<EventRecord> motif_fixture_divergence() {
    std::vector<EventRecord> events;
    const PropertyMap shared_human{{"insight", "fresh start"}};
    append_computer_walk(events, "div-a", "alice", shared_human, {"origin", "fork", "west"});
    append_computer_walk(events, "div-b", "bob", shared_human, {"origin", "fork", "east"});
    return events;
}

// Two users start apart and end on the same view: one Convergence.
inline std::vector<EventRecord> motif_fixture_convergence() {
    std::vector<EventRecord> events;
    append_computer_walk(events, "conv-a", "alice", PropertyMap{{"insight", "question A"}},
                         {"atlas", "summit"});
    append_computer_walk(events, "conv-b", "bob", PropertyMap{{"insight", "question B"}},
                         {"basecamp", "summit"});
    return events;
}

// One user revisits a view and leaves it differently: one Backtrack.
inline std::vector<EventRecord> motif_fixture_backtrack() {
    std::vector<EventRecord> events;
    append_computer_walk(events, "bt-1", "carol", PropertyMap{{"insight", "exploring"}},
                         {"hub", "detour", "hub", "exit"});
    return events;
}

// One user ends where they started: one Loop, no Backtrack.
inline std::vector<EventRecord> motif_fixture_loop() {
    std::vector<EventRecord> events;
    append_computer_walk(events, "loop-1", "dave", PropertyMap{{"insight", "poking around"}},
                         {"home", "away", "home"});
    return events;
}

// One session, three steps, both lanes move every step; all states
// distinct. Lane lengths: 3 computer updates, 3 human updates.
inline std::vector<EventRecord> lockstep_session_fixture(const std::string& session = "demo") {
    std::vector<EventRecord> events;
    events.push_back(EventRecord::session_start(session, "erin", PropertyMap{{"view", "v0"}},
                                                PropertyMap{{"insight", "k0"}}));
    for (std::uint64_t i = 1; i <= 3; ++i) {
        events.push_back(EventRecord::step(
            session, i, computer_view("v" + std::to_string(i)),
            human_insight("k" + std::to_string(i),
                          i == 1 ? OperationKind::Exploration : OperationKind::Perception)));
    }
    events.push_back(EventRecord::session_end(session, 4));
    return events;
}

// `copies` sessions replaying byte-identical steps; state nodes must
// collapse while update chains stay per-session.
inline std::vector<EventRecord> identical_sessions_fixture(std::size_t copies,
                                                           std::size_t steps) {
    std::vector<EventRecord> events;
    for (std::size_t c = 0; c < copies; ++c) {
        const std::string session = "twin-" + std::to_string(c);
        events.push_back(EventRecord::session_start(session, "user-" + std::to_string(c),
                                                    PropertyMap{{"view", "start"}},
                                                    PropertyMap{{"insight", "start"}}));
        for (std::size_t i = 1; i <= steps; ++i) {
            events.push_back(EventRecord::step(session, i,
                                               computer_view("v" + std::to_string(i)),
                                               human_insight("k" + std::to_string(i))));
        }
        events.push_back(EventRecord::session_end(session, steps + 1));
    }
    return events;
}

}  // namespace fixtures
