#pragma once

// The four-lane temporal knowledge graph.
//
// Structure invariants (checked by validate()):
//   - State nodes are content-addressed: id == fingerprint(lane, payload),
//     at most one node per (lane, payload). Identical states recorded by
//     different sessions or users collapse into one node.
//   - Update nodes are per-session and per-lane, ordered by a logical
//     step counter; ops respect the lane restriction (X/P/E human,
//     V/A computer).
//   - Every update node has exactly one incoming AppliesTo edge (the
//     state it acted on) and one outgoing Produces edge (the state it
//     led to); consecutive updates of one session chain through the
//     produced state: state -> update -> state -> update -> ...
//   - TemporalNext links consecutive update nodes of one session within
//     one lane; Sync pairs the human-side and computer-side records of
//     one session step.
//   - The graph is append-only. Nothing here removes nodes or edges;
//     analytics work on projections.
//
// Mutation is single-writer; const reads may run concurrently.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <vakg/canonical.hpp>
#include <vakg/types.hpp>

namespace vakg {

struct StateNode {
    StateFingerprint id;
    Lane lane = Lane::ComputerState;
    PropertyMap payload;
};

struct UpdateNode {
    std::string id;  // "(session_id,<lane>,<step>)"
    Lane lane = Lane::ComputerUpdate;
    std::string session_id;
    std::string user_id;
    std::uint64_t step = 0;
    std::set<OperationKind> ops;
    std::optional<std::string> wall_clock;  // RFC 3339, advisory only
    PropertyMap payload;
};

enum class EdgeKind : std::uint8_t { TemporalNext, AppliesTo, Produces, Sync };

constexpr std::string_view edge_kind_name(EdgeKind kind) {
    switch (kind) {
    case EdgeKind::TemporalNext: return "TemporalNext";
    case EdgeKind::AppliesTo: return "AppliesTo";
    case EdgeKind::Produces: return "Produces";
    case EdgeKind::Sync: return "Sync";
    }
    return "?";
}

inline std::optional<EdgeKind> edge_kind_from_name(std::string_view name) {
    if (name == "TemporalNext") return EdgeKind::TemporalNext;
    if (name == "AppliesTo") return EdgeKind::AppliesTo;
    if (name == "Produces") return EdgeKind::Produces;
    if (name == "Sync") return EdgeKind::Sync;
    return std::nullopt;
}

struct Edge {
    EdgeKind kind = EdgeKind::TemporalNext;
    // Session owning the edge; set for TemporalNext and Sync, empty for
    // AppliesTo/Produces (derivable from the update endpoint).
    std::string session_id;
    std::string from;
    std::string to;
};

inline std::string update_node_id(const std::string& session_id, Lane lane,
                                  std::uint64_t step) {
    return "(" + session_id + "," + std::string(lane_name(lane)) + "," +
           std::to_string(step) + ")";
}

struct SessionCursor {
    std::string user_id;
    std::array<StateFingerprint, 2> initial_state;  // indexed by Side
    std::array<StateFingerprint, 2> current_state;
    std::uint64_t next_step = 0;
    bool closed = false;
};

constexpr std::size_t side_index(Side side) {
    return side == Side::Computer ? 0 : 1;
}

struct TransitionSpec {
    Side side = Side::Computer;
    std::set<OperationKind> ops;
    PropertyMap update_payload = PropertyMap::object();
    PropertyMap new_state_payload = PropertyMap::object();
    std::optional<std::string> wall_clock;
};

struct TransitionResult {
    std::string update_id;
    StateFingerprint state_id;
    bool state_created = false;
    std::uint64_t step = 0;
};

struct Violation {
    std::string rule;     // short machine-readable rule name
    std::string subject;  // node or edge the rule failed on
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

class VakgGraph {
public:
    // ---- mutation (single writer) ----

    // Inserts the state if its fingerprint is new; otherwise returns the
    // existing node. Node count grows by at most one.
    std::pair<StateFingerprint, bool> upsert_state(Lane lane, const PropertyMap& payload) {
        const StateFingerprint fp = fingerprint_state(lane, payload);  // validates lane+payload
        if (states_.count(fp) > 0) {
            return {fp, false};
        }
        states_.emplace(fp, StateNode{fp, lane, payload});
        state_order_.push_back(fp);
        return {fp, true};
    }

    struct SessionStartResult {
        StateFingerprint computer_state;
        bool computer_created = false;
        StateFingerprint human_state;
        bool human_created = false;
    };

    // Registers a session with its two initial states (deduplicated like
    // any other state) and an empty update history.
    SessionStartResult open_session(const std::string& session_id, const std::string& user_id,
                                    const PropertyMap& initial_computer_state,
                                    const PropertyMap& initial_human_state) {
        if (sessions_.count(session_id) > 0) {
            throw VakgError(ErrorCode::DuplicateSessionStart, "session " + session_id);
        }
        const auto [computer_fp, c_created] =
            upsert_state(Lane::ComputerState, initial_computer_state);
        const auto [human_fp, h_created] = upsert_state(Lane::HumanState, initial_human_state);
        SessionCursor cursor;
        cursor.user_id = user_id;
        cursor.initial_state[side_index(Side::Computer)] = computer_fp;
        cursor.initial_state[side_index(Side::Human)] = human_fp;
        cursor.current_state = cursor.initial_state;
        sessions_.emplace(session_id, std::move(cursor));
        chains_.emplace(session_id, std::array<std::vector<std::string>, 2>{});
        return {computer_fp, c_created, human_fp, h_created};
    }

    void close_session(const std::string& session_id) {
        require_session(session_id).closed = true;
    }

    // One step of the interaction loop on one side: the new update node
    // applies to the side's current state and produces the state for
    // new_state_payload (possibly an existing node), advancing the cursor.
    TransitionResult add_transition(const std::string& session_id, const TransitionSpec& spec) {
        return add_transition(session_id, spec, require_session(session_id).next_step);
    }

    // Same, at an explicit step. Lets both sides of one step share a step
    // number. The step must be past every prior update on that side.
    TransitionResult add_transition(const std::string& session_id, const TransitionSpec& spec,
                                    std::uint64_t step) {
        SessionCursor& cursor = require_session(session_id);
        if (cursor.closed) {
            throw VakgError(ErrorCode::SessionClosed, "session " + session_id);
        }
        const Lane lane = update_lane(spec.side);
        if (spec.ops.empty()) {
            throw VakgError(ErrorCode::IllegalOps, "ops must be non-empty");
        }
        for (const OperationKind op : spec.ops) {
            if (!op_legal_in_lane(op, lane)) {
                throw VakgError(ErrorCode::IllegalOps,
                                std::string(1, op_letter(op)) + " is not legal in " +
                                    std::string(lane_name(lane)));
            }
        }
        validate_payload_object(spec.update_payload, "update_payload");

        auto& chain = chains_[session_id][side_index(spec.side)];
        if (!chain.empty()) {
            const UpdateNode& prev = updates_.at(chain.back());
            if (step <= prev.step) {
                throw VakgError(ErrorCode::IllegalOps,
                                "step " + std::to_string(step) + " not after step " +
                                    std::to_string(prev.step) + " on the " +
                                    std::string(side_name(spec.side)) + " side");
            }
        }

        UpdateNode node;
        node.id = update_node_id(session_id, lane, step);
        node.lane = lane;
        node.session_id = session_id;
        node.user_id = cursor.user_id;
        node.step = step;
        node.ops = spec.ops;
        node.wall_clock = spec.wall_clock;
        node.payload = spec.update_payload;

        const StateFingerprint applied_from = cursor.current_state[side_index(spec.side)];
        const auto [produced, created] = upsert_state(state_lane(spec.side), spec.new_state_payload);

        updates_.emplace(node.id, node);
        update_order_.push_back(node.id);
        push_edge({EdgeKind::AppliesTo, "", applied_from, node.id});
        push_edge({EdgeKind::Produces, "", node.id, produced});
        if (!chain.empty()) {
            push_edge({EdgeKind::TemporalNext, session_id, chain.back(), node.id});
        }
        chain.push_back(node.id);

        cursor.current_state[side_index(spec.side)] = produced;
        cursor.next_step = std::max(cursor.next_step, step + 1);
        return {node.id, produced, created, step};
    }

    // Pairs the human-side and computer-side records of one step:
    // update<->update when both sides recorded an update at the step,
    // otherwise update<->the other side's current state. Idempotent for
    // an unchanged cursor. Sync edges run human-side -> computer-side.
    std::size_t add_sync(const std::string& session_id, std::uint64_t step) {
        const SessionCursor& cursor = require_session(session_id);
        const UpdateNode* human = find_update(session_id, Side::Human, step);
        const UpdateNode* computer = find_update(session_id, Side::Computer, step);
        if (human == nullptr && computer == nullptr) {
            throw VakgError(ErrorCode::NoNodesAtStep,
                            "session " + session_id + " has no update at step " +
                                std::to_string(step));
        }
        const std::string human_end =
            human != nullptr ? human->id : cursor.current_state[side_index(Side::Human)];
        const std::string computer_end =
            computer != nullptr ? computer->id : cursor.current_state[side_index(Side::Computer)];
        const Edge edge{EdgeKind::Sync, session_id, human_end, computer_end};
        if (edge_keys_.count(edge_key(edge)) > 0) {
            return 0;
        }
        push_edge(edge);
        return 1;
    }

    // ---- raw construction (imports and tests); bypasses invariant
    //      enforcement, validate() is the safety net ----

    void add_raw_state(StateNode node) {
        if (states_.count(node.id) > 0) {
            throw VakgError(ErrorCode::SchemaMismatch, "duplicate state id " + node.id);
        }
        state_order_.push_back(node.id);
        states_.emplace(node.id, std::move(node));
    }

    void add_raw_update(UpdateNode node) {
        if (updates_.count(node.id) > 0) {
            throw VakgError(ErrorCode::SchemaMismatch, "duplicate update id " + node.id);
        }
        auto& chain = chains_[node.session_id][side_index(
            node.lane == Lane::ComputerUpdate ? Side::Computer : Side::Human)];
        update_order_.push_back(node.id);
        const std::uint64_t step = node.step;
        const std::string id = node.id;
        updates_.emplace(id, std::move(node));
        // Keep the chain ordered by step regardless of insertion order.
        auto pos = chain.begin();
        while (pos != chain.end() && updates_.at(*pos).step < step) ++pos;
        chain.insert(pos, id);
    }

    void add_raw_edge(Edge edge) { push_edge(std::move(edge)); }

    void set_session_cursor(const std::string& session_id, SessionCursor cursor) {
        chains_.emplace(session_id, std::array<std::vector<std::string>, 2>{});
        sessions_[session_id] = std::move(cursor);
    }

    // ---- reads ----

    bool has_session(const std::string& session_id) const {
        return sessions_.count(session_id) > 0;
    }

    const SessionCursor& session(const std::string& session_id) const {
        const auto it = sessions_.find(session_id);
        if (it == sessions_.end()) {
            throw VakgError(ErrorCode::UnknownSession, "session " + session_id);
        }
        return it->second;
    }

    std::uint64_t next_step(const std::string& session_id) const {
        return session(session_id).next_step;
    }

    const std::map<std::string, SessionCursor>& sessions() const { return sessions_; }

    const StateNode* find_state(const std::string& id) const {
        const auto it = states_.find(id);
        return it == states_.end() ? nullptr : &it->second;
    }

    const UpdateNode* find_update(const std::string& id) const {
        const auto it = updates_.find(id);
        return it == updates_.end() ? nullptr : &it->second;
    }

    const UpdateNode* find_update(const std::string& session_id, Side side,
                                  std::uint64_t step) const {
        return find_update(update_node_id(session_id, update_lane(side), step));
    }

    bool has_node(const std::string& id) const {
        return states_.count(id) > 0 || updates_.count(id) > 0;
    }

    Lane node_lane(const std::string& id) const {
        if (const StateNode* s = find_state(id)) return s->lane;
        if (const UpdateNode* u = find_update(id)) return u->lane;
        throw VakgError(ErrorCode::UnknownNode, id);
    }

    // Update ids of one session side, in step order.
    const std::vector<std::string>& chain(const std::string& session_id, Side side) const {
        static const std::vector<std::string> kEmpty;
        const auto it = chains_.find(session_id);
        if (it == chains_.end()) return kEmpty;
        return it->second[side_index(side)];
    }

    // The session's state trajectory on one side: initial state, then the
    // state produced by each update in step order.
    std::vector<StateFingerprint> state_sequence(const std::string& session_id,
                                                 Side side) const {
        std::vector<StateFingerprint> seq;
        const auto sess = sessions_.find(session_id);
        if (sess != sessions_.end() && !sess->second.initial_state[side_index(side)].empty()) {
            seq.push_back(sess->second.initial_state[side_index(side)]);
        }
        for (const std::string& update_id : chain(session_id, side)) {
            if (const std::string* target = produces_target(update_id)) {
                seq.push_back(*target);
            }
        }
        return seq;
    }

    // Produces target of an update, nullptr when absent (invalid graphs).
    const std::string* produces_target(const std::string& update_id) const {
        const auto it = produces_.find(update_id);
        return it == produces_.end() ? nullptr : &it->second;
    }

    // AppliesTo source of an update, nullptr when absent.
    const std::string* applies_to_source(const std::string& update_id) const {
        const auto it = applies_to_.find(update_id);
        return it == applies_to_.end() ? nullptr : &it->second;
    }

    const std::unordered_map<std::string, StateNode>& states() const { return states_; }
    const std::unordered_map<std::string, UpdateNode>& updates() const { return updates_; }
    const std::vector<std::string>& state_order() const { return state_order_; }
    const std::vector<std::string>& update_order() const { return update_order_; }
    const std::vector<Edge>& edges() const { return edges_; }

    std::size_t state_count() const { return states_.size(); }
    std::size_t update_count() const { return updates_.size(); }
    std::size_t node_count() const { return states_.size() + updates_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    ValidationReport validate() const;

    // Digest of the node set and edge multiset (cursors excluded); equal
    // digests mean structurally equal graphs.
    std::string structural_digest() const;

private:
    SessionCursor& require_session(const std::string& session_id) {
        const auto it = sessions_.find(session_id);
        if (it == sessions_.end()) {
            throw VakgError(ErrorCode::UnknownSession, "session " + session_id);
        }
        return it->second;
    }

    static std::string edge_key(const Edge& edge) {
        std::string key(edge_kind_name(edge.kind));
        key.push_back('\x1f');
        key += edge.session_id;
        key.push_back('\x1f');
        key += edge.from;
        key.push_back('\x1f');
        key += edge.to;
        return key;
    }

    void push_edge(Edge edge) {
        edge_keys_.insert(edge_key(edge));
        if (edge.kind == EdgeKind::AppliesTo) {
            applies_to_count_[edge.to] += 1;
            applies_to_.emplace(edge.to, edge.from);
        } else if (edge.kind == EdgeKind::Produces) {
            produces_count_[edge.from] += 1;
            produces_.emplace(edge.from, edge.to);
        }
        edges_.push_back(std::move(edge));
    }

    std::unordered_map<std::string, StateNode> states_;
    std::unordered_map<std::string, UpdateNode> updates_;
    std::vector<std::string> state_order_;
    std::vector<std::string> update_order_;
    std::vector<Edge> edges_;
    std::unordered_set<std::string> edge_keys_;
    std::unordered_map<std::string, std::string> applies_to_;  // update -> state
    std::unordered_map<std::string, std::string> produces_;    // update -> state
    std::unordered_map<std::string, std::size_t> applies_to_count_;
    std::unordered_map<std::string, std::size_t> produces_count_;
    std::map<std::string, SessionCursor> sessions_;
    std::map<std::string, std::array<std::vector<std::string>, 2>> chains_;
};

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

inline ValidationReport VakgGraph::validate() const {
    ValidationReport report;
    auto flag = [&report](std::string rule, std::string subject, std::string message) {
        report.violations.push_back({std::move(rule), std::move(subject), std::move(message)});
    };

    for (const auto& [id, node] : states_) {
        if (!is_state_lane(node.lane)) {
            flag("state-lane", id, "state node in update lane");
            continue;
        }
        std::string recomputed;
        try {
            recomputed = fingerprint_state(node.lane, node.payload);
        } catch (const VakgError& err) {
            flag("state-payload", id, err.what());
            continue;
        }
        if (recomputed != id) {
            flag("state-id-mismatch", id, "expected " + recomputed);
        }
    }

    for (const auto& [id, node] : updates_) {
        if (!is_update_lane(node.lane)) {
            flag("update-lane", id, "update node in state lane");
        }
        if (node.ops.empty()) {
            flag("update-ops-empty", id, "ops must be non-empty");
        }
        for (const OperationKind op : node.ops) {
            if (!op_legal_in_lane(op, node.lane)) {
                flag("update-ops-lane", id,
                     std::string(1, op_letter(op)) + " not legal in " +
                         std::string(lane_name(node.lane)));
            }
        }
        const auto applies = applies_to_count_.find(id);
        const std::size_t applies_count = applies == applies_to_count_.end() ? 0 : applies->second;
        if (applies_count != 1) {
            flag("update-applies-to-count", id,
                 "expected exactly 1 AppliesTo edge, found " + std::to_string(applies_count));
        }
        const auto produces = produces_count_.find(id);
        const std::size_t produces_count = produces == produces_count_.end() ? 0 : produces->second;
        if (produces_count != 1) {
            flag("update-produces-count", id,
                 "expected exactly 1 Produces edge, found " + std::to_string(produces_count));
        }
    }

    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const Edge& edge = edges_[i];
        const std::string subject = std::string(edge_kind_name(edge.kind)) + " " + edge.from +
                                    " -> " + edge.to;
        if (!has_node(edge.from) || !has_node(edge.to)) {
            flag("edge-endpoint-missing", subject, "edge references unknown node");
            continue;
        }
        switch (edge.kind) {
        case EdgeKind::TemporalNext: {
            const UpdateNode* from = find_update(edge.from);
            const UpdateNode* to = find_update(edge.to);
            if (from == nullptr || to == nullptr) {
                flag("temporal-next-shape", subject, "endpoints must be update nodes");
                break;
            }
            if (from->lane != to->lane || from->session_id != to->session_id ||
                from->session_id != edge.session_id) {
                flag("temporal-next-shape", subject, "lane/session mismatch");
                break;
            }
            if (from->step >= to->step) {
                flag("temporal-next-order", subject, "steps must increase");
            }
            break;
        }
        case EdgeKind::AppliesTo: {
            const StateNode* from = find_state(edge.from);
            const UpdateNode* to = find_update(edge.to);
            if (from == nullptr || to == nullptr) {
                flag("applies-to-shape", subject, "must run state -> update");
                break;
            }
            if (is_human_lane(from->lane) != is_human_lane(to->lane)) {
                flag("applies-to-shape", subject, "state and update sides differ");
            }
            break;
        }
        case EdgeKind::Produces: {
            const UpdateNode* from = find_update(edge.from);
            const StateNode* to = find_state(edge.to);
            if (from == nullptr || to == nullptr) {
                flag("produces-shape", subject, "must run update -> state");
                break;
            }
            if (is_human_lane(from->lane) != is_human_lane(to->lane)) {
                flag("produces-shape", subject, "update and state sides differ");
            }
            break;
        }
        case EdgeKind::Sync: {
            const Lane from_lane = node_lane(edge.from);
            const Lane to_lane = node_lane(edge.to);
            if (!is_human_lane(from_lane) || is_human_lane(to_lane)) {
                flag("sync-shape", subject, "must run human side -> computer side");
                break;
            }
            const UpdateNode* from = find_update(edge.from);
            const UpdateNode* to = find_update(edge.to);
            if (from != nullptr && to != nullptr) {
                if (from->session_id != to->session_id || from->step != to->step) {
                    flag("sync-shape", subject, "updates must share session and step");
                }
            } else if (from == nullptr && to == nullptr) {
                flag("sync-shape", subject, "at least one endpoint must be an update");
            }
            break;
        }
        }
    }

    // Per-session chains: strictly increasing steps, each consecutive
    // pair alternating through the produced state, TemporalNext between
    // neighbors, and the first update anchored at the initial state.
    for (const auto& [session_id, by_side] : chains_) {
        for (const Side side : {Side::Computer, Side::Human}) {
            const auto& chain = by_side[side_index(side)];
            const auto cursor = sessions_.find(session_id);
            for (std::size_t i = 0; i < chain.size(); ++i) {
                const UpdateNode* node = find_update(chain[i]);
                if (node == nullptr) continue;
                if (i == 0) {
                    if (cursor != sessions_.end()) {
                        const std::string* source = applies_to_source(node->id);
                        if (source != nullptr &&
                            *source != cursor->second.initial_state[side_index(side)]) {
                            flag("chain-origin", node->id,
                                 "first update does not apply to the session's initial state");
                        }
                    }
                    continue;
                }
                const UpdateNode* prev = find_update(chain[i - 1]);
                if (prev == nullptr) continue;
                if (prev->step >= node->step) {
                    flag("chain-step-order", node->id, "steps must strictly increase");
                }
                const std::string* produced = produces_target(prev->id);
                const std::string* applied = applies_to_source(node->id);
                if (produced != nullptr && applied != nullptr && *produced != *applied) {
                    flag("chain-alternation", node->id,
                         "does not apply to the state produced by " + prev->id);
                }
                if (edge_keys_.count(edge_key(
                        {EdgeKind::TemporalNext, session_id, prev->id, node->id})) == 0) {
                    flag("chain-temporal-next", node->id,
                         "missing TemporalNext from " + prev->id);
                }
            }
        }
    }

    return report;
}

inline std::string VakgGraph::structural_digest() const {
    std::vector<std::string> parts;
    parts.reserve(states_.size() + updates_.size() + edges_.size());
    for (const auto& [id, node] : states_) {
        parts.push_back("S|" + id + "|" + std::string(lane_name(node.lane)) + "|" +
                        canonical_payload(node.payload));
    }
    for (const auto& [id, node] : updates_) {
        std::string ops;
        for (const OperationKind op : node.ops) ops.push_back(op_letter(op));
        parts.push_back("U|" + id + "|" + std::string(lane_name(node.lane)) + "|" +
                        node.session_id + "|" + node.user_id + "|" +
                        std::to_string(node.step) + "|" + ops + "|" +
                        node.wall_clock.value_or("") + "|" + canonical_payload(node.payload));
    }
    for (const Edge& edge : edges_) {
        parts.push_back("E|" + std::string(edge_kind_name(edge.kind)) + "|" + edge.session_id +
                        "|" + edge.from + "|" + edge.to);
    }
    std::sort(parts.begin(), parts.end());
    Sha256 hash;
    for (const std::string& part : parts) {
        hash.update(part);
        hash.update("\n");
    }
    return hash.hex_digest();
}

}  // namespace vakg
