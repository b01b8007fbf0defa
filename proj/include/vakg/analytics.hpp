#pragma once

// Read-only analyses over a graph snapshot. Everything here operates on
// copies or index structures; the graph itself is never touched, so any
// number of analyses may run in parallel on one snapshot.
//
// Motif definitions (normative for this project):
//   A session's trajectory on one side is its state sequence: the
//   initial state followed by the state produced by each update, in
//   step order. For two sessions and sequences a, b on one side, with
//   i = first occurrence of state s in a and j = first occurrence in b:
//     Divergence  - both successors exist and differ:
//                   a[i+1] != b[j+1]. The sessions stood in the same
//                   state and continued differently.
//     Convergence - the sequences differ at an aligned position
//                   k < min(i, j): a[k] != b[k]. The sessions were
//                   apart and later met in s. Hits where both sequences
//                   also end in the same state carry shared_goal=true.
//   First-occurrence anchoring keeps identical sequences silent: replays
//   of the same trajectory are agreement, not divergence.
//   Within one session's sequence, for a state s occurring at two or
//   more positions:
//     Backtrack   - some pair of occurrences p < q has both successors
//                   defined and different: seq[p+1] != seq[q+1].
//     Loop        - s recurs but no such pair exists (the revisit ends
//                   the sequence or repeats the old continuation).
//   A recurring state therefore yields exactly one of Loop or Backtrack.
//   Hits are reported once per (motif, anchor state, session set) and
//   enumeration is exhaustive.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <vakg/graph.hpp>
#include <vakg/time.hpp>

namespace vakg {

// ---------------------------------------------------------------------------
// projections and views
// ---------------------------------------------------------------------------

inline std::set<Lane> all_lanes() {
    return {Lane::ComputerState, Lane::HumanState, Lane::ComputerUpdate, Lane::HumanUpdate};
}

inline std::set<EdgeKind> all_edge_kinds() {
    return {EdgeKind::TemporalNext, EdgeKind::AppliesTo, EdgeKind::Produces, EdgeKind::Sync};
}

struct Projection {
    std::set<Lane> lanes = all_lanes();
    std::set<EdgeKind> edge_kinds = all_edge_kinds();
    std::optional<std::string> subtask_tag;
    std::optional<std::set<std::string>> sessions;
    // Replace AppliesTo/Produces pairs by direct state->state edges (one
    // per update), e.g. lanes={ComputerState} + contract_updates gives
    // the state transition graph.
    bool contract_updates = false;
};

// A small directed multigraph extracted from a projection (or built
// directly in tests). Node order is fixed at construction and all
// algorithms iterate it deterministically.
class GraphView {
public:
    struct OutEdge {
        std::uint32_t to;
        double hop_weight;
        std::optional<double> wall_clock_weight;  // seconds, when both ends carry clocks
    };

    GraphView() = default;

    static GraphView from_graph(const VakgGraph& graph, const Projection& projection);

    std::uint32_t add_node(const std::string& id) {
        const auto it = index_.find(id);
        if (it != index_.end()) return it->second;
        const auto idx = static_cast<std::uint32_t>(ids_.size());
        index_.emplace(id, idx);
        ids_.push_back(id);
        out_.emplace_back();
        in_.emplace_back();
        return idx;
    }

    void add_edge(const std::string& from, const std::string& to, double hop_weight = 1.0,
                  std::optional<double> wall_clock_weight = std::nullopt) {
        const std::uint32_t f = add_node(from);
        const std::uint32_t t = add_node(to);
        out_[f].push_back({t, hop_weight, wall_clock_weight});
        in_[t].push_back({f, hop_weight, wall_clock_weight});
        ++edge_count_;
    }

    bool contains(const std::string& id) const { return index_.count(id) > 0; }

    std::optional<std::uint32_t> index_of(const std::string& id) const {
        const auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& id_of(std::uint32_t idx) const { return ids_[idx]; }
    const std::vector<std::string>& node_ids() const { return ids_; }
    const std::vector<OutEdge>& out_edges(std::uint32_t idx) const { return out_[idx]; }
    const std::vector<OutEdge>& in_edges(std::uint32_t idx) const { return in_[idx]; }
    std::size_t node_count() const { return ids_.size(); }
    std::size_t edge_count() const { return edge_count_; }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::vector<OutEdge>> out_;
    std::vector<std::vector<OutEdge>> in_;  // mirrored for reverse traversal
    std::size_t edge_count_ = 0;
};

namespace detail {

inline bool payload_has_tag(const PropertyMap& payload, const std::string& tag) {
    const auto it = payload.find("subtasks");
    if (it == payload.end() || !it->is_array()) return false;
    for (const auto& entry : *it) {
        if (entry.is_string() && entry.get_ref<const std::string&>() == tag) return true;
    }
    return false;
}

inline std::optional<double> node_clock(const VakgGraph& graph, const std::string& id) {
    const UpdateNode* update = graph.find_update(id);
    if (update == nullptr || !update->wall_clock) return std::nullopt;
    return parse_rfc3339_seconds(*update->wall_clock);
}

}  // namespace detail

inline GraphView GraphView::from_graph(const VakgGraph& graph, const Projection& projection) {
    auto session_passes = [&projection](const std::string& session_id) {
        return !projection.sessions || projection.sessions->count(session_id) > 0;
    };
    auto node_passes = [&](const std::string& id, Lane lane, const PropertyMap& payload,
                           const std::string& session_id) {
        (void)id;
        if (projection.lanes.count(lane) == 0) return false;
        if (!session_id.empty() && !session_passes(session_id)) return false;
        if (projection.subtask_tag && !detail::payload_has_tag(payload, *projection.subtask_tag)) {
            return false;
        }
        return true;
    };

    // Candidate membership; state nodes are atemporal, so a session
    // filter keeps exactly the states touched by the kept sessions.
    std::unordered_set<std::string> kept;
    std::unordered_set<std::string> session_states;
    if (projection.sessions) {
        for (const std::string& session_id : *projection.sessions) {
            if (!graph.has_session(session_id)) continue;
            for (const Side side : {Side::Computer, Side::Human}) {
                for (const auto& fp : graph.state_sequence(session_id, side)) {
                    session_states.insert(fp);
                }
            }
        }
    }

    GraphView view;
    std::vector<std::string> order;
    for (const auto& id : graph.state_order()) {
        const StateNode& node = *graph.find_state(id);
        if (projection.sessions && session_states.count(id) == 0) continue;
        if (!node_passes(id, node.lane, node.payload, "")) continue;
        kept.insert(id);
        order.push_back(id);
    }
    for (const auto& id : graph.update_order()) {
        const UpdateNode& node = *graph.find_update(id);
        if (!node_passes(id, node.lane, node.payload, node.session_id)) continue;
        kept.insert(id);
        order.push_back(id);
    }
    std::sort(order.begin(), order.end());
    for (const std::string& id : order) {
        view.add_node(id);
    }

    for (const Edge& edge : graph.edges()) {
        if (projection.edge_kinds.count(edge.kind) == 0) continue;
        if (kept.count(edge.from) == 0 || kept.count(edge.to) == 0) continue;
        std::optional<double> wall;
        const auto from_clock = detail::node_clock(graph, edge.from);
        const auto to_clock = detail::node_clock(graph, edge.to);
        if (from_clock && to_clock) {
            wall = *to_clock - *from_clock;
        }
        view.add_edge(edge.from, edge.to, 1.0, wall);
    }

    if (projection.contract_updates) {
        for (const auto& id : graph.update_order()) {
            const UpdateNode& node = *graph.find_update(id);
            if (!session_passes(node.session_id)) continue;
            const std::string* from = graph.applies_to_source(id);
            const std::string* to = graph.produces_target(id);
            if (from == nullptr || to == nullptr) continue;
            if (kept.count(*from) == 0 || kept.count(*to) == 0) continue;
            view.add_edge(*from, *to, 1.0, std::nullopt);
        }
    }
    return view;
}

inline GraphView project(const VakgGraph& graph, const Projection& projection) {
    return GraphView::from_graph(graph, projection);
}

// ---------------------------------------------------------------------------
// PageRank
// ---------------------------------------------------------------------------

struct PageRankOptions {
    double damping = 0.85;
    double tolerance = 1e-9;
    std::size_t max_iterations = 100;
};

struct PageRankResult {
    std::map<std::string, double> scores;  // sums to 1
    bool converged = false;
    std::size_t iterations = 0;
};

// Power iteration with uniform redistribution of dangling mass; parallel
// edges count with multiplicity, so frequent transitions weigh more.
inline PageRankResult pagerank(const GraphView& view, PageRankOptions options = {}) {
    const std::size_t n = view.node_count();
    if (n == 0) {
        throw VakgError(ErrorCode::EmptyGraph, "pagerank needs a non-empty view");
    }
    const double d = options.damping;
    std::vector<double> rank(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n, 0.0);

    PageRankResult result;
    for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
        double dangling = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (view.out_edges(static_cast<std::uint32_t>(v)).empty()) {
                dangling += rank[v];
            }
        }
        const double base = (1.0 - d) / static_cast<double>(n) +
                            d * dangling / static_cast<double>(n);
        std::fill(next.begin(), next.end(), base);
        for (std::size_t v = 0; v < n; ++v) {
            const auto& edges = view.out_edges(static_cast<std::uint32_t>(v));
            if (edges.empty()) continue;
            const double share = d * rank[v] / static_cast<double>(edges.size());
            for (const auto& edge : edges) {
                next[edge.to] += share;
            }
        }
        double delta = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            delta += std::abs(next[v] - rank[v]);
        }
        rank.swap(next);
        result.iterations = iter;
        if (delta < options.tolerance) {
            result.converged = true;
            break;
        }
    }

    for (std::size_t v = 0; v < n; ++v) {
        result.scores.emplace(view.id_of(static_cast<std::uint32_t>(v)), rank[v]);
    }
    return result;
}

// ---------------------------------------------------------------------------
// shortest path
// ---------------------------------------------------------------------------

enum class WeightScheme : std::uint8_t { HopCount, WallClock };

constexpr std::string_view weight_scheme_name(WeightScheme scheme) {
    return scheme == WeightScheme::HopCount ? "hop-count" : "wall-clock";
}

struct PathResult {
    std::vector<std::string> nodes;
    double total_weight = 0.0;
    WeightScheme scheme = WeightScheme::HopCount;
};

// Dijkstra over the view. Among minimum-weight paths the lexicographically
// smallest node-id sequence wins, which pins the result for equal-weight
// alternatives. Wall-clock weights must exist and be non-negative on every
// edge of the view.
inline PathResult shortest_path(const GraphView& view, const std::string& from,
                                const std::string& to,
                                WeightScheme scheme = WeightScheme::HopCount) {
    const auto source = view.index_of(from);
    const auto target = view.index_of(to);
    if (!source) throw VakgError(ErrorCode::UnknownNode, from);
    if (!target) throw VakgError(ErrorCode::UnknownNode, to);

    auto edge_weight = [&](const GraphView::OutEdge& edge) -> double {
        if (scheme == WeightScheme::HopCount) return edge.hop_weight;
        if (!edge.wall_clock_weight) {
            throw VakgError(ErrorCode::BadWeights,
                            "wall-clock weighting needs timestamps on every edge of the view");
        }
        if (*edge.wall_clock_weight < 0.0) {
            throw VakgError(ErrorCode::BadWeights, "negative wall-clock edge weight");
        }
        return *edge.wall_clock_weight;
    };
    if (scheme == WeightScheme::WallClock) {
        for (std::size_t v = 0; v < view.node_count(); ++v) {
            for (const auto& edge : view.out_edges(static_cast<std::uint32_t>(v))) {
                edge_weight(edge);  // validates the whole view up front
            }
        }
    }

    if (*source == *target) {
        return {{from}, 0.0, scheme};
    }

    // Priority = (distance, node-id sequence); with positive weights this
    // finalizes each node with its lexicographically smallest optimum.
    struct Entry {
        double dist;
        std::vector<std::uint32_t> path;
    };
    auto path_less = [&view](const std::vector<std::uint32_t>& a,
                             const std::vector<std::uint32_t>& b) {
        return std::lexicographical_compare(
            a.begin(), a.end(), b.begin(), b.end(),
            [&view](std::uint32_t x, std::uint32_t y) { return view.id_of(x) < view.id_of(y); });
    };
    auto entry_greater = [&path_less](const Entry& a, const Entry& b) {
        if (a.dist != b.dist) return a.dist > b.dist;
        return path_less(b.path, a.path);
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(entry_greater)> queue(entry_greater);
    std::vector<bool> done(view.node_count(), false);
    queue.push({0.0, {*source}});

    while (!queue.empty()) {
        const Entry entry = queue.top();
        queue.pop();
        const std::uint32_t node = entry.path.back();
        if (done[node]) continue;
        done[node] = true;
        if (node == *target) {
            PathResult result;
            result.total_weight = entry.dist;
            result.scheme = scheme;
            result.nodes.reserve(entry.path.size());
            for (const std::uint32_t idx : entry.path) {
                result.nodes.push_back(view.id_of(idx));
            }
            return result;
        }
        for (const auto& edge : view.out_edges(node)) {
            if (done[edge.to]) continue;
            Entry next{entry.dist + edge_weight(edge), entry.path};
            next.path.push_back(edge.to);
            queue.push(std::move(next));
        }
    }
    throw VakgError(ErrorCode::NoPath, from + " -> " + to);
}

// ---------------------------------------------------------------------------
// motifs
// ---------------------------------------------------------------------------

enum class Motif : std::uint8_t { Divergence, Convergence, Backtrack, Loop };

constexpr std::string_view motif_name(Motif motif) {
    switch (motif) {
    case Motif::Divergence: return "Divergence";
    case Motif::Convergence: return "Convergence";
    case Motif::Backtrack: return "Backtrack";
    case Motif::Loop: return "Loop";
    }
    return "?";
}

inline std::optional<Motif> motif_from_name(std::string_view name) {
    if (name == "Divergence") return Motif::Divergence;
    if (name == "Convergence") return Motif::Convergence;
    if (name == "Backtrack") return Motif::Backtrack;
    if (name == "Loop") return Motif::Loop;
    return std::nullopt;
}

struct MotifHit {
    Motif motif = Motif::Loop;
    Side side = Side::Computer;
    std::vector<std::string> sessions;    // sorted; 1 entry (loop/backtrack) or 2
    std::string anchor;                   // state fingerprint the motif pivots on
    std::vector<std::size_t> positions;   // occurrence indices in the state sequence(s)
    bool shared_goal = false;             // convergence only

    // Identity for dedup and oracle comparison.
    std::tuple<Motif, Side, std::vector<std::string>, std::string> key() const {
        return {motif, side, sessions, anchor};
    }

    bool operator==(const MotifHit& other) const { return key() == other.key(); }
    bool operator<(const MotifHit& other) const { return key() < other.key(); }
};

// State sequences per (session, side), ordered by session id.
using SequencesBySide = std::map<std::string, std::vector<StateFingerprint>>;

// Motif evaluation on raw sequences; detect_motifs extracts sequences
// from a graph and defers here, and the simulator reuses it to label the
// scripts it emits.
inline std::vector<MotifHit> motifs_from_sequences(
    const std::array<SequencesBySide, 2>& sequences_by_side) {
    std::vector<MotifHit> hits;
    for (const Side side : {Side::Computer, Side::Human}) {
        const SequencesBySide& sequences = sequences_by_side[side_index(side)];

        // Loops and backtracks within one session.
        for (const auto& [session_id, seq] : sequences) {
            std::map<StateFingerprint, std::vector<std::size_t>> occurrences;
            for (std::size_t i = 0; i < seq.size(); ++i) {
                occurrences[seq[i]].push_back(i);
            }
            for (const auto& [state, positions] : occurrences) {
                if (positions.size() < 2) continue;
                bool backtrack = false;
                for (std::size_t a = 0; a < positions.size() && !backtrack; ++a) {
                    for (std::size_t b = a + 1; b < positions.size() && !backtrack; ++b) {
                        const std::size_t p = positions[a];
                        const std::size_t q = positions[b];
                        if (p + 1 < seq.size() && q + 1 < seq.size() &&
                            seq[p + 1] != seq[q + 1]) {
                            backtrack = true;
                        }
                    }
                }
                MotifHit hit;
                hit.motif = backtrack ? Motif::Backtrack : Motif::Loop;
                hit.side = side;
                hit.sessions = {session_id};
                hit.anchor = state;
                hit.positions = positions;
                hits.push_back(std::move(hit));
            }
        }

        // Divergence/convergence across session pairs.
        for (auto first = sequences.begin(); first != sequences.end(); ++first) {
            for (auto second = std::next(first); second != sequences.end(); ++second) {
                const auto& a = first->second;
                const auto& b = second->second;

                // first occurrence per state; cross-session motifs anchor
                // at first visits so identical sequences stay silent
                std::map<StateFingerprint, std::size_t> in_a, in_b;
                for (std::size_t i = a.size(); i-- > 0;) in_a[a[i]] = i;
                for (std::size_t j = b.size(); j-- > 0;) in_b[b[j]] = j;

                std::size_t first_diff = std::numeric_limits<std::size_t>::max();
                for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
                    if (a[k] != b[k]) {
                        first_diff = k;
                        break;
                    }
                }

                for (const auto& [state, i] : in_a) {
                    const auto shared = in_b.find(state);
                    if (shared == in_b.end()) continue;
                    const std::size_t j = shared->second;
                    if (i + 1 < a.size() && j + 1 < b.size() && a[i + 1] != b[j + 1]) {
                        MotifHit hit;
                        hit.motif = Motif::Divergence;
                        hit.side = side;
                        hit.sessions = {first->first, second->first};
                        hit.anchor = state;
                        hit.positions = {i, j};
                        hits.push_back(std::move(hit));
                    }
                    if (first_diff < std::min(i, j)) {
                        MotifHit hit;
                        hit.motif = Motif::Convergence;
                        hit.side = side;
                        hit.sessions = {first->first, second->first};
                        hit.anchor = state;
                        hit.positions = {i, j};
                        hit.shared_goal = !a.empty() && !b.empty() && a.back() == b.back();
                        hits.push_back(std::move(hit));
                    }
                }
            }
        }
    }
    std::sort(hits.begin(), hits.end());
    return hits;
}

inline std::array<SequencesBySide, 2> state_sequences(const VakgGraph& graph) {
    std::array<SequencesBySide, 2> result;
    for (const auto& [session_id, cursor] : graph.sessions()) {
        for (const Side side : {Side::Computer, Side::Human}) {
            result[side_index(side)][session_id] = graph.state_sequence(session_id, side);
        }
    }
    return result;
}

inline std::vector<MotifHit> detect_motifs(const VakgGraph& graph) {
    const ValidationReport report = graph.validate();
    if (!report.ok()) {
        throw VakgError(ErrorCode::InvalidGraph,
                        "motif detection needs a valid graph; first violation: " +
                            report.violations.front().rule + " on " +
                            report.violations.front().subject);
    }
    return motifs_from_sequences(state_sequences(graph));
}

// ---------------------------------------------------------------------------
// state importance
// ---------------------------------------------------------------------------

struct ImportanceEntry {
    std::string state_id;     // a ComputerState fingerprint
    double importance = 0.0;  // in [0, 1]
};

namespace detail {

// The routing graph for importance: human updates, computer updates and
// computer states, joined by Sync (both ways), AppliesTo and Produces.
// Human states are excluded so consecutive human updates connect only
// through the computer side; removing a computer state then actually
// severs the workflows that passed through it.
struct ImportanceGraph {
    GraphView view;
    std::vector<std::string> sources;  // first human update per cohort session
    std::set<std::string> targets;     // human update(s) representing the goal
};

inline ImportanceGraph build_importance_graph(const VakgGraph& graph, const std::string& goal,
                                              const std::set<std::string>& cohort) {
    ImportanceGraph result;

    auto in_cohort = [&cohort](const std::string& session_id) {
        return cohort.count(session_id) > 0;
    };

    std::vector<std::string> order;
    for (const auto& [id, node] : graph.updates()) {
        if (in_cohort(node.session_id)) order.push_back(id);
    }
    for (const std::string& session_id : cohort) {
        if (!graph.has_session(session_id)) continue;
        for (const auto& fp : graph.state_sequence(session_id, Side::Computer)) {
            order.push_back(fp);
        }
    }
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    for (const std::string& id : order) {
        result.view.add_node(id);
    }

    for (const Edge& edge : graph.edges()) {
        if (!result.view.contains(edge.from) || !result.view.contains(edge.to)) continue;
        switch (edge.kind) {
        case EdgeKind::AppliesTo:
        case EdgeKind::Produces:
            result.view.add_edge(edge.from, edge.to);
            break;
        case EdgeKind::Sync:
            result.view.add_edge(edge.from, edge.to);
            result.view.add_edge(edge.to, edge.from);
            break;
        case EdgeKind::TemporalNext:
            break;  // would bypass the states entirely
        }
    }

    for (const std::string& session_id : cohort) {
        if (!graph.has_session(session_id)) {
            throw VakgError(ErrorCode::UnknownSession, "cohort session " + session_id);
        }
        const auto& human_chain = graph.chain(session_id, Side::Human);
        if (!human_chain.empty()) {
            result.sources.push_back(human_chain.front());
        }
    }
    std::sort(result.sources.begin(), result.sources.end());

    if (const UpdateNode* update = graph.find_update(goal)) {
        if (update->lane != Lane::HumanUpdate) {
            throw VakgError(ErrorCode::IllegalLane, "goal must be a human-side node");
        }
        result.targets.insert(goal);
    } else if (const StateNode* state = graph.find_state(goal)) {
        if (state->lane != Lane::HumanState) {
            throw VakgError(ErrorCode::IllegalLane, "goal must be a human-side node");
        }
        // A human-state goal stands for every update that produced it.
        for (const auto& [id, node] : graph.updates()) {
            if (node.lane != Lane::HumanUpdate || !in_cohort(node.session_id)) continue;
            const std::string* produced = graph.produces_target(id);
            if (produced != nullptr && *produced == goal) {
                result.targets.insert(id);
            }
        }
        if (result.targets.empty()) {
            throw VakgError(ErrorCode::UnreachableGoal,
                            "no cohort update produces the goal state");
        }
    } else {
        throw VakgError(ErrorCode::UnknownNode, goal);
    }
    return result;
}

// Hop distances from every node to the nearest target, following edges
// forward (BFS on the reversed adjacency). `removed` carves one node out.
inline std::vector<std::int64_t> distances_to_targets(const GraphView& view,
                                                      const std::set<std::string>& targets,
                                                      std::optional<std::uint32_t> removed) {
    constexpr std::int64_t kUnreached = -1;
    std::vector<std::int64_t> dist(view.node_count(), kUnreached);
    std::deque<std::uint32_t> frontier;
    for (const std::string& target : targets) {
        const auto idx = view.index_of(target);
        if (!idx || (removed && *removed == *idx)) continue;
        dist[*idx] = 0;
        frontier.push_back(*idx);
    }
    while (!frontier.empty()) {
        const std::uint32_t node = frontier.front();
        frontier.pop_front();
        // in_edges store the source endpoint in .to
        for (const auto& edge : view.in_edges(node)) {
            if (removed && *removed == edge.to) continue;
            if (dist[edge.to] != kUnreached) continue;
            dist[edge.to] = dist[node] + 1;
            frontier.push_back(edge.to);
        }
    }
    return dist;
}

}  // namespace detail

// For every computer state visited by the cohort, how much the cohort's
// shortest routes to the goal degrade when that state is removed:
//   per session r = 1 - baseline/degraded  (1.0 when the goal becomes
//   unreachable, 0.0 when nothing changes), importance = mean over the
//   sessions that could reach the goal at baseline.
// importance == 1.0 exactly when the state is an articulation point for
// every cohort route to the goal.
inline std::vector<ImportanceEntry> state_importance(
    const VakgGraph& graph, const std::string& goal,
    std::optional<std::set<std::string>> cohort = std::nullopt) {
    std::set<std::string> sessions;
    if (cohort) {
        sessions = *cohort;
    } else {
        for (const auto& [session_id, cursor] : graph.sessions()) {
            sessions.insert(session_id);
        }
    }

    const detail::ImportanceGraph routing = detail::build_importance_graph(graph, goal, sessions);

    const auto baseline = detail::distances_to_targets(routing.view, routing.targets, std::nullopt);
    std::vector<std::pair<std::uint32_t, std::int64_t>> reachable_sources;
    for (const std::string& source : routing.sources) {
        const auto idx = routing.view.index_of(source);
        if (idx && baseline[*idx] >= 0) {
            reachable_sources.emplace_back(*idx, baseline[*idx]);
        }
    }
    if (reachable_sources.empty()) {
        throw VakgError(ErrorCode::UnreachableGoal, "no cohort session reaches " + goal);
    }

    std::set<std::string> candidates;
    for (const std::string& session_id : sessions) {
        if (!graph.has_session(session_id)) continue;
        for (const auto& fp : graph.state_sequence(session_id, Side::Computer)) {
            candidates.insert(fp);
        }
    }

    std::vector<ImportanceEntry> entries;
    for (const std::string& candidate : candidates) {
        const auto removed = routing.view.index_of(candidate);
        const auto degraded =
            detail::distances_to_targets(routing.view, routing.targets, removed);
        double sum = 0.0;
        for (const auto& [source, base_dist] : reachable_sources) {
            const std::int64_t new_dist = degraded[source];
            if (new_dist < 0) {
                sum += 1.0;
            } else if (base_dist == 0 && new_dist == 0) {
                // source is itself a target; removal cannot matter
            } else {
                sum += 1.0 - static_cast<double>(base_dist) / static_cast<double>(new_dist);
            }
        }
        entries.push_back({candidate, sum / static_cast<double>(reachable_sources.size())});
    }
    std::sort(entries.begin(), entries.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
        if (a.importance != b.importance) return a.importance > b.importance;
        return a.state_id < b.state_id;
    });
    return entries;
}

// ---------------------------------------------------------------------------
// session statistics
// ---------------------------------------------------------------------------

struct SessionStats {
    std::string session_id;
    std::string user_id;
    std::size_t human_updates = 0;
    std::size_t computer_updates = 0;
    std::size_t distinct_states_visited = 0;  // states produced by this session's updates
    std::size_t loop_count = 0;               // recurring (side, state) anchors
    std::optional<double> wall_clock_span_seconds;
};

inline std::vector<SessionStats> session_stats(const VakgGraph& graph) {
    std::vector<SessionStats> result;
    for (const auto& [session_id, cursor] : graph.sessions()) {
        SessionStats stats;
        stats.session_id = session_id;
        stats.user_id = cursor.user_id;
        stats.computer_updates = graph.chain(session_id, Side::Computer).size();
        stats.human_updates = graph.chain(session_id, Side::Human).size();

        std::set<StateFingerprint> produced;
        std::optional<double> first_clock, last_clock;
        for (const Side side : {Side::Computer, Side::Human}) {
            for (const std::string& update_id : graph.chain(session_id, side)) {
                if (const std::string* target = graph.produces_target(update_id)) {
                    produced.insert(*target);
                }
                const UpdateNode* update = graph.find_update(update_id);
                if (update != nullptr && update->wall_clock) {
                    const auto clock = parse_rfc3339_seconds(*update->wall_clock);
                    if (clock) {
                        if (!first_clock || *clock < *first_clock) first_clock = clock;
                        if (!last_clock || *clock > *last_clock) last_clock = clock;
                    }
                }
            }
            const auto seq = graph.state_sequence(session_id, side);
            std::map<StateFingerprint, std::size_t> occurrences;
            for (const auto& fp : seq) occurrences[fp] += 1;
            for (const auto& [fp, count] : occurrences) {
                if (count >= 2) stats.loop_count += 1;
            }
        }
        stats.distinct_states_visited = produced.size();
        if (first_clock && last_clock) {
            stats.wall_clock_span_seconds = *last_clock - *first_clock;
        }
        result.push_back(std::move(stats));
    }
    return result;
}

// ---------------------------------------------------------------------------
// JSON serialization of results
// ---------------------------------------------------------------------------

inline nlohmann::json pagerank_to_json(const PageRankResult& result) {
    nlohmann::json scores = nlohmann::json::object();
    for (const auto& [id, score] : result.scores) {
        scores[id] = score;
    }
    return {{"scores", scores},
            {"converged", result.converged},
            {"iterations", result.iterations}};
}

inline nlohmann::json path_to_json(const PathResult& result) {
    return {{"nodes", result.nodes},
            {"total_weight", result.total_weight},
            {"weight", std::string(weight_scheme_name(result.scheme))}};
}

inline nlohmann::json motif_hit_to_json(const MotifHit& hit) {
    nlohmann::json j{{"motif", std::string(motif_name(hit.motif))},
                     {"side", std::string(side_name(hit.side))},
                     {"sessions", hit.sessions},
                     {"anchor", hit.anchor},
                     {"positions", hit.positions}};
    if (hit.motif == Motif::Convergence) {
        j["shared_goal"] = hit.shared_goal;
    }
    return j;
}

inline nlohmann::json motif_hits_to_json(const std::vector<MotifHit>& hits) {
    auto arr = nlohmann::json::array();
    for (const MotifHit& hit : hits) arr.push_back(motif_hit_to_json(hit));
    return {{"hits", arr}};
}

inline nlohmann::json importance_to_json(const std::vector<ImportanceEntry>& entries) {
    auto arr = nlohmann::json::array();
    for (const ImportanceEntry& entry : entries) {
        arr.push_back({{"state_id", entry.state_id}, {"importance", entry.importance}});
    }
    return {{"ranking", arr}};
}

inline nlohmann::json session_stats_to_json(const std::vector<SessionStats>& stats) {
    auto arr = nlohmann::json::array();
    for (const SessionStats& s : stats) {
        nlohmann::json j{{"session_id", s.session_id},
                         {"user_id", s.user_id},
                         {"human_updates", s.human_updates},
                         {"computer_updates", s.computer_updates},
                         {"distinct_states_visited", s.distinct_states_visited},
                         {"loop_count", s.loop_count}};
        if (s.wall_clock_span_seconds) {
            j["wall_clock_span_seconds"] = *s.wall_clock_span_seconds;
        }
        arr.push_back(std::move(j));
    }
    return {{"sessions", arr}};
}

}  // namespace vakg
