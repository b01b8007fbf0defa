#pragma once

// Persistence and interchange.
//
// The event log is the source of truth: line-delimited JSON, one
// EventRecord per line, append-only. Graphs are caches rebuilt by
// replay. GraphML is the lossless snapshot format (export then import
// reproduces the node set and edge multiset exactly); DOT and edge-list
// CSV are lossy conveniences for external tooling.

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <vakg/event.hpp>
#include <vakg/graph.hpp>
#include <vakg/ingest.hpp>

namespace vakg {

// ---------------------------------------------------------------------------
// event log
// ---------------------------------------------------------------------------

class EventLog {
public:
    // Creates the file if missing; appends otherwise. With fsync_each,
    // every append is flushed to disk before returning.
    static EventLog open_for_append(const std::string& path, bool fsync_each = false) {
        const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
        if (fd < 0) {
            throw VakgError(ErrorCode::IoError,
                            "open " + path + ": " + std::strerror(errno));
        }
        const off_t size = ::lseek(fd, 0, SEEK_END);
        if (size < 0) {
            ::close(fd);
            throw VakgError(ErrorCode::IoError, "lseek " + path + ": " + std::strerror(errno));
        }
        return EventLog(path, fd, static_cast<std::uint64_t>(size), fsync_each);
    }

    EventLog(EventLog&& other) noexcept
        : path_(std::move(other.path_)),
          fd_(other.fd_),
          offset_(other.offset_),
          fsync_each_(other.fsync_each_) {
        other.fd_ = -1;
    }

    EventLog& operator=(EventLog&& other) noexcept {
        if (this != &other) {
            close();
            path_ = std::move(other.path_);
            fd_ = other.fd_;
            offset_ = other.offset_;
            fsync_each_ = other.fsync_each_;
            other.fd_ = -1;
        }
        return *this;
    }

    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    ~EventLog() { close(); }

    // Serializes the event as one line and returns the byte offset the
    // line starts at.
    std::uint64_t append_event(const EventRecord& event) {
        if (fd_ < 0) {
            throw VakgError(ErrorCode::IoError, "append to closed log " + path_);
        }
        const std::uint64_t at = offset_;
        std::string line = event_to_json(event).dump();
        line.push_back('\n');
        std::size_t written = 0;
        while (written < line.size()) {
            const ssize_t n = ::write(fd_, line.data() + written, line.size() - written);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw VakgError(ErrorCode::IoError,
                                "write " + path_ + ": " + std::strerror(errno));
            }
            written += static_cast<std::size_t>(n);
        }
        if (fsync_each_ && ::fsync(fd_) != 0) {
            throw VakgError(ErrorCode::IoError, "fsync " + path_ + ": " + std::strerror(errno));
        }
        offset_ += line.size();
        return at;
    }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    bool is_open() const { return fd_ >= 0; }
    const std::string& path() const { return path_; }

private:
    EventLog(std::string path, int fd, std::uint64_t offset, bool fsync_each)
        : path_(std::move(path)), fd_(fd), offset_(offset), fsync_each_(fsync_each) {}

    std::string path_;
    int fd_ = -1;
    std::uint64_t offset_ = 0;
    bool fsync_each_ = false;
};

// Reads a whole log back, preserving order. A malformed line fails with
// its 1-based line number.
inline std::vector<EventRecord> load_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw VakgError(ErrorCode::IoError, "cannot read " + path);
    }
    std::vector<EventRecord> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto parsed = nlohmann::json::parse(line, nullptr, false);
        if (parsed.is_discarded()) {
            throw VakgError(ErrorCode::ParseError, path + ": malformed JSON", line_no);
        }
        try {
            events.push_back(event_from_json(parsed));
        } catch (const VakgError& err) {
            throw VakgError(err.code(), path + ": " + err.what(), line_no);
        }
    }
    return events;
}

inline std::vector<EventRecord> parse_log_text(const std::string& text) {
    std::vector<EventRecord> events;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto parsed = nlohmann::json::parse(line, nullptr, false);
        if (parsed.is_discarded()) {
            throw VakgError(ErrorCode::ParseError, "malformed JSON", line_no);
        }
        try {
            events.push_back(event_from_json(parsed));
        } catch (const VakgError& err) {
            throw VakgError(err.code(), err.what(), line_no);
        }
    }
    return events;
}

// ---------------------------------------------------------------------------
// graph export
// ---------------------------------------------------------------------------

enum class GraphFormat : std::uint8_t { GraphML, Dot, EdgeListCsv };

inline std::optional<GraphFormat> graph_format_from_name(std::string_view name) {
    if (name == "graphml") return GraphFormat::GraphML;
    if (name == "dot") return GraphFormat::Dot;
    if (name == "csv") return GraphFormat::EdgeListCsv;
    return std::nullopt;
}

namespace detail {

inline std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (const char ch : text) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out.push_back(ch);
        }
    }
    return out;
}

inline std::string dot_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (const char ch : text) {
        if (ch == '"' || ch == '\\') out.push_back('\\');
        out.push_back(ch);
    }
    return out;
}

inline std::string csv_field(std::string_view text) {
    const bool needs_quotes = text.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(text);
    std::string out = "\"";
    for (const char ch : text) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out += "\"";
    return out;
}

inline std::string ops_letters(const std::set<OperationKind>& ops) {
    std::string out;
    for (const OperationKind op : ops) out.push_back(op_letter(op));
    return out;
}

inline std::string export_graphml(const VakgGraph& graph) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        << "  <key id=\"lane\" for=\"node\" attr.name=\"lane\" attr.type=\"string\"/>\n"
        << "  <key id=\"payload\" for=\"node\" attr.name=\"payload\" attr.type=\"string\"/>\n"
        << "  <key id=\"session\" for=\"all\" attr.name=\"session\" attr.type=\"string\"/>\n"
        << "  <key id=\"user\" for=\"node\" attr.name=\"user\" attr.type=\"string\"/>\n"
        << "  <key id=\"step\" for=\"node\" attr.name=\"step\" attr.type=\"long\"/>\n"
        << "  <key id=\"ops\" for=\"node\" attr.name=\"ops\" attr.type=\"string\"/>\n"
        << "  <key id=\"wall_clock\" for=\"node\" attr.name=\"wall_clock\" attr.type=\"string\"/>\n"
        << "  <key id=\"kind\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n"
        << "  <graph id=\"vakg\" edgedefault=\"directed\">\n";
    for (const std::string& id : graph.state_order()) {
        const StateNode& node = *graph.find_state(id);
        out << "    <node id=\"" << xml_escape(id) << "\">"
            << "<data key=\"lane\">" << lane_name(node.lane) << "</data>"
            << "<data key=\"payload\">" << xml_escape(canonical_payload(node.payload))
            << "</data></node>\n";
    }
    for (const std::string& id : graph.update_order()) {
        const UpdateNode& node = *graph.find_update(id);
        out << "    <node id=\"" << xml_escape(id) << "\">"
            << "<data key=\"lane\">" << lane_name(node.lane) << "</data>"
            << "<data key=\"session\">" << xml_escape(node.session_id) << "</data>"
            << "<data key=\"user\">" << xml_escape(node.user_id) << "</data>"
            << "<data key=\"step\">" << node.step << "</data>"
            << "<data key=\"ops\">" << ops_letters(node.ops) << "</data>";
        if (node.wall_clock) {
            out << "<data key=\"wall_clock\">" << xml_escape(*node.wall_clock) << "</data>";
        }
        out << "<data key=\"payload\">" << xml_escape(canonical_payload(node.payload))
            << "</data></node>\n";
    }
    for (const Edge& edge : graph.edges()) {
        out << "    <edge source=\"" << xml_escape(edge.from) << "\" target=\""
            << xml_escape(edge.to) << "\">"
            << "<data key=\"kind\">" << edge_kind_name(edge.kind) << "</data>";
        if (!edge.session_id.empty()) {
            out << "<data key=\"session\">" << xml_escape(edge.session_id) << "</data>";
        }
        out << "</edge>\n";
    }
    out << "  </graph>\n</graphml>\n";
    return out.str();
}

inline std::string export_dot(const VakgGraph& graph) {
    struct Cluster {
        Lane lane;
        const char* name;
    };
    static constexpr Cluster kClusters[] = {
        {Lane::ComputerState, "computer_states"},
        {Lane::HumanState, "human_states"},
        {Lane::ComputerUpdate, "computer_updates"},
        {Lane::HumanUpdate, "human_updates"},
    };
    std::ostringstream out;
    out << "digraph vakg {\n  rankdir=LR;\n";
    for (const Cluster& cluster : kClusters) {
        out << "  subgraph cluster_" << cluster.name << " {\n"
            << "    label=\"" << cluster.name << "\";\n";
        if (is_state_lane(cluster.lane)) {
            for (const std::string& id : graph.state_order()) {
                const StateNode& node = *graph.find_state(id);
                if (node.lane != cluster.lane) continue;
                out << "    \"" << dot_escape(id) << "\" [shape=box,label=\""
                    << dot_escape(id.substr(0, 8)) << "\"];\n";
            }
        } else {
            for (const std::string& id : graph.update_order()) {
                const UpdateNode& node = *graph.find_update(id);
                if (node.lane != cluster.lane) continue;
                out << "    \"" << dot_escape(id) << "\" [shape=ellipse,label=\""
                    << dot_escape(node.session_id + "#" + std::to_string(node.step) + " " +
                                  ops_letters(node.ops))
                    << "\"];\n";
            }
        }
        out << "  }\n";
    }
    for (const Edge& edge : graph.edges()) {
        out << "  \"" << dot_escape(edge.from) << "\" -> \"" << dot_escape(edge.to)
            << "\" [label=\"" << edge_kind_name(edge.kind) << "\"";
        if (edge.kind == EdgeKind::Sync) out << ",style=dashed,dir=none";
        out << "];\n";
    }
    out << "}\n";
    return out.str();
}

inline std::string export_csv(const VakgGraph& graph) {
    std::ostringstream out;
    out << "source,target,kind,session\n";
    for (const Edge& edge : graph.edges()) {
        out << csv_field(edge.from) << ',' << csv_field(edge.to) << ','
            << edge_kind_name(edge.kind) << ',' << csv_field(edge.session_id) << '\n';
    }
    return out.str();
}

}  // namespace detail

inline std::string export_graph(const VakgGraph& graph, GraphFormat format) {
    const ValidationReport report = graph.validate();
    if (!report.ok()) {
        throw VakgError(ErrorCode::InvalidGraph,
                        "refusing to export a graph with " +
                            std::to_string(report.violations.size()) + " violations (first: " +
                            report.violations.front().rule + " on " +
                            report.violations.front().subject + ")");
    }
    switch (format) {
    case GraphFormat::GraphML: return detail::export_graphml(graph);
    case GraphFormat::Dot: return detail::export_dot(graph);
    case GraphFormat::EdgeListCsv: return detail::export_csv(graph);
    }
    throw VakgError(ErrorCode::UnsupportedFormat, "unknown export format");
}

// ---------------------------------------------------------------------------
// graph import
// ---------------------------------------------------------------------------

namespace detail {

inline const boost::property_tree::ptree* find_data(const boost::property_tree::ptree& element,
                                                    const std::string& key) {
    for (const auto& [name, child] : element) {
        if (name != "data") continue;
        if (child.get<std::string>("<xmlattr>.key", "") == key) {
            return &child;
        }
    }
    return nullptr;
}

inline std::string require_data(const boost::property_tree::ptree& element,
                                const std::string& key, const std::string& subject) {
    const auto* data = find_data(element, key);
    if (data == nullptr) {
        throw VakgError(ErrorCode::SchemaMismatch, subject + ": missing data key " + key);
    }
    return data->get_value<std::string>();
}

inline PropertyMap parse_payload_attr(const std::string& text, const std::string& subject) {
    const auto parsed = nlohmann::json::parse(text, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
        throw VakgError(ErrorCode::SchemaMismatch, subject + ": payload is not a JSON object");
    }
    return parsed;
}

}  // namespace detail

// Accepts documents produced by export_graph(GraphML). Session cursors
// are reconstructed from the chains; imported sessions are closed, so an
// imported graph serves analytics and re-export, not further ingestion.
inline VakgGraph import_graphml(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree doc;
    try {
        std::istringstream in(text);
        pt::read_xml(in, doc);
    } catch (const pt::xml_parser_error& err) {
        throw VakgError(ErrorCode::SchemaMismatch, std::string("XML parse: ") + err.what());
    }

    const auto graph_tree = doc.get_child_optional("graphml.graph");
    if (!graph_tree) {
        throw VakgError(ErrorCode::SchemaMismatch, "no <graphml><graph> element");
    }

    VakgGraph graph;
    for (const auto& [name, element] : *graph_tree) {
        if (name == "node") {
            const std::string id = element.get<std::string>("<xmlattr>.id", "");
            if (id.empty()) {
                throw VakgError(ErrorCode::SchemaMismatch, "node without id");
            }
            const std::string lane_text = detail::require_data(element, "lane", id);
            const auto lane = lane_from_name(lane_text);
            if (!lane) {
                throw VakgError(ErrorCode::SchemaMismatch, id + ": unknown lane " + lane_text);
            }
            const PropertyMap payload =
                detail::parse_payload_attr(detail::require_data(element, "payload", id), id);
            if (is_state_lane(*lane)) {
                graph.add_raw_state({id, *lane, payload});
            } else {
                UpdateNode node;
                node.id = id;
                node.lane = *lane;
                node.session_id = detail::require_data(element, "session", id);
                node.user_id = detail::require_data(element, "user", id);
                try {
                    node.step = std::stoull(detail::require_data(element, "step", id));
                } catch (const std::exception&) {
                    throw VakgError(ErrorCode::SchemaMismatch, id + ": bad step");
                }
                for (const char letter : detail::require_data(element, "ops", id)) {
                    const auto op = op_from_letter(letter);
                    if (!op) {
                        throw VakgError(ErrorCode::SchemaMismatch,
                                        id + ": unknown op " + std::string(1, letter));
                    }
                    node.ops.insert(*op);
                }
                if (const auto* wall = detail::find_data(element, "wall_clock")) {
                    node.wall_clock = wall->get_value<std::string>();
                }
                node.payload = payload;
                graph.add_raw_update(std::move(node));
            }
        } else if (name == "edge") {
            Edge edge;
            edge.from = element.get<std::string>("<xmlattr>.source", "");
            edge.to = element.get<std::string>("<xmlattr>.target", "");
            const std::string kind_text = detail::require_data(element, "kind", "edge");
            const auto kind = edge_kind_from_name(kind_text);
            if (!kind) {
                throw VakgError(ErrorCode::SchemaMismatch, "unknown edge kind " + kind_text);
            }
            edge.kind = *kind;
            if (const auto* session = detail::find_data(element, "session")) {
                edge.session_id = session->get_value<std::string>();
            }
            if (!graph.has_node(edge.from) || !graph.has_node(edge.to)) {
                throw VakgError(ErrorCode::SchemaMismatch,
                                "edge references unknown node " + edge.from + " -> " + edge.to);
            }
            graph.add_raw_edge(std::move(edge));
        }
    }

    // Rebuild per-session cursors from the chains. A side that recorded
    // no updates never moved, so any Sync edge reveals its one state.
    std::set<std::string> session_ids;
    for (const auto& [id, node] : graph.updates()) {
        session_ids.insert(node.session_id);
    }
    for (const std::string& session_id : session_ids) {
        SessionCursor cursor;
        cursor.closed = true;
        for (const Side side : {Side::Computer, Side::Human}) {
            const auto& chain = graph.chain(session_id, side);
            if (!chain.empty()) {
                cursor.user_id = graph.find_update(chain.front())->user_id;
                if (const std::string* source = graph.applies_to_source(chain.front())) {
                    cursor.initial_state[side_index(side)] = *source;
                }
                if (const std::string* target = graph.produces_target(chain.back())) {
                    cursor.current_state[side_index(side)] = *target;
                }
                cursor.next_step = std::max(
                    cursor.next_step, graph.find_update(chain.back())->step + 1);
            }
        }
        for (const Side side : {Side::Computer, Side::Human}) {
            if (!cursor.current_state[side_index(side)].empty()) continue;
            for (const Edge& edge : graph.edges()) {
                if (edge.kind != EdgeKind::Sync || edge.session_id != session_id) continue;
                const std::string& candidate = side == Side::Human ? edge.from : edge.to;
                const StateNode* state = graph.find_state(candidate);
                if (state != nullptr) {
                    cursor.initial_state[side_index(side)] = candidate;
                    cursor.current_state[side_index(side)] = candidate;
                    break;
                }
            }
        }
        graph.set_session_cursor(session_id, std::move(cursor));
    }
    return graph;
}

}  // namespace vakg
