// vakg: record visual-analytics workflows as a four-lane temporal
// knowledge graph and query it.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>

#include <vakg/service.hpp>
#include <vakg/vakg.hpp>

namespace {

vakg::VakgGraph load_graph(const std::string& log_path) {
    return vakg::replay(vakg::load_log(log_path));
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        if (text.empty() || text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw vakg::VakgError(vakg::ErrorCode::IoError, "cannot write " + out_path);
    }
    out << text;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

vakg::Projection parse_lane_projection(const std::string& lane) {
    vakg::Projection projection;
    if (lane == "all") return projection;
    if (lane == "computer_state") {
        projection.lanes = {vakg::Lane::ComputerState};
        projection.contract_updates = true;
    } else if (lane == "human_state") {
        projection.lanes = {vakg::Lane::HumanState};
        projection.contract_updates = true;
    } else if (lane == "computer_update") {
        projection.lanes = {vakg::Lane::ComputerUpdate};
    } else if (lane == "human_update") {
        projection.lanes = {vakg::Lane::HumanUpdate};
    } else {
        throw vakg::VakgError(vakg::ErrorCode::ParseError, "unknown lane " + lane);
    }
    return projection;
}

std::optional<std::set<std::string>> parse_session_list(const std::string& csv) {
    if (csv.empty()) return std::nullopt;
    std::set<std::string> sessions;
    std::istringstream in(csv);
    std::string token;
    while (std::getline(in, token, ',')) {
        if (!token.empty()) sessions.insert(token);
    }
    return sessions;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"four-lane temporal knowledge graph engine for VA workflow provenance"};
    app.require_subcommand(1);

    // --- ingest ---
    std::string ingest_log;
    auto* ingest = app.add_subcommand("ingest", "replay an event log and print graph counts");
    ingest->add_option("log", ingest_log, "line-delimited JSON event log")->required();

    // --- validate ---
    std::string validate_log;
    auto* validate = app.add_subcommand("validate", "replay a log and check every invariant");
    validate->add_option("log", validate_log, "line-delimited JSON event log")->required();

    // --- export ---
    std::string export_log, export_format = "graphml", export_out;
    auto* export_cmd = app.add_subcommand("export", "replay a log and export the graph");
    export_cmd->add_option("log", export_log, "line-delimited JSON event log")->required();
    export_cmd->add_option("--format", export_format, "graphml | dot | csv")
        ->check(CLI::IsMember({"graphml", "dot", "csv"}));
    export_cmd->add_option("--out", export_out, "output file (default stdout)");

    // --- analyze ---
    auto* analyze = app.add_subcommand("analyze", "run a query over a replayed log");
    analyze->require_subcommand(1);

    std::string pr_log, pr_lane = "computer_state";
    double pr_damping = 0.85, pr_tolerance = 1e-9;
    std::size_t pr_max_iter = 100;
    auto* pr = analyze->add_subcommand("pagerank", "score states by visit structure");
    pr->add_option("log", pr_log)->required();
    pr->add_option("--lane", pr_lane, "computer_state | human_state | computer_update | human_update | all");
    pr->add_option("--damping", pr_damping);
    pr->add_option("--tolerance", pr_tolerance);
    pr->add_option("--max-iter", pr_max_iter);

    std::string sp_log, sp_from, sp_to, sp_weight = "hop", sp_lane = "all";
    auto* sp = analyze->add_subcommand("shortest-path", "minimum path between two nodes");
    sp->add_option("log", sp_log)->required();
    sp->add_option("--from", sp_from)->required();
    sp->add_option("--to", sp_to)->required();
    sp->add_option("--weight", sp_weight, "hop | wallclock")
        ->check(CLI::IsMember({"hop", "wallclock"}));
    sp->add_option("--lane", sp_lane);

    std::string motifs_log;
    auto* motifs = analyze->add_subcommand("motifs", "divergence/convergence/backtrack/loop hits");
    motifs->add_option("log", motifs_log)->required();

    std::string imp_log, imp_goal, imp_sessions;
    auto* imp = analyze->add_subcommand("importance", "computer-state criticality for a goal");
    imp->add_option("log", imp_log)->required();
    imp->add_option("--goal", imp_goal, "human-side node id")->required();
    imp->add_option("--sessions", imp_sessions, "comma-separated cohort (default: all)");

    std::string stats_log;
    auto* stats = analyze->add_subcommand("stats", "per-session lane lengths and revisits");
    stats->add_option("log", stats_log)->required();

    // --- simulate ---
    vakg::ScenarioConfig scenario;
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic multi-user log");
    simulate->add_option("--seed", scenario.seed)->required();
    simulate->add_option("--out", sim_out, "event log to write; ground truth lands at <out>.truth.json")
        ->required();
    simulate->add_option("--users", scenario.users);
    simulate->add_option("--min-steps", scenario.min_steps);
    simulate->add_option("--max-steps", scenario.max_steps);
    simulate->add_option("--alphabet", scenario.state_alphabet);
    simulate->add_option("--divergence", scenario.inject.divergence);
    simulate->add_option("--convergence", scenario.inject.convergence);
    simulate->add_option("--backtrack", scenario.inject.backtrack);
    simulate->add_option("--loop", scenario.inject.loop);
    simulate->add_flag("--no-wall-clock", [&scenario](std::int64_t) { scenario.emit_wall_clock = false; },
                       "omit wall_clock stamps");

    // --- serve ---
    vakg::ServiceConfig service_config;
    std::string listen_spec;
    auto* serve = app.add_subcommand("serve", "run the HTTP ingestion/query service");
    serve->add_option("--listen", listen_spec, "host:port")->envname("VAKG_LISTEN");
    serve->add_option("--data-dir", service_config.data_dir, "event log directory")
        ->envname("VAKG_DATA_DIR");
    serve->add_flag("--fsync", service_config.fsync_each, "fsync after every accepted event");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ingest) {
            const vakg::VakgGraph graph = load_graph(ingest_log);
            print_json({{"states", graph.state_count()},
                        {"updates", graph.update_count()},
                        {"edges", graph.edge_count()},
                        {"sessions", graph.sessions().size()}});
        } else if (*validate) {
            const vakg::VakgGraph graph = load_graph(validate_log);
            const vakg::ValidationReport report = graph.validate();
            nlohmann::json violations = nlohmann::json::array();
            for (const vakg::Violation& v : report.violations) {
                violations.push_back({{"rule", v.rule}, {"subject", v.subject}, {"message", v.message}});
            }
            print_json({{"valid", report.ok()}, {"violations", violations}});
            if (!report.ok()) return 1;
        } else if (*export_cmd) {
            const vakg::VakgGraph graph = load_graph(export_log);
            const auto format = vakg::graph_format_from_name(export_format);
            write_output(vakg::export_graph(graph, *format), export_out);
        } else if (*pr) {
            const vakg::VakgGraph graph = load_graph(pr_log);
            const vakg::GraphView view = vakg::project(graph, parse_lane_projection(pr_lane));
            print_json(vakg::pagerank_to_json(
                vakg::pagerank(view, {pr_damping, pr_tolerance, pr_max_iter})));
        } else if (*sp) {
            const vakg::VakgGraph graph = load_graph(sp_log);
            const vakg::GraphView view = vakg::project(graph, parse_lane_projection(sp_lane));
            const auto scheme = sp_weight == "hop" ? vakg::WeightScheme::HopCount
                                                   : vakg::WeightScheme::WallClock;
            print_json(vakg::path_to_json(vakg::shortest_path(view, sp_from, sp_to, scheme)));
        } else if (*motifs) {
            const vakg::VakgGraph graph = load_graph(motifs_log);
            print_json(vakg::motif_hits_to_json(vakg::detect_motifs(graph)));
        } else if (*imp) {
            const vakg::VakgGraph graph = load_graph(imp_log);
            print_json(vakg::importance_to_json(
                vakg::state_importance(graph, imp_goal, parse_session_list(imp_sessions))));
        } else if (*stats) {
            const vakg::VakgGraph graph = load_graph(stats_log);
            print_json(vakg::session_stats_to_json(vakg::session_stats(graph)));
        } else if (*simulate) {
            const vakg::SimulationOutput output = vakg::generate(scenario);
            std::ostringstream log_text;
            for (const vakg::EventRecord& event : output.events) {
                log_text << vakg::event_to_json(event).dump() << '\n';
            }
            write_output(log_text.str(), sim_out);
            write_output(vakg::ground_truth_to_json(output.truth).dump(2) + "\n",
                         sim_out + ".truth.json");
            std::cerr << "wrote " << output.events.size() << " events to " << sim_out << " (+ "
                      << sim_out << ".truth.json)\n";
        } else if (*serve) {
            if (!listen_spec.empty()) {
                const auto colon = listen_spec.rfind(':');
                if (colon == std::string::npos) {
                    throw vakg::VakgError(vakg::ErrorCode::ParseError,
                                          "--listen expects host:port");
                }
                service_config.listen_host = listen_spec.substr(0, colon);
                service_config.listen_port = std::stoi(listen_spec.substr(colon + 1));
            }
            vakg::VakgService service(service_config);
            if (!service.bind()) {
                throw vakg::VakgError(vakg::ErrorCode::IoError,
                                      "cannot bind " + service_config.listen_host + ":" +
                                          std::to_string(service_config.listen_port));
            }
            std::cerr << "vakg serving on " << service_config.listen_host << ":" << service.port()
                      << ", data dir " << service_config.data_dir << "\n";
            service.serve_bound();
        }
    } catch (const vakg::VakgError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
