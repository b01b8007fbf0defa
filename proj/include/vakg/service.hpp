#pragma once

// HTTP facade: ingestion endpoints append to the event log before the
// 2xx goes out, analytics endpoints read a shared snapshot. On startup
// the existing log is replayed, so anything acknowledged survives a
// restart. Writes serialize on one lock (the graph is single-writer by
// contract); reads run concurrently against the same snapshot.

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <httplib.h>

#include <vakg/analytics.hpp>
#include <vakg/ingest.hpp>
#include <vakg/storage.hpp>

namespace vakg {

struct ServiceConfig {
    std::string listen_host = "127.0.0.1";
    int listen_port = 8390;  // 0 = pick a free port
    std::string data_dir = "./vakg-data";
    bool fsync_each = false;
    std::size_t max_body_bytes = 8u << 20;
};

namespace detail {

inline int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownNode:
    case ErrorCode::NoPath:
    case ErrorCode::UnreachableGoal:
        return 404;
    case ErrorCode::DuplicateSessionStart:
    case ErrorCode::OutOfOrderSeq:
    case ErrorCode::SessionClosed:
        return 409;
    case ErrorCode::IoError:
    case ErrorCode::InvalidGraph:
        return 500;
    default:
        return 400;
    }
}

inline void write_error(httplib::Response& res, const VakgError& err) {
    nlohmann::json body{{"code", std::string(error_code_name(err.code()))},
                        {"message", err.what()}};
    if (err.position()) {
        body["position"] = *err.position();
    }
    res.status = http_status(err.code());
    res.set_content(body.dump(), "application/json");
}

}  // namespace detail

class VakgService {
public:
    explicit VakgService(ServiceConfig config) : config_(std::move(config)) {
        namespace fs = std::filesystem;
        fs::create_directories(config_.data_dir);
        const std::string probe = (fs::path(config_.data_dir) / ".writable").string();
        {
            std::ofstream out(probe);
            if (!out) {
                throw VakgError(ErrorCode::IoError,
                                "data directory not writable: " + config_.data_dir);
            }
        }
        fs::remove(probe);

        if (fs::exists(log_path())) {
            for (const EventRecord& event : load_log(log_path())) {
                builder_.ingest_event(event);
            }
        }
        log_ = std::make_unique<EventLog>(EventLog::open_for_append(log_path(), config_.fsync_each));
        install_routes();
        server_.set_payload_max_length(config_.max_body_bytes);
    }

    std::string log_path() const {
        return (std::filesystem::path(config_.data_dir) / "events.jsonl").string();
    }

    // Binds, then serves until stop(). Returns false if the bind failed.
    bool serve() {
        if (!bind()) return false;
        return server_.listen_after_bind();
    }

    // Bind separately so tests can learn the port before serving.
    bool bind() {
        if (bound_port_ != 0) return true;
        if (config_.listen_port == 0) {
            bound_port_ = server_.bind_to_any_port(config_.listen_host);
            return bound_port_ > 0;
        }
        if (!server_.bind_to_port(config_.listen_host, config_.listen_port)) {
            return false;
        }
        bound_port_ = config_.listen_port;
        return true;
    }

    bool serve_bound() { return server_.listen_after_bind(); }
    void wait_until_ready() { server_.wait_until_ready(); }
    void stop() { server_.stop(); }
    int port() const { return bound_port_; }
    const ServiceConfig& config() const { return config_; }

private:
    void install_routes() {
        server_.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&]() -> nlohmann::json {
                nlohmann::json body = parse_body(req);
                body["kind"] = "SessionStart";
                if (!body.contains("seq")) body["seq"] = 0;
                const EventRecord event = event_from_json(body);
                const StepResult result = ingest_durably(event);
                res.status = 201;
                nlohmann::json out = step_result_to_json(result);
                out["session_id"] = event.session_id;
                return out;
            });
        });

        server_.Post(R"(/v1/sessions/([^/]+)/events)",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         handle(res, [&]() -> nlohmann::json {
                             nlohmann::json body = parse_body(req);
                             const std::string& session_id = req.matches[1];
                             if (!body.contains("session_id")) {
                                 body["session_id"] = session_id;
                             } else if (body["session_id"] != session_id) {
                                 throw VakgError(ErrorCode::ParseError,
                                                 "session_id in body does not match path");
                             }
                             const EventRecord event = event_from_json(body);
                             if (event.kind == EventKind::SessionStart) {
                                 throw VakgError(ErrorCode::ParseError,
                                                 "SessionStart goes to POST /v1/sessions");
                             }
                             return step_result_to_json(ingest_durably(event));
                         });
                     });

        server_.Get("/v1/graph/export", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                const std::string format_name = req.get_param_value("format").empty()
                                                    ? "graphml"
                                                    : req.get_param_value("format");
                const auto format = graph_format_from_name(format_name);
                if (!format) {
                    throw VakgError(ErrorCode::UnsupportedFormat, format_name);
                }
                std::shared_lock lock(mutex_);
                const std::string text = export_graph(builder_.graph(), *format);
                lock.unlock();
                const char* content_type = *format == GraphFormat::GraphML ? "application/xml"
                                           : *format == GraphFormat::Dot   ? "text/vnd.graphviz"
                                                                           : "text/csv";
                res.set_content(text, content_type);
            } catch (const VakgError& err) {
                detail::write_error(res, err);
            }
        });

        server_.Get("/v1/graph/validate", [this](const httplib::Request&, httplib::Response& res) {
            handle(res, [&]() -> nlohmann::json {
                std::shared_lock lock(mutex_);
                const ValidationReport report = builder_.graph().validate();
                nlohmann::json violations = nlohmann::json::array();
                for (const Violation& v : report.violations) {
                    violations.push_back(
                        {{"rule", v.rule}, {"subject", v.subject}, {"message", v.message}});
                }
                return {{"valid", report.ok()}, {"violations", violations}};
            });
        });

        server_.Get("/v1/analytics/pagerank",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(res, [&]() -> nlohmann::json {
                            PageRankOptions options;
                            if (req.has_param("damping")) {
                                options.damping = std::stod(req.get_param_value("damping"));
                            }
                            if (req.has_param("tolerance")) {
                                options.tolerance = std::stod(req.get_param_value("tolerance"));
                            }
                            if (req.has_param("max_iter")) {
                                options.max_iterations =
                                    std::stoul(req.get_param_value("max_iter"));
                            }
                            const std::string lane = req.has_param("lane")
                                                         ? req.get_param_value("lane")
                                                         : "computer_state";
                            std::shared_lock lock(mutex_);
                            const GraphView view =
                                project(builder_.graph(), lane_projection(lane));
                            return pagerank_to_json(pagerank(view, options));
                        });
                    });

        server_.Get("/v1/analytics/shortest-path",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(res, [&]() -> nlohmann::json {
                            const std::string from = req.get_param_value("from");
                            const std::string to = req.get_param_value("to");
                            if (from.empty() || to.empty()) {
                                throw VakgError(ErrorCode::ParseError,
                                                "from and to are required");
                            }
                            const std::string weight = req.has_param("weight")
                                                           ? req.get_param_value("weight")
                                                           : "hop";
                            WeightScheme scheme;
                            if (weight == "hop") {
                                scheme = WeightScheme::HopCount;
                            } else if (weight == "wallclock") {
                                scheme = WeightScheme::WallClock;
                            } else {
                                throw VakgError(ErrorCode::ParseError,
                                                "weight must be hop or wallclock");
                            }
                            const std::string lane =
                                req.has_param("lane") ? req.get_param_value("lane") : "all";
                            std::shared_lock lock(mutex_);
                            const GraphView view =
                                project(builder_.graph(), lane_projection(lane));
                            return path_to_json(shortest_path(view, from, to, scheme));
                        });
                    });

        server_.Get("/v1/analytics/motifs",
                    [this](const httplib::Request&, httplib::Response& res) {
                        handle(res, [&]() -> nlohmann::json {
                            std::shared_lock lock(mutex_);
                            return motif_hits_to_json(detect_motifs(builder_.graph()));
                        });
                    });

        server_.Get("/v1/analytics/importance",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(res, [&]() -> nlohmann::json {
                            const std::string goal = req.get_param_value("goal");
                            if (goal.empty()) {
                                throw VakgError(ErrorCode::ParseError, "goal is required");
                            }
                            std::optional<std::set<std::string>> cohort;
                            if (req.has_param("sessions")) {
                                cohort.emplace();
                                std::istringstream in(req.get_param_value("sessions"));
                                std::string token;
                                while (std::getline(in, token, ',')) {
                                    if (!token.empty()) cohort->insert(token);
                                }
                            }
                            std::shared_lock lock(mutex_);
                            return importance_to_json(
                                state_importance(builder_.graph(), goal, cohort));
                        });
                    });

        server_.Get("/v1/analytics/stats",
                    [this](const httplib::Request&, httplib::Response& res) {
                        handle(res, [&]() -> nlohmann::json {
                            std::shared_lock lock(mutex_);
                            return session_stats_to_json(session_stats(builder_.graph()));
                        });
                    });
    }

    template <typename Fn>
    void handle(httplib::Response& res, Fn&& fn) {
        try {
            const nlohmann::json body = fn();
            if (res.status == -1 || res.status == 200) res.status = 200;
            res.set_content(body.dump(), "application/json");
        } catch (const VakgError& err) {
            detail::write_error(res, err);
        } catch (const std::exception& err) {
            detail::write_error(res, VakgError(ErrorCode::ParseError, err.what()));
        }
    }

    static nlohmann::json parse_body(const httplib::Request& req) {
        auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
            throw VakgError(ErrorCode::ParseError, "request body must be a JSON object");
        }
        return body;
    }

    // Accepted events hit the log before the response; the graph is the
    // cache, the log is the truth.
    StepResult ingest_durably(const EventRecord& event) {
        std::unique_lock lock(mutex_);
        const StepResult result = builder_.ingest_event(event);
        log_->append_event(event);
        return result;
    }

    static Projection lane_projection(const std::string& lane) {
        Projection projection;
        if (lane == "all") {
            return projection;
        }
        if (lane == "computer_state") {
            projection.lanes = {Lane::ComputerState};
            projection.contract_updates = true;
        } else if (lane == "human_state") {
            projection.lanes = {Lane::HumanState};
            projection.contract_updates = true;
        } else if (lane == "computer_update") {
            projection.lanes = {Lane::ComputerUpdate};
        } else if (lane == "human_update") {
            projection.lanes = {Lane::HumanUpdate};
        } else {
            throw VakgError(ErrorCode::ParseError, "unknown lane " + lane);
        }
        return projection;
    }

    ServiceConfig config_;
    httplib::Server server_;
    int bound_port_ = 0;
    mutable std::shared_mutex mutex_;
    GraphBuilder builder_;
    std::unique_ptr<EventLog> log_;
};

}  // namespace vakg
