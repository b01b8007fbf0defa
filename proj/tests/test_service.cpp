#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <thread>

#include <vakg/service.hpp>
#include <vakg/simulator.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace vakg;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() /
               ("vakg-svc-" + std::to_string(::getpid()) + "-" + name);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

// Service running on an ephemeral port for the lifetime of the object.
struct RunningService {
    VakgService service;
    std::thread thread;

    explicit RunningService(const std::string& data_dir)
        : service(ServiceConfig{"127.0.0.1", 0, data_dir, false, 8u << 20}) {
        REQUIRE(service.bind());
        thread = std::thread([this] { service.serve_bound(); });
        service.wait_until_ready();
    }

    ~RunningService() {
        service.stop();
        thread.join();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", service.port());
        c.set_connection_timeout(5);
        return c;
    }
};

nlohmann::json body_of(const httplib::Result& result) {
    REQUIRE(result);
    return nlohmann::json::parse(result->body);
}

}  // namespace

TEST_CASE("session lifecycle over HTTP") {
    TempDir dir("lifecycle");
    RunningService running(dir.path.string());
    auto client = running.client();

    const nlohmann::json start{{"session_id", "web-1"},
                               {"user_id", "u"},
                               {"initial_computer_state", {{"view", "v0"}}},
                               {"initial_human_state", {{"insight", "k0"}}}};
    auto created = client.Post("/v1/sessions", start.dump(), "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    CHECK(body_of(created)["session_id"] == "web-1");

    const nlohmann::json step{
        {"kind", "Step"},
        {"seq", 1},
        {"computer_part",
         {{"ops", {"V"}}, {"update_payload", {{"a", 1}}}, {"new_state_payload", {{"view", "v1"}}}}}};
    auto stepped = client.Post("/v1/sessions/web-1/events", step.dump(), "application/json");
    REQUIRE(stepped);
    CHECK(stepped->status == 200);
    const auto result = body_of(stepped);
    CHECK(result["step"] == 0);
    CHECK(result["sync_edges_added"] == 1);
    CHECK(result["computer"]["state_created"] == true);

    // a seq gap is a conflict with a machine-readable code
    nlohmann::json gap = step;
    gap["seq"] = 9;
    auto conflicted = client.Post("/v1/sessions/web-1/events", gap.dump(), "application/json");
    REQUIRE(conflicted);
    CHECK(conflicted->status == 409);
    CHECK(body_of(conflicted)["code"] == "OutOfOrderSeq");

    // illegal ops for the lane
    nlohmann::json bad = step;
    bad["seq"] = 2;
    bad["computer_part"]["ops"] = {"E"};
    auto rejected = client.Post("/v1/sessions/web-1/events", bad.dump(), "application/json");
    REQUIRE(rejected);
    CHECK(rejected->status == 400);
    CHECK(body_of(rejected)["code"] == "IllegalOps");

    // unknown session
    auto missing = client.Post("/v1/sessions/nope/events",
                               nlohmann::json{{"kind", "SessionEnd"}, {"seq", 1}}.dump(),
                               "application/json");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    // duplicate start
    auto duplicate = client.Post("/v1/sessions", start.dump(), "application/json");
    REQUIRE(duplicate);
    CHECK(duplicate->status == 409);
    CHECK(body_of(duplicate)["code"] == "DuplicateSessionStart");

    auto ended = client.Post("/v1/sessions/web-1/events",
                             nlohmann::json{{"kind", "SessionEnd"}, {"seq", 2}}.dump(),
                             "application/json");
    REQUIRE(ended);
    CHECK(ended->status == 200);
}

TEST_CASE("analytics endpoints serve the ingested graph") {
    TempDir dir("analytics");

    // preload by POSTing a simulated workload through the API
    ScenarioConfig config;
    config.seed = 21;
    config.users = 3;
    config.state_alphabet = 4;
    const auto events = generate(config).events;
    {
        RunningService running(dir.path.string());
        auto client = running.client();
        for (const EventRecord& event : events) {
            nlohmann::json body = event_to_json(event);
            httplib::Result result =
                event.kind == EventKind::SessionStart
                    ? client.Post("/v1/sessions", body.dump(), "application/json")
                    : client.Post("/v1/sessions/" + event.session_id + "/events", body.dump(),
                                  "application/json");
            REQUIRE(result);
            REQUIRE((result->status == 200 || result->status == 201));
        }

        auto pagerank_result = client.Get("/v1/analytics/pagerank?lane=computer_state");
        REQUIRE(pagerank_result);
        REQUIRE(pagerank_result->status == 200);
        const auto scores = body_of(pagerank_result)["scores"];
        double sum = 0.0;
        for (const auto& [id, score] : scores.items()) sum += score.get<double>();
        CHECK(sum == Catch::Approx(1.0).margin(1e-9));

        // scores match a dense power-iteration reference computed from the
        // same contracted state graph
        {
            const VakgGraph graph = replay(events);
            Projection projection;
            projection.lanes = {Lane::ComputerState};
            projection.contract_updates = true;
            const GraphView view = project(graph, projection);
            std::vector<std::pair<int, int>> reference_edges;
            for (std::size_t from = 0; from < view.node_count(); ++from) {
                for (const auto& edge : view.out_edges(static_cast<std::uint32_t>(from))) {
                    reference_edges.emplace_back(static_cast<int>(from),
                                                 static_cast<int>(edge.to));
                }
            }
            const auto reference =
                oracles::pagerank_reference(view.node_count(), reference_edges, 0.85);
            REQUIRE(scores.size() == view.node_count());
            for (std::size_t i = 0; i < view.node_count(); ++i) {
                CHECK(scores.at(view.node_ids()[i]).get<double>() ==
                      Catch::Approx(reference[i]).margin(1e-8));
            }
        }

        auto motif_result = client.Get("/v1/analytics/motifs");
        REQUIRE(motif_result);
        CHECK(motif_result->status == 200);
        const auto detected = detect_motifs(replay(events));
        CHECK(body_of(motif_result)["hits"].size() == detected.size());

        auto stats_result = client.Get("/v1/analytics/stats");
        REQUIRE(stats_result);
        CHECK(body_of(stats_result)["sessions"].size() == 3);

        auto validate_result = client.Get("/v1/graph/validate");
        REQUIRE(validate_result);
        CHECK(body_of(validate_result)["valid"] == true);

        auto exported = client.Get("/v1/graph/export?format=graphml");
        REQUIRE(exported);
        CHECK(exported->status == 200);
        const VakgGraph round_trip = import_graphml(exported->body);
        CHECK(round_trip.structural_digest() == replay(events).structural_digest());

        auto bad_format = client.Get("/v1/graph/export?format=xlsx");
        REQUIRE(bad_format);
        CHECK(bad_format->status == 400);

        auto no_path = client.Get("/v1/analytics/shortest-path?from=a&to=b");
        REQUIRE(no_path);
        CHECK(no_path->status == 404);

        // a real route along one session's computer chain
        {
            const VakgGraph graph = replay(events);
            const auto& chain = graph.chain("sim-0", Side::Computer);
            REQUIRE(chain.size() >= 2);
            const std::string url = "/v1/analytics/shortest-path?from=" +
                                    httplib::detail::encode_query_param(chain.front()) + "&to=" +
                                    httplib::detail::encode_query_param(chain.back());
            auto path_result = client.Get(url);
            REQUIRE(path_result);
            REQUIRE(path_result->status == 200);
            const auto body = body_of(path_result);
            CHECK(body["nodes"].front() == chain.front());
            CHECK(body["nodes"].back() == chain.back());
            CHECK(body["weight"] == "hop-count");
        }

        // importance against a human-side goal
        {
            const VakgGraph graph = replay(events);
            std::string goal;
            for (const auto& [session_id, cursor] : graph.sessions()) {
                const auto seq = graph.state_sequence(session_id, Side::Human);
                if (seq.size() >= 2) goal = seq.back();
            }
            if (!goal.empty()) {
                auto importance_result = client.Get("/v1/analytics/importance?goal=" +
                                                    httplib::detail::encode_query_param(goal));
                REQUIRE(importance_result);
                if (importance_result->status == 200) {
                    const auto ranking = body_of(importance_result)["ranking"];
                    REQUIRE(ranking.is_array());
                    for (const auto& entry : ranking) {
                        const double score = entry["importance"].get<double>();
                        CHECK(score >= 0.0);
                        CHECK(score <= 1.0);
                    }
                } else {
                    CHECK(body_of(importance_result)["code"] == "UnreachableGoal");
                }
            }
        }
    }
}

TEST_CASE("acknowledged events survive a restart") {
    TempDir dir("durability");
    const auto events = fixtures::lockstep_session_fixture("durable");
    std::string digest_before;
    {
        RunningService running(dir.path.string());
        auto client = running.client();
        for (const EventRecord& event : events) {
            nlohmann::json body = event_to_json(event);
            httplib::Result result =
                event.kind == EventKind::SessionStart
                    ? client.Post("/v1/sessions", body.dump(), "application/json")
                    : client.Post("/v1/sessions/" + event.session_id + "/events", body.dump(),
                                  "application/json");
            REQUIRE(result);
            REQUIRE((result->status == 200 || result->status == 201));
        }
        auto exported = running.client().Get("/v1/graph/export?format=graphml");
        digest_before = import_graphml(exported->body).structural_digest();
    }  // service fully stopped

    RunningService restarted(dir.path.string());
    auto exported = restarted.client().Get("/v1/graph/export?format=graphml");
    REQUIRE(exported);
    CHECK(import_graphml(exported->body).structural_digest() == digest_before);
    CHECK(digest_before == replay(events).structural_digest());

    // and the log is still the source of truth on disk
    CHECK(load_log(restarted.service.log_path()) == events);
}

TEST_CASE("malformed bodies are a 400, not a crash") {
    TempDir dir("badbody");
    RunningService running(dir.path.string());
    auto client = running.client();
    auto result = client.Post("/v1/sessions", "{not json", "application/json");
    REQUIRE(result);
    CHECK(result->status == 400);
    auto wrong_type = client.Post("/v1/sessions", "[1,2,3]", "application/json");
    REQUIRE(wrong_type);
    CHECK(wrong_type->status == 400);
}
