#include <catch2/catch_amalgamated.hpp>

#include <vakg/graph.hpp>

using namespace vakg;

namespace {

VakgGraph session_graph(const std::string& session = "s") {
    VakgGraph graph;
    graph.open_session(session, "u", {{"view", "v0"}}, {{"insight", "k0"}});
    return graph;
}

TransitionSpec computer_to(const std::string& view) {
    return {Side::Computer,
            {OperationKind::Visualization},
            PropertyMap{{"action", view}},
            PropertyMap{{"view", view}},
            std::nullopt};
}

TransitionSpec human_to(const std::string& insight) {
    return {Side::Human,
            {OperationKind::Perception},
            PropertyMap{{"focus", insight}},
            PropertyMap{{"insight", insight}},
            std::nullopt};
}

}  // namespace

TEST_CASE("upsert_state deduplicates by content") {
    VakgGraph graph;
    const auto [fp1, created1] = graph.upsert_state(Lane::ComputerState, {{"view", "a"}});
    const auto [fp2, created2] = graph.upsert_state(Lane::ComputerState, {{"view", "a"}});
    CHECK(created1);
    CHECK_FALSE(created2);
    CHECK(fp1 == fp2);
    CHECK(graph.state_count() == 1);

    const auto [fp3, created3] = graph.upsert_state(Lane::ComputerState, {{"view", "b"}});
    CHECK(created3);
    CHECK(fp3 != fp1);
    CHECK(graph.state_count() == 2);

    CHECK_THROWS_AS(graph.upsert_state(Lane::HumanUpdate, PropertyMap::object()), VakgError);
}

TEST_CASE("first transition starts at step 0 from the initial state") {
    VakgGraph graph = session_graph();
    const auto result = graph.add_transition("s", computer_to("v1"));
    CHECK(result.step == 0);
    const UpdateNode* update = graph.find_update(result.update_id);
    REQUIRE(update != nullptr);
    CHECK(update->step == 0);
    CHECK(update->lane == Lane::ComputerUpdate);
    const std::string* source = graph.applies_to_source(result.update_id);
    REQUIRE(source != nullptr);
    CHECK(*source == graph.session("s").initial_state[side_index(Side::Computer)]);
}

TEST_CASE("producing a previously seen state reuses its node") {
    VakgGraph graph = session_graph();
    const auto initial = graph.session("s").initial_state[side_index(Side::Computer)];
    graph.add_transition("s", computer_to("v1"));
    const std::size_t before = graph.state_count();
    // back to where the session started
    const auto result = graph.add_transition(
        "s", {Side::Computer, {OperationKind::Visualization}, PropertyMap{{"action", "undo"}},
              PropertyMap{{"view", "v0"}}, std::nullopt});
    CHECK_FALSE(result.state_created);
    CHECK(result.state_id == initial);
    CHECK(graph.state_count() == before);
}

TEST_CASE("three transitions chain with two TemporalNext edges") {
    VakgGraph graph = session_graph();
    graph.add_transition("s", computer_to("v1"));
    graph.add_transition("s", computer_to("v2"));
    graph.add_transition("s", computer_to("v3"));
    std::size_t temporal = 0;
    for (const Edge& edge : graph.edges()) {
        if (edge.kind == EdgeKind::TemporalNext) ++temporal;
    }
    CHECK(temporal == 2);
    CHECK(graph.chain("s", Side::Computer).size() == 3);
    CHECK(graph.state_sequence("s", Side::Computer).size() == 4);
}

TEST_CASE("two sessions replaying identical steps share all state nodes") {
    VakgGraph graph;
    for (const std::string session : {"a", "b"}) {
        graph.open_session(session, "user-" + session, {{"view", "v0"}}, {{"insight", "k0"}});
    }
    for (const std::string session : {"a", "b"}) {
        graph.add_transition(session, computer_to("v1"));
        graph.add_transition(session, human_to("k1"));
        graph.add_transition(session, computer_to("v2"));
    }
    // one lane-stamped copy of each distinct payload
    CHECK(graph.state_count() == 5);  // v0 v1 v2 + k0 k1
    CHECK(graph.update_count() == 6);
    CHECK(graph.state_sequence("a", Side::Computer) ==
          graph.state_sequence("b", Side::Computer));
}

TEST_CASE("transition guards") {
    VakgGraph graph = session_graph();
    SECTION("unknown session") {
        CHECK_THROWS_MATCHES(graph.add_transition("ghost", computer_to("v")), VakgError,
                             Catch::Matchers::Predicate<VakgError>([](const VakgError& e) {
                                 return e.code() == ErrorCode::UnknownSession;
                             }));
    }
    SECTION("closed session") {
        graph.close_session("s");
        CHECK_THROWS_MATCHES(graph.add_transition("s", computer_to("v")), VakgError,
                             Catch::Matchers::Predicate<VakgError>([](const VakgError& e) {
                                 return e.code() == ErrorCode::SessionClosed;
                             }));
    }
    SECTION("ops must match the side") {
        TransitionSpec bad = computer_to("v");
        bad.ops = {OperationKind::Exploration};
        CHECK_THROWS_MATCHES(graph.add_transition("s", bad), VakgError,
                             Catch::Matchers::Predicate<VakgError>([](const VakgError& e) {
                                 return e.code() == ErrorCode::IllegalOps;
                             }));
    }
    SECTION("ops must be non-empty") {
        TransitionSpec bad = computer_to("v");
        bad.ops.clear();
        CHECK_THROWS_AS(graph.add_transition("s", bad), VakgError);
    }
    SECTION("explicit steps must move forward") {
        graph.add_transition("s", computer_to("v1"), 5);
        CHECK_THROWS_AS(graph.add_transition("s", computer_to("v2"), 5), VakgError);
        CHECK(graph.next_step("s") == 6);
    }
    SECTION("duplicate session start") {
        CHECK_THROWS_MATCHES(graph.open_session("s", "u", PropertyMap::object(),
                                                PropertyMap::object()),
                             VakgError,
                             Catch::Matchers::Predicate<VakgError>([](const VakgError& e) {
                                 return e.code() == ErrorCode::DuplicateSessionStart;
                             }));
    }
}

TEST_CASE("sync pairs the two sides of a step") {
    VakgGraph graph = session_graph();

    SECTION("update to update when both sides moved") {
        const std::uint64_t step = graph.next_step("s");
        graph.add_transition("s", computer_to("v1"), step);
        graph.add_transition("s", human_to("k1"), step);
        CHECK(graph.add_sync("s", step) == 1);
        const Edge& edge = graph.edges().back();
        CHECK(edge.kind == EdgeKind::Sync);
        CHECK(graph.find_update(edge.from) != nullptr);
        CHECK(graph.find_update(edge.to) != nullptr);
        CHECK(graph.add_sync("s", step) == 0);  // idempotent
    }

    SECTION("computer-only step syncs to the human state") {
        const auto result = graph.add_transition("s", computer_to("v1"));
        CHECK(graph.add_sync("s", result.step) == 1);
        const Edge& edge = graph.edges().back();
        CHECK(edge.from == graph.session("s").current_state[side_index(Side::Human)]);
        CHECK(edge.to == result.update_id);
    }

    SECTION("human-only step syncs to the computer state") {
        const auto result = graph.add_transition("s", human_to("k1"));
        CHECK(graph.add_sync("s", result.step) == 1);
        const Edge& edge = graph.edges().back();
        CHECK(edge.from == result.update_id);
        CHECK(edge.to == graph.session("s").current_state[side_index(Side::Computer)]);
    }

    SECTION("a step nobody recorded is an error") {
        CHECK_THROWS_MATCHES(graph.add_sync("s", 7), VakgError,
                             Catch::Matchers::Predicate<VakgError>([](const VakgError& e) {
                                 return e.code() == ErrorCode::NoNodesAtStep;
                             }));
    }

    SECTION("sync needs a known session") {
        CHECK_THROWS_MATCHES(graph.add_sync("ghost", 0), VakgError,
                             Catch::Matchers::Predicate<VakgError>([](const VakgError& e) {
                                 return e.code() == ErrorCode::UnknownSession;
                             }));
    }
}

TEST_CASE("validate accepts what the mutation API builds") {
    CHECK(VakgGraph{}.validate().ok());

    VakgGraph graph = session_graph();
    for (int i = 1; i <= 4; ++i) {
        const std::uint64_t step = graph.next_step("s");
        graph.add_transition("s", computer_to("v" + std::to_string(i)), step);
        if (i % 2 == 0) {
            graph.add_transition("s", human_to("k" + std::to_string(i)), step);
        }
        graph.add_sync("s", step);
    }
    const auto report = graph.validate();
    CAPTURE(report.violations.size());
    for (const auto& violation : report.violations) {
        CAPTURE(violation.rule, violation.subject, violation.message);
    }
    CHECK(report.ok());
}

TEST_CASE("validate flags an update without a Produces edge") {
    VakgGraph graph;
    const PropertyMap payload{{"view", "v"}};
    const StateFingerprint fp = fingerprint_state(Lane::ComputerState, payload);
    graph.add_raw_state({fp, Lane::ComputerState, payload});
    UpdateNode update;
    update.id = update_node_id("s", Lane::ComputerUpdate, 0);
    update.lane = Lane::ComputerUpdate;
    update.session_id = "s";
    update.user_id = "u";
    update.step = 0;
    update.ops = {OperationKind::Visualization};
    update.payload = PropertyMap::object();
    graph.add_raw_update(update);
    graph.add_raw_edge({EdgeKind::AppliesTo, "", fp, update.id});

    const auto report = graph.validate();
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].rule == "update-produces-count");
    CHECK(report.violations[0].subject == update.id);
}

TEST_CASE("validate recomputes state fingerprints") {
    VakgGraph graph;
    graph.add_raw_state({std::string(64, '0'), Lane::ComputerState, {{"view", "v"}}});
    const auto report = graph.validate();
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations[0].rule == "state-id-mismatch");
}

TEST_CASE("ingestion never removes anything") {
    VakgGraph graph = session_graph();
    std::size_t nodes = graph.node_count();
    std::size_t edges = graph.edge_count();
    for (int i = 0; i < 6; ++i) {
        const std::uint64_t step = graph.next_step("s");
        graph.add_transition("s", computer_to("v" + std::to_string(i % 3)), step);
        graph.add_sync("s", step);
        CHECK(graph.node_count() >= nodes);
        CHECK(graph.edge_count() >= edges);
        nodes = graph.node_count();
        edges = graph.edge_count();
    }
}

TEST_CASE("structural digest tracks content, not construction order") {
    VakgGraph one = session_graph();
    one.add_transition("s", computer_to("v1"));

    VakgGraph two = session_graph();
    two.add_transition("s", computer_to("v1"));
    CHECK(one.structural_digest() == two.structural_digest());

    two.add_transition("s", computer_to("v2"));
    CHECK(one.structural_digest() != two.structural_digest());
}
