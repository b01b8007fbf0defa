#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <vakg/analytics.hpp>
#include <vakg/storage.hpp>

#include "support/oracles.hpp"

namespace {

struct RunResult {
    int exit_code;
    std::string output;  // stdout only
};

RunResult run_cli(const std::string& args) {
    const std::string command = std::string(VAKG_BIN_PATH) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buffer{};
    std::string output;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::size_t n = 0;
    while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
        output.append(buffer.data(), n);
    }
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), output};
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("vakg-cli-" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("simulate is reproducible byte for byte") {
    TempDir dir;
    const std::string args = "--seed 7 --users 3 --alphabet 6";
    const auto first = run_cli("simulate " + args + " --out " + dir.file("a.jsonl"));
    const auto second = run_cli("simulate " + args + " --out " + dir.file("b.jsonl"));
    CHECK(first.exit_code == 0);
    CHECK(second.exit_code == 0);
    CHECK(slurp(dir.file("a.jsonl")) == slurp(dir.file("b.jsonl")));
    CHECK(slurp(dir.file("a.jsonl.truth.json")) == slurp(dir.file("b.jsonl.truth.json")));
}

TEST_CASE("ingest and validate report on a simulated log") {
    TempDir dir;
    run_cli("simulate --seed 3 --users 2 --alphabet 5 --out " + dir.file("log.jsonl"));
    const auto ingested = run_cli("ingest " + dir.file("log.jsonl"));
    CHECK(ingested.exit_code == 0);
    const auto counts = nlohmann::json::parse(ingested.output);
    CHECK(counts["sessions"] == 2);
    CHECK(counts["states"].get<std::size_t>() > 0);

    const auto validated = run_cli("validate " + dir.file("log.jsonl"));
    CHECK(validated.exit_code == 0);
    CHECK(nlohmann::json::parse(validated.output)["valid"] == true);
}

TEST_CASE("analyze motifs covers the ground-truth sidecar") {
    TempDir dir;
    run_cli("simulate --seed 11 --users 4 --alphabet 5 --out " + dir.file("log.jsonl"));
    const auto analyzed = run_cli("analyze motifs " + dir.file("log.jsonl"));
    REQUIRE(analyzed.exit_code == 0);
    const auto hits = nlohmann::json::parse(analyzed.output)["hits"];
    const auto truth = nlohmann::json::parse(slurp(dir.file("log.jsonl.truth.json")))["hits"];
    REQUIRE(truth.is_array());
    auto key_of = [](const nlohmann::json& hit) {
        return std::make_tuple(hit["motif"].get<std::string>(), hit["side"].get<std::string>(),
                               hit["sessions"].dump(), hit["anchor"].get<std::string>());
    };
    std::set<std::tuple<std::string, std::string, std::string, std::string>> detected;
    for (const auto& hit : hits) detected.insert(key_of(hit));
    for (const auto& expected : truth) {
        CHECK(detected.count(key_of(expected)) == 1);
    }
}

TEST_CASE("export round-trips through import") {
    TempDir dir;
    run_cli("simulate --seed 5 --users 2 --alphabet 4 --out " + dir.file("log.jsonl"));
    const auto exported = run_cli("export " + dir.file("log.jsonl") + " --format graphml");
    REQUIRE(exported.exit_code == 0);
    const vakg::VakgGraph imported = vakg::import_graphml(exported.output);
    const vakg::VakgGraph direct = vakg::replay(vakg::load_log(dir.file("log.jsonl")));
    CHECK(imported.structural_digest() == direct.structural_digest());

    const auto dot = run_cli("export " + dir.file("log.jsonl") + " --format dot");
    CHECK(dot.exit_code == 0);
    CHECK(dot.output.find("cluster_human_updates") != std::string::npos);
}

TEST_CASE("pagerank output is a stochastic vector") {
    TempDir dir;
    run_cli("simulate --seed 13 --users 3 --alphabet 5 --out " + dir.file("log.jsonl"));
    const auto result = run_cli("analyze pagerank " + dir.file("log.jsonl"));
    REQUIRE(result.exit_code == 0);
    const auto parsed = nlohmann::json::parse(result.output);
    double sum = 0.0;
    for (const auto& [id, score] : parsed["scores"].items()) {
        sum += score.get<double>();
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("the remaining analyze subcommands answer on a real log") {
    TempDir dir;
    run_cli("simulate --seed 29 --users 2 --alphabet 6 --out " + dir.file("log.jsonl"));
    const vakg::VakgGraph graph = vakg::replay(vakg::load_log(dir.file("log.jsonl")));

    const auto stats = run_cli("analyze stats " + dir.file("log.jsonl"));
    REQUIRE(stats.exit_code == 0);
    CHECK(nlohmann::json::parse(stats.output)["sessions"].size() == 2);

    const auto chain = graph.chain("sim-0", vakg::Side::Computer);
    REQUIRE(chain.size() >= 2);
    const auto path = run_cli("analyze shortest-path " + dir.file("log.jsonl") + " --from '" +
                              chain.front() + "' --to '" + chain.back() + "'");
    REQUIRE(path.exit_code == 0);
    const auto parsed_path = nlohmann::json::parse(path.output);
    CHECK(parsed_path["nodes"].size() >= 2);

    // wall-clock weighting works on simulator logs (stamps are emitted)
    const auto timed = run_cli("analyze shortest-path " + dir.file("log.jsonl") + " --from '" +
                               chain.front() + "' --to '" + chain.back() +
                               "' --weight wallclock --lane computer_update");
    REQUIRE(timed.exit_code == 0);
    CHECK(nlohmann::json::parse(timed.output)["weight"] == "wall-clock");

    std::string goal;
    for (const auto& [session_id, cursor] : graph.sessions()) {
        const auto seq = graph.state_sequence(session_id, vakg::Side::Human);
        if (seq.size() >= 2) goal = seq.back();
    }
    if (!goal.empty()) {
        const auto importance =
            run_cli("analyze importance " + dir.file("log.jsonl") + " --goal '" + goal + "'");
        if (importance.exit_code == 0) {
            CHECK(nlohmann::json::parse(importance.output).contains("ranking"));
        }
    }
}

TEST_CASE("exit codes separate domain errors from usage errors") {
    TempDir dir;
    // missing file: domain error
    CHECK(run_cli("ingest " + dir.file("absent.jsonl")).exit_code == 1);
    // unknown subcommand: usage error
    CHECK(run_cli("frobnicate").exit_code == 2);
    // missing required option: usage error
    CHECK(run_cli("simulate --seed 1").exit_code == 2);
    // corrupt log: domain error
    {
        std::ofstream out(dir.file("broken.jsonl"));
        out << "{oops\n";
    }
    CHECK(run_cli("validate " + dir.file("broken.jsonl")).exit_code == 1);
    // log with a seq gap: domain error with position
    {
        std::ofstream out(dir.file("gap.jsonl"));
        out << R"({"kind":"SessionStart","session_id":"s","seq":0,"user_id":"u","initial_computer_state":{},"initial_human_state":{}})"
            << "\n"
            << R"({"kind":"SessionEnd","session_id":"s","seq":5})" << "\n";
    }
    CHECK(run_cli("ingest " + dir.file("gap.jsonl")).exit_code == 1);
    // --help is not an error
    CHECK(run_cli("--help").exit_code == 0);
}
