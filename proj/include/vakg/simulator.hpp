#pragma once

// Deterministic multi-user workload generator with ground-truth labels.
//
// Two regimes:
//   - With motif injection counts, every state label is used exactly
//     once except where an injected pattern demands sharing or revisit,
//     so the emitted log contains exactly the requested motifs.
//   - With all counts zero, sessions random-walk over the configured
//     state alphabet; whatever motifs arise are computed from the
//     scripts and labeled in the ground truth.
//
// Randomness is a pure function of (seed, user, step, salt), so output
// is byte-identical across runs and independent of generation order.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <vakg/analytics.hpp>
#include <vakg/canonical.hpp>
#include <vakg/event.hpp>
#include <vakg/time.hpp>

namespace vakg {

struct MotifCounts {
    std::size_t divergence = 0;
    std::size_t convergence = 0;
    std::size_t backtrack = 0;
    std::size_t loop = 0;

    std::size_t total() const { return divergence + convergence + backtrack + loop; }
};

// Probabilities over the five operation kinds; must sum to 1.
struct OpMix {
    double externalization = 0.10;  // X
    double perception = 0.20;       // P
    double exploration = 0.15;      // E
    double visualization = 0.35;    // V
    double automatic = 0.20;        // A

    double human_mass() const { return externalization + perception + exploration; }
    double computer_mass() const { return visualization + automatic; }
    double total() const { return human_mass() + computer_mass(); }
};

struct ScenarioConfig {
    std::uint64_t seed = 0;
    std::size_t users = 2;
    std::size_t min_steps = 3;
    std::size_t max_steps = 6;
    std::size_t state_alphabet = 16;
    MotifCounts inject;
    OpMix op_mix;
    bool emit_wall_clock = true;
    std::string session_prefix = "sim-";
};

struct GroundTruth {
    std::vector<MotifHit> hits;  // every motif present in the scripts
    // Scripted state trajectories, as fingerprints, per side.
    std::array<SequencesBySide, 2> sequences;
};

struct SimulationOutput {
    std::vector<EventRecord> events;
    GroundTruth truth;
};

namespace detail {

// splitmix64 finalizer; good enough scrambling for keyed streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct KeyedRng {
    std::uint64_t seed;

    std::uint64_t u64(std::uint64_t user, std::uint64_t step, std::uint64_t salt) const {
        return mix64(seed ^ mix64(user ^ mix64(step ^ mix64(salt))));
    }

    double unit(std::uint64_t user, std::uint64_t step, std::uint64_t salt) const {
        return static_cast<double>(u64(user, step, salt) >> 11) * 0x1.0p-53;
    }

    std::uint64_t below(std::uint64_t bound, std::uint64_t user, std::uint64_t step,
                        std::uint64_t salt) const {
        return u64(user, step, salt) % bound;
    }
};

enum RngSalt : std::uint64_t {
    kSaltSteps = 1,
    kSaltComputerOp = 2,
    kSaltHumanPresent = 3,
    kSaltHumanOp = 4,
    kSaltLabel = 5,
    kSaltHumanLabel = 6,
    kSaltInject = 7,
};

}  // namespace detail

inline nlohmann::json ground_truth_to_json(const GroundTruth& truth);

inline SimulationOutput generate(const ScenarioConfig& config) {
    const double mix_total = config.op_mix.total();
    if (std::abs(mix_total - 1.0) > 1e-9) {
        throw VakgError(ErrorCode::InfeasibleConfig,
                        "op mix must sum to 1, got " + std::to_string(mix_total));
    }
    if (config.op_mix.computer_mass() <= 0.0) {
        throw VakgError(ErrorCode::InfeasibleConfig,
                        "op mix needs V/A mass; computer steps drive the state script");
    }
    if (config.users == 0) {
        throw VakgError(ErrorCode::InfeasibleConfig, "need at least one user");
    }
    if (config.min_steps == 0 || config.max_steps < config.min_steps) {
        throw VakgError(ErrorCode::InfeasibleConfig, "bad steps range");
    }
    if (config.state_alphabet == 0) {
        throw VakgError(ErrorCode::InfeasibleConfig, "state alphabet must be non-empty");
    }
    const MotifCounts& inject = config.inject;
    const bool fresh_mode = inject.total() > 0;
    if (fresh_mode) {
        if (2 * (inject.divergence + inject.convergence) + inject.backtrack + inject.loop >
            config.users) {
            throw VakgError(ErrorCode::InfeasibleConfig,
                            "each injected motif needs its own user (pair), got " +
                                std::to_string(config.users) + " users");
        }
        if (inject.backtrack > 0 && config.min_steps < 2) {
            throw VakgError(ErrorCode::InfeasibleConfig, "backtrack needs at least 2 steps");
        }
        if (config.state_alphabet < config.users * (config.max_steps + 1)) {
            throw VakgError(ErrorCode::InfeasibleConfig,
                            "state alphabet too small for motif-exact generation; need >= " +
                                std::to_string(config.users * (config.max_steps + 1)));
        }
    }

    const detail::KeyedRng rng{config.seed};

    // --- computer-side scripts, as label indices ---
    std::vector<std::size_t> steps(config.users);
    for (std::size_t u = 0; u < config.users; ++u) {
        steps[u] = config.min_steps +
                   rng.below(config.max_steps - config.min_steps + 1, u, 0, detail::kSaltSteps);
    }

    std::vector<std::vector<std::uint64_t>> script(config.users);
    if (fresh_mode) {
        std::uint64_t next_label = 0;
        for (std::size_t u = 0; u < config.users; ++u) {
            script[u].resize(steps[u] + 1);
            for (auto& label : script[u]) label = next_label++;
        }
        std::size_t user_at = 0;
        std::uint64_t injection = 0;
        for (std::size_t n = 0; n < inject.divergence; ++n, ++injection) {
            const std::size_t a = user_at++, b = user_at++;
            const std::size_t limit = std::min(steps[a], steps[b]);
            const std::size_t prefix =
                static_cast<std::size_t>(rng.below(limit, injection, 0, detail::kSaltInject));
            for (std::size_t k = 0; k <= prefix; ++k) {
                script[b][k] = script[a][k];
            }
        }
        for (std::size_t n = 0; n < inject.convergence; ++n, ++injection) {
            const std::size_t a = user_at++, b = user_at++;
            script[b][steps[b]] = script[a][steps[a]];
        }
        for (std::size_t n = 0; n < inject.backtrack; ++n, ++injection) {
            const std::size_t u = user_at++;
            // revisit at j with a continuation after it
            const std::size_t j =
                1 + static_cast<std::size_t>(rng.below(steps[u] - 1, injection, 1, detail::kSaltInject));
            const std::size_t i =
                static_cast<std::size_t>(rng.below(j, injection, 2, detail::kSaltInject));
            script[u][j] = script[u][i];
        }
        for (std::size_t n = 0; n < inject.loop; ++n, ++injection) {
            const std::size_t u = user_at++;
            // revisit as the final state: no continuation, no backtrack
            const std::size_t i =
                static_cast<std::size_t>(rng.below(steps[u], injection, 3, detail::kSaltInject));
            script[u][steps[u]] = script[u][i];
        }
    } else {
        for (std::size_t u = 0; u < config.users; ++u) {
            script[u].resize(steps[u] + 1);
            for (std::size_t k = 0; k <= steps[u]; ++k) {
                script[u][k] = rng.below(config.state_alphabet, u, k, detail::kSaltLabel);
            }
        }
    }

    // --- human-side scripts ---
    // Entry k: the human state label after step k (position 0 = initial).
    // In fresh mode labels are (user, step)-unique, so the human lanes
    // stay motif-free and the ground truth is exactly the injection.
    std::vector<std::vector<bool>> human_present(config.users);
    std::vector<std::vector<std::string>> human_labels(config.users);
    for (std::size_t u = 0; u < config.users; ++u) {
        human_present[u].assign(steps[u] + 1, false);
        human_labels[u].resize(steps[u] + 1);
        human_labels[u][0] = fresh_mode
                                 ? "u" + std::to_string(u) + "-k0"
                                 : "h" + std::to_string(rng.below(config.state_alphabet, u, 0,
                                                                  detail::kSaltHumanLabel));
        std::string current = human_labels[u][0];
        for (std::size_t k = 1; k <= steps[u]; ++k) {
            const bool present =
                rng.unit(u, k, detail::kSaltHumanPresent) < config.op_mix.human_mass();
            human_present[u][k] = present;
            if (present) {
                current = fresh_mode
                              ? "u" + std::to_string(u) + "-k" + std::to_string(k)
                              : "h" + std::to_string(rng.below(config.state_alphabet, u, k,
                                                               detail::kSaltHumanLabel));
            }
            human_labels[u][k] = current;
        }
    }

    auto computer_payload = [](std::uint64_t label) {
        return PropertyMap{{"view", "s" + std::to_string(label)}};
    };
    auto human_payload = [](const std::string& label) {
        return PropertyMap{{"insight", label}};
    };
    auto pick_computer_op = [&](std::size_t u, std::size_t k) {
        const double roll = rng.unit(u, k, detail::kSaltComputerOp) * config.op_mix.computer_mass();
        return roll < config.op_mix.visualization ? OperationKind::Visualization
                                                  : OperationKind::AutomaticAnalysis;
    };
    auto pick_human_op = [&](std::size_t u, std::size_t k) {
        const double roll = rng.unit(u, k, detail::kSaltHumanOp) * config.op_mix.human_mass();
        if (roll < config.op_mix.externalization) return OperationKind::Externalization;
        if (roll < config.op_mix.externalization + config.op_mix.perception) {
            return OperationKind::Perception;
        }
        return OperationKind::Exploration;
    };

    // --- events, round-robin across users by step ---
    constexpr std::int64_t kClockBase = 1767225600;  // 2026-01-01T00:00:00Z
    SimulationOutput output;
    auto session_id = [&config](std::size_t u) {
        return config.session_prefix + std::to_string(u);
    };
    for (std::size_t u = 0; u < config.users; ++u) {
        output.events.push_back(EventRecord::session_start(
            session_id(u), "user-" + std::to_string(u), computer_payload(script[u][0]),
            human_payload(human_labels[u][0])));
    }
    std::size_t max_steps_taken = 0;
    for (std::size_t u = 0; u < config.users; ++u) {
        max_steps_taken = std::max(max_steps_taken, steps[u]);
    }
    for (std::size_t k = 1; k <= max_steps_taken; ++k) {
        for (std::size_t u = 0; u < config.users; ++u) {
            if (k > steps[u]) continue;
            StepPart computer;
            computer.ops = {pick_computer_op(u, k)};
            computer.update_payload = PropertyMap{{"action", "step-" + std::to_string(k)}};
            computer.new_state_payload = computer_payload(script[u][k]);
            std::optional<StepPart> human;
            if (human_present[u][k]) {
                StepPart part;
                part.ops = {pick_human_op(u, k)};
                part.update_payload = PropertyMap{{"focus", "step-" + std::to_string(k)}};
                part.new_state_payload = human_payload(human_labels[u][k]);
                human = std::move(part);
            }
            std::optional<std::string> clock;
            if (config.emit_wall_clock) {
                clock = format_rfc3339(kClockBase + static_cast<std::int64_t>(u) * 86400 +
                                       static_cast<std::int64_t>(k) * 60);
            }
            output.events.push_back(
                EventRecord::step(session_id(u), k, std::move(computer), std::move(human), clock));
        }
    }
    for (std::size_t u = 0; u < config.users; ++u) {
        output.events.push_back(EventRecord::session_end(session_id(u), steps[u] + 1));
    }

    // --- ground truth from the scripts ---
    for (std::size_t u = 0; u < config.users; ++u) {
        std::vector<StateFingerprint> computer_seq;
        computer_seq.reserve(steps[u] + 1);
        for (const std::uint64_t label : script[u]) {
            computer_seq.push_back(
                fingerprint_state(Lane::ComputerState, computer_payload(label)));
        }
        std::vector<StateFingerprint> human_seq;
        human_seq.push_back(fingerprint_state(Lane::HumanState, human_payload(human_labels[u][0])));
        for (std::size_t k = 1; k <= steps[u]; ++k) {
            if (human_present[u][k]) {
                human_seq.push_back(
                    fingerprint_state(Lane::HumanState, human_payload(human_labels[u][k])));
            }
        }
        output.truth.sequences[side_index(Side::Computer)][session_id(u)] =
            std::move(computer_seq);
        output.truth.sequences[side_index(Side::Human)][session_id(u)] = std::move(human_seq);
    }
    output.truth.hits = motifs_from_sequences(output.truth.sequences);
    return output;
}

inline nlohmann::json ground_truth_to_json(const GroundTruth& truth) {
    nlohmann::json sequences{{"computer", nlohmann::json::object()},
                             {"human", nlohmann::json::object()}};
    for (const auto& [session_id, seq] : truth.sequences[side_index(Side::Computer)]) {
        sequences["computer"][session_id] = seq;
    }
    for (const auto& [session_id, seq] : truth.sequences[side_index(Side::Human)]) {
        sequences["human"][session_id] = seq;
    }
    nlohmann::json hits = nlohmann::json::array();
    for (const MotifHit& hit : truth.hits) {
        hits.push_back(motif_hit_to_json(hit));
    }
    return {{"hits", hits}, {"sequences", sequences}};
}

}  // namespace vakg
