#pragma once

#include <cstdint>
#include <vector>

#include "sbtune/param_space.hpp"
#include "sbtune/run_result.hpp"
#include "sbtune/subject.hpp"

namespace sbtune {

struct MioPhaseParams {
    int tests_per_target = 1;
    double sampling_prob = 0.0;
    int mutations = 1;
};

struct MioConfig {
    int max_length = 40;
    double phase_switch = 0.5;  // exploitation once consumed/budget >= this
    MioPhaseParams explore{10, 0.5, 1};
    int exploit_mutations = 10;  // exploitation pins tests_per_target=1, P_r=0

    /// Reads a configuration of the "mio" space; throws on mismatch.
    static MioConfig from_configuration(const Configuration& config);
};

/// Exploration parameters below the switch point, the exploitation
/// constants (1, 0, exploit n_m) at and above it. Pure.
MioPhaseParams phase_params(const MioConfig& config, double consumed_fraction);

/// Test hook recording how each candidate was sampled.
struct MioProbe {
    enum class Sample { RandomFresh, ForcedBootstrap, PoolMutation };
    struct Event {
        Sample kind;
        bool exploitation;
    };
    std::vector<Event> events;
    std::size_t max_pool_size_after_switch = 0;
    // entries out of descending-h order or duplicated tests within a pool
    std::size_t pool_order_violations = 0;
};

/// Runs MIO until the evaluation budget is exhausted. Deterministic for a
/// fixed (subject, config, budget, checkpoints, rng seed).
RunResult run_mio(const Subject& subject, const MioConfig& config, std::uint64_t budget,
                  int checkpoints, RandomSource& rng, MioProbe* probe = nullptr,
                  const Deadline& deadline = {});

} // namespace sbtune
