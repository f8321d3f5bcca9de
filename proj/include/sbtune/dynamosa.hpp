#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "sbtune/param_space.hpp"
#include "sbtune/run_result.hpp"
#include "sbtune/subject.hpp"

namespace sbtune {

struct RankSelection {
    double bias = 1.7;
};
struct TournamentSelection {
    int size = 5;
};
using SelectionPolicy = std::variant<RankSelection, TournamentSelection>;

struct DynaMosaConfig {
    int max_length = 40;
    double crossover_rate = 0.75;
    int mutations = 1;
    int population = 50;
    SelectionPolicy selection = TournamentSelection{5};

    /// Reads a configuration of the "dynamosa" space; throws on mismatch.
    static DynaMosaConfig from_configuration(const Configuration& config);
};

/// Standard Pareto fronts under minimisation: x dominates y iff x <= y
/// componentwise with at least one strict component. Fronts partition the
/// input; ranks are deterministic.
std::vector<std::vector<std::size_t>> nondominated_sort(
    const std::vector<std::vector<double>>& fitness);

/// Per-objective boundary members get +inf, interior members accumulate
/// normalised neighbour gaps; a degenerate objective contributes nothing.
std::vector<double> crowding_distance(const std::vector<std::vector<double>>& front_fitness);

/// Test hook recording activation events and generation boundaries.
struct DynamosaProbe {
    struct Activation {
        Goal goal;
        bool parent_archived;  // true for root goals by convention
    };
    std::vector<Activation> activations;
    std::vector<std::size_t> population_sizes;
};

/// Runs DynaMOSA until the evaluation budget is exhausted. Deterministic
/// for a fixed (subject, config, budget, checkpoints, rng seed).
RunResult run_dynamosa(const Subject& subject, const DynaMosaConfig& config, std::uint64_t budget,
                       int checkpoints, RandomSource& rng, DynamosaProbe* probe = nullptr,
                       const Deadline& deadline = {});

} // namespace sbtune
