#include "sbtune/mio.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "sbtune/gen_ops.hpp"

namespace sbtune {

MioConfig MioConfig::from_configuration(const Configuration& config) {
    static const ParamSpace space = build_mio_space();
    const Configuration normalized = space.normalize(config);
    space.validate(normalized);
    MioConfig c;
    c.max_length = static_cast<int>(normalized.integer("length"));
    c.phase_switch = normalized.real("phase_switch");
    c.explore.tests_per_target =
        static_cast<int>(normalized.integer("explore_tests_per_target"));
    c.explore.sampling_prob = normalized.real("explore_sampling_prob");
    c.explore.mutations = static_cast<int>(normalized.integer("explore_mutations"));
    c.exploit_mutations = static_cast<int>(normalized.integer("exploit_mutations"));
    return c;
}

MioPhaseParams phase_params(const MioConfig& config, double consumed_fraction) {
    if (consumed_fraction < 0.0 || consumed_fraction > 1.0)
        throw std::invalid_argument("consumed fraction must lie in [0,1]");
    if (consumed_fraction < config.phase_switch) return config.explore;
    return MioPhaseParams{1, 0.0, config.exploit_mutations};
}

namespace {

struct PoolEntry {
    TestCase test;
    double heuristic;  // 1/(1+fitness), in (0,1]
};

struct GoalPool {
    std::vector<PoolEntry> entries;  // sorted descending by heuristic
    std::uint64_t sample_counter = 0;
};

/// Keeps entries descending by h, skips duplicates of the identical test,
/// evicts the worst beyond the cap. Returns true when the pool changed.
bool pool_insert(GoalPool& pool, const TestCase& test, double h, std::size_t cap) {
    if (pool.entries.size() >= cap && h <= pool.entries.back().heuristic) return false;
    for (const PoolEntry& e : pool.entries)
        if (e.test == test) return false;
    auto pos = pool.entries.begin();
    while (pos != pool.entries.end() && pos->heuristic >= h) ++pos;
    pool.entries.insert(pos, PoolEntry{test, h});
    while (pool.entries.size() > cap) pool.entries.pop_back();
    return true;
}

} // namespace

RunResult run_mio(const Subject& subject, const MioConfig& config, std::uint64_t budget,
                  int checkpoints, RandomSource& rng, MioProbe* probe, const Deadline& deadline) {
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    if (config.explore.tests_per_target < 1 || config.explore.mutations < 1 ||
        config.exploit_mutations < 1)
        throw std::invalid_argument("invalid MIO configuration");
    if (config.phase_switch < 0.0 || config.phase_switch > 1.0 ||
        config.explore.sampling_prob < 0.0 || config.explore.sampling_prob > 1.0)
        throw std::invalid_argument("invalid MIO configuration");

    Archive archive;
    TraceRecorder recorder(budget, checkpoints);
    std::uint64_t used = 0;

    std::map<Goal, GoalPool> pools;
    for (const Goal g : subject.all_goals()) pools.emplace(g, GoalPool{});

    bool switched = false;
    while (used < budget && !pools.empty() && !deadline_passed(deadline)) {
        const double fraction = static_cast<double>(used) / static_cast<double>(budget);
        const bool exploitation = fraction >= config.phase_switch;
        const MioPhaseParams phase = phase_params(config, fraction);
        if (exploitation && !switched) {
            for (auto& [goal, pool] : pools)
                if (pool.entries.size() > 1) pool.entries.resize(1);
            switched = true;
        }
        const auto cap = static_cast<std::size_t>(phase.tests_per_target);

        // sample a candidate: fresh random test with probability P_r,
        // otherwise mutate an entry of the least-sampled goal's pool
        TestCase candidate;
        bool from_pool = false;
        Goal sampled_goal{};
        if (rng.next_bool(phase.sampling_prob)) {
            candidate = random_testcase(subject, config.max_length, rng);
            if (probe) probe->events.push_back({MioProbe::Sample::RandomFresh, exploitation});
        } else {
            std::uint64_t best_counter = UINT64_MAX;
            for (const auto& [goal, pool] : pools)
                best_counter = std::min(best_counter, pool.sample_counter);
            std::vector<Goal> least;
            for (const auto& [goal, pool] : pools)
                if (pool.sample_counter == best_counter) least.push_back(goal);
            const Goal k = least[rng.next_below(least.size())];
            GoalPool& pool = pools.at(k);
            if (pool.entries.empty()) {
                // empty pools only exist before the first evaluation
                candidate = random_testcase(subject, config.max_length, rng);
                if (probe)
                    probe->events.push_back({MioProbe::Sample::ForcedBootstrap, exploitation});
            } else {
                const PoolEntry& picked = pool.entries[rng.next_below(pool.entries.size())];
                candidate = apply_mutations(picked.test, phase.mutations, config.max_length,
                                            subject, rng);
                from_pool = true;
                sampled_goal = k;
                if (probe) probe->events.push_back({MioProbe::Sample::PoolMutation, exploitation});
            }
        }

        const ExecutionTrace trace = execute(subject, candidate);
        ++used;

        bool sampled_goal_progress = false;
        std::vector<Goal> covered_now;
        for (auto& [goal, pool] : pools) {
            const double fitness = goal_fitness(subject, trace, goal);
            if (fitness == 0.0) {
                archive.insert(goal, candidate);
                covered_now.push_back(goal);
                if (from_pool && goal == sampled_goal) sampled_goal_progress = true;
                continue;
            }
            const double h = 1.0 / (1.0 + fitness);
            const bool improved = pool_insert(pool, candidate, h, cap);
            if (from_pool && goal == sampled_goal && improved) sampled_goal_progress = true;
        }
        for (const Goal g : covered_now) pools.erase(g);

        if (from_pool && pools.count(sampled_goal) != 0) {
            GoalPool& pool = pools.at(sampled_goal);
            if (sampled_goal_progress)
                pool.sample_counter = 0;
            else
                ++pool.sample_counter;
        }

        if (probe) {
            for (const auto& [goal, pool] : pools) {
                if (switched)
                    probe->max_pool_size_after_switch =
                        std::max(probe->max_pool_size_after_switch, pool.entries.size());
                for (std::size_t i = 0; i + 1 < pool.entries.size(); ++i) {
                    if (pool.entries[i].heuristic < pool.entries[i + 1].heuristic)
                        ++probe->pool_order_violations;
                    for (std::size_t j = i + 1; j < pool.entries.size(); ++j)
                        if (pool.entries[i].test == pool.entries[j].test)
                            ++probe->pool_order_violations;
                }
            }
        }

        recorder.record(used, archive.coverage(subject));
    }

    RunResult result;
    result.trace = recorder.finish(archive.coverage(subject));
    result.archive = std::move(archive);
    result.evaluations_used = used;
    return result;
}

} // namespace sbtune
