#include "sbtune/dynamosa.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

#include "sbtune/gen_ops.hpp"

namespace sbtune {

DynaMosaConfig DynaMosaConfig::from_configuration(const Configuration& config) {
    static const ParamSpace space = build_dynamosa_space();
    const Configuration normalized = space.normalize(config);
    space.validate(normalized);
    DynaMosaConfig c;
    c.max_length = static_cast<int>(normalized.integer("length"));
    c.crossover_rate = normalized.real("crossover_rate");
    c.mutations = static_cast<int>(normalized.integer("mutations"));
    c.population = static_cast<int>(normalized.integer("population"));
    if (normalized.tag("selection") == "rank")
        c.selection = RankSelection{normalized.real("rank_bias")};
    else
        c.selection = TournamentSelection{static_cast<int>(normalized.integer("tournament_size"))};
    return c;
}

std::vector<std::vector<std::size_t>> nondominated_sort(
    const std::vector<std::vector<double>>& fitness) {
    const std::size_t n = fitness.size();
    std::vector<std::vector<std::size_t>> fronts;
    if (n == 0) return fronts;
    const std::size_t dim = fitness.front().size();
    for (const auto& v : fitness)
        if (v.size() != dim) throw std::invalid_argument("ragged fitness matrix");

    auto dominates = [&](std::size_t a, std::size_t b) {
        bool strict = false;
        for (std::size_t t = 0; t < dim; ++t) {
            const double fa = fitness[a][t], fb = fitness[b][t];
            if (fa > fb) return false;
            if (fa < fb) strict = true;
        }
        return strict;
    };

    std::vector<std::size_t> dominated_count(n, 0);
    std::vector<std::vector<std::size_t>> dominates_list(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (dominates(a, b)) {
                dominates_list[a].push_back(b);
                ++dominated_count[b];
            } else if (dominates(b, a)) {
                dominates_list[b].push_back(a);
                ++dominated_count[a];
            }
        }
    }
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i)
        if (dominated_count[i] == 0) current.push_back(i);
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (const std::size_t a : current)
            for (const std::size_t b : dominates_list[a])
                if (--dominated_count[b] == 0) next.push_back(b);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

std::vector<double> crowding_distance(const std::vector<std::vector<double>>& front_fitness) {
    const std::size_t n = front_fitness.size();
    if (n == 0) throw std::invalid_argument("empty front");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> distance(n, 0.0);
    if (n <= 2) {
        std::fill(distance.begin(), distance.end(), inf);
        return distance;
    }
    const std::size_t dim = front_fitness.front().size();
    std::vector<std::size_t> order(n);
    for (std::size_t t = 0; t < dim; ++t) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return front_fitness[a][t] < front_fitness[b][t];
        });
        const double lo = front_fitness[order.front()][t];
        const double hi = front_fitness[order.back()][t];
        distance[order.front()] = inf;
        distance[order.back()] = inf;
        if (hi == lo) continue;  // degenerate objective
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double gap =
                front_fitness[order[i + 1]][t] - front_fitness[order[i - 1]][t];
            distance[order[i]] += gap / (hi - lo);
        }
    }
    return distance;
}

namespace {

struct Individual {
    TestCase test;
    ExecutionTrace trace;
};

std::vector<std::vector<double>> fitness_matrix(const Subject& subject,
                                                const std::vector<Individual>& candidates,
                                                const std::vector<Goal>& targets) {
    std::vector<std::vector<double>> fitness(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        fitness[i].resize(targets.size());
        for (std::size_t t = 0; t < targets.size(); ++t)
            fitness[i][t] = goal_fitness(subject, candidates[i].trace, targets[t]);
    }
    return fitness;
}

/// (front rank asc, crowding desc) order of all candidates, index-stable.
std::vector<std::size_t> rank_candidates(const std::vector<std::vector<double>>& fitness) {
    std::vector<std::size_t> order;
    order.reserve(fitness.size());
    for (const auto& front : nondominated_sort(fitness)) {
        std::vector<std::vector<double>> rows;
        rows.reserve(front.size());
        for (const std::size_t i : front) rows.push_back(fitness[i]);
        const std::vector<double> crowd = crowding_distance(rows);
        std::vector<std::size_t> local(front.size());
        for (std::size_t i = 0; i < front.size(); ++i) local[i] = i;
        std::stable_sort(local.begin(), local.end(),
                         [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
        for (const std::size_t i : local) order.push_back(front[i]);
    }
    return order;
}

std::size_t select_parent(const SelectionPolicy& policy, std::size_t count, RandomSource& rng) {
    if (const auto* rank = std::get_if<RankSelection>(&policy))
        return rank_select(count, rank->bias, rng);
    return tournament_select(count, std::get<TournamentSelection>(policy).size, rng);
}

/// Preference sorting plus non-dominated fill, final front broken by
/// descending crowding distance. Keeps exactly `capacity` candidates.
std::vector<std::size_t> environmental_selection(const std::vector<std::vector<double>>& fitness,
                                                 std::size_t capacity) {
    const std::size_t n = fitness.size();
    const std::size_t dim = fitness.front().size();

    // one best candidate per target forms front 0
    std::set<std::size_t> preferred;
    for (std::size_t t = 0; t < dim; ++t) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (fitness[i][t] < fitness[best][t]) best = i;
        preferred.insert(best);
    }

    std::vector<std::vector<std::size_t>> fronts;
    fronts.emplace_back(preferred.begin(), preferred.end());

    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i)
        if (preferred.count(i) == 0) rest.push_back(i);
    if (!rest.empty()) {
        std::vector<std::vector<double>> rest_rows;
        rest_rows.reserve(rest.size());
        for (const std::size_t i : rest) rest_rows.push_back(fitness[i]);
        for (const auto& front : nondominated_sort(rest_rows)) {
            std::vector<std::size_t> mapped;
            mapped.reserve(front.size());
            for (const std::size_t i : front) mapped.push_back(rest[i]);
            fronts.push_back(std::move(mapped));
        }
    }

    std::vector<std::size_t> chosen;
    chosen.reserve(capacity);
    for (const auto& front : fronts) {
        if (chosen.size() == capacity) break;
        if (chosen.size() + front.size() <= capacity) {
            chosen.insert(chosen.end(), front.begin(), front.end());
            continue;
        }
        std::vector<std::vector<double>> rows;
        rows.reserve(front.size());
        for (const std::size_t i : front) rows.push_back(fitness[i]);
        const std::vector<double> crowd = crowding_distance(rows);
        std::vector<std::size_t> local(front.size());
        for (std::size_t i = 0; i < front.size(); ++i) local[i] = i;
        std::stable_sort(local.begin(), local.end(),
                         [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
        for (const std::size_t i : local) {
            if (chosen.size() == capacity) break;
            chosen.push_back(front[i]);
        }
    }
    return chosen;
}

} // namespace

RunResult run_dynamosa(const Subject& subject, const DynaMosaConfig& config, std::uint64_t budget,
                       int checkpoints, RandomSource& rng, DynamosaProbe* probe,
                       const Deadline& deadline) {
    const auto population_size = static_cast<std::size_t>(config.population);
    if (config.population < 4) throw std::invalid_argument("population must be >= 4");
    if (budget < population_size)
        throw std::invalid_argument("budget cannot evaluate the initial population");
    if (checkpoints < 2) throw std::invalid_argument("checkpoints must be >= 2");

    Archive archive;
    TraceRecorder recorder(budget, checkpoints);
    std::uint64_t used = 0;

    std::set<Goal> active;
    std::set<Goal> active_uncovered;
    auto activate = [&](Goal goal) {
        if (!active.insert(goal).second) return;
        if (!archive.contains(goal)) active_uncovered.insert(goal);
        if (probe) {
            const BranchNode& node = subject.nodes()[subject.index_of(goal.node)];
            const bool parent_archived =
                !node.parent || archive.contains({node.parent->first, node.parent->second});
            probe->activations.push_back({goal, parent_archived});
        }
    };
    for (const Goal g : subject.root_goals()) activate(g);

    auto evaluate = [&](TestCase test) {
        ExecutionTrace trace = execute(subject, test);
        ++used;
        // covered goals arrive ancestor-closed (reaching a node covers the
        // whole parent chain in the same trace), so activating the children
        // of every newly covered goal keeps the rule "active iff root or
        // parent covered" exact
        for (const Goal g : archive.update(subject, test, trace)) {
            active_uncovered.erase(g);
            for (const Goal child : children(subject, g)) activate(child);
        }
        recorder.record(used, archive.coverage(subject));
        return Individual{std::move(test), std::move(trace)};
    };

    std::vector<Individual> population;
    population.reserve(population_size);
    for (std::size_t i = 0; i < population_size; ++i)
        population.push_back(evaluate(random_testcase(subject, config.max_length, rng)));
    if (probe) probe->population_sizes.push_back(population.size());

    while (used < budget && !active_uncovered.empty() && !deadline_passed(deadline)) {
        const std::vector<Goal> targets(active_uncovered.begin(), active_uncovered.end());
        const std::vector<std::size_t> ranked =
            rank_candidates(fitness_matrix(subject, population, targets));

        std::vector<Individual> offspring;
        offspring.reserve(population_size);
        while (offspring.size() < population_size && used < budget) {
            const TestCase& p1 = population[ranked[select_parent(config.selection,
                                                                 ranked.size(), rng)]].test;
            const TestCase& p2 = population[ranked[select_parent(config.selection,
                                                                 ranked.size(), rng)]].test;
            TestCase c1, c2;
            if (rng.next_bool(config.crossover_rate)) {
                std::tie(c1, c2) = crossover(p1, p2, config.max_length, subject, rng);
            } else {
                c1 = p1;
                c2 = p2;
            }
            for (TestCase* child : {&c1, &c2}) {
                if (offspring.size() >= population_size || used >= budget) break;
                offspring.push_back(evaluate(apply_mutations(std::move(*child), config.mutations,
                                                             config.max_length, subject, rng)));
            }
        }

        if (active_uncovered.empty()) break;  // everything covered mid-generation
        const std::vector<Goal> current(active_uncovered.begin(), active_uncovered.end());
        std::vector<Individual> candidates = std::move(population);
        for (Individual& child : offspring) candidates.push_back(std::move(child));
        const auto fitness = fitness_matrix(subject, candidates, current);
        population.clear();
        population.reserve(population_size);
        for (const std::size_t i : environmental_selection(fitness, population_size))
            population.push_back(std::move(candidates[i]));
        if (probe) probe->population_sizes.push_back(population.size());
    }

    RunResult result;
    result.trace = recorder.finish(archive.coverage(subject));
    result.archive = std::move(archive);
    result.evaluations_used = used;
    return result;
}

} // namespace sbtune
