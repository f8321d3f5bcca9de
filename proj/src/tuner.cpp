#include "sbtune/tuner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "sbtune/dynamosa.hpp"
#include "sbtune/experiment.hpp"
#include "sbtune/mio.hpp"
#include "sbtune/parallel.hpp"

namespace sbtune {

double auc(const CoverageTrace& trace) {
    double area = 0.0;
    double prev_x = 0.0, prev_y = 0.0;
    for (const auto& [x, y] : trace.points) {
        area += (x - prev_x) * (prev_y + y) * 0.5;
        prev_x = x;
        prev_y = y;
    }
    if (prev_x < 1.0) area += (1.0 - prev_x) * prev_y;
    return area;
}

const char* algorithm_name(AlgorithmKind kind) {
    return kind == AlgorithmKind::Dynamosa ? "dynamosa" : "mio";
}

AlgorithmKind algorithm_from_name(const std::string& name) {
    if (name == "dynamosa") return AlgorithmKind::Dynamosa;
    if (name == "mio") return AlgorithmKind::Mio;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

const ParamSpace& space_for(AlgorithmKind kind) {
    static const ParamSpace dynamosa = build_dynamosa_space();
    static const ParamSpace mio = build_mio_space();
    return kind == AlgorithmKind::Dynamosa ? dynamosa : mio;
}

Configuration default_preset(AlgorithmKind kind) {
    return preset(kind == AlgorithmKind::Dynamosa ? "dynamosa-default" : "mio-default");
}

double objective_score(const EvaluationRecord& record, const Objective& objective) {
    if (objective.alpha < 0.0 || objective.beta < 0.0 || objective.alpha + objective.beta <= 0.0)
        throw std::invalid_argument("objective weights must be non-negative and not both zero");
    return objective.alpha * record.mean_coverage + objective.beta * record.mean_auc;
}

EvaluationRecord evaluate_config(const EvaluationTask& task, const Configuration& config,
                                 std::uint64_t master_seed, int jobs) {
    if (task.subjects.empty()) throw std::invalid_argument("evaluation task has no subjects");
    if (task.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");

    const ParamSpace& space = space_for(task.algorithm);
    const Configuration normalized = space.normalize(config);
    space.validate(normalized);
    const std::uint64_t digest = config_digest(normalized);

    // decode once; any error surfaces before the first run
    std::optional<DynaMosaConfig> dynamosa_config;
    std::optional<MioConfig> mio_config;
    if (task.algorithm == AlgorithmKind::Dynamosa)
        dynamosa_config = DynaMosaConfig::from_configuration(normalized);
    else
        mio_config = MioConfig::from_configuration(normalized);

    EvaluationRecord record;
    record.config = normalized;
    const std::size_t cell_count =
        task.subjects.size() * static_cast<std::size_t>(task.repetitions);
    record.cells.resize(cell_count);
    std::vector<std::uint64_t> spent(cell_count, 0);

    parallel_for(cell_count, jobs, [&](std::size_t i) {
        const std::size_t s = i / static_cast<std::size_t>(task.repetitions);
        const int rep = static_cast<int>(i % static_cast<std::size_t>(task.repetitions));
        const Subject& subject = *task.subjects[s];
        RandomSource rng(derive_seed(master_seed, digest, subject_key(subject.id()),
                                     static_cast<std::uint64_t>(rep)));
        const RunResult result =
            dynamosa_config
                ? run_dynamosa(subject, *dynamosa_config, task.budget, task.checkpoints, rng)
                : run_mio(subject, *mio_config, task.budget, task.checkpoints, rng);
        record.cells[i] = {s, rep, result.trace.final_coverage(), auc(result.trace)};
        spent[i] = result.evaluations_used;
    });

    double coverage_sum = 0.0, auc_sum = 0.0;
    for (std::size_t s = 0; s < task.subjects.size(); ++s) {
        double cov = 0.0, area = 0.0;
        for (int r = 0; r < task.repetitions; ++r) {
            const EvalCell& cell =
                record.cells[s * static_cast<std::size_t>(task.repetitions) +
                             static_cast<std::size_t>(r)];
            cov += cell.coverage;
            area += cell.auc_value;
        }
        coverage_sum += cov / task.repetitions;
        auc_sum += area / task.repetitions;
    }
    record.mean_coverage = coverage_sum / static_cast<double>(task.subjects.size());
    record.mean_auc = auc_sum / static_cast<double>(task.subjects.size());
    for (const std::uint64_t e : spent) record.evaluations_spent += e;
    return record;
}

std::vector<double> de_offspring(const std::vector<double>& x_r, const std::vector<double>& x_s,
                                 const std::vector<double>& x_t, double scale) {
    if (x_r.size() != x_s.size() || x_r.size() != x_t.size())
        throw std::invalid_argument("de_offspring vectors must share one dimension");
    std::vector<double> out(x_t.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = x_t[j] + scale * (x_r[j] - x_s[j]);
    return out;
}

namespace {

std::size_t draw_distinct(std::size_t count, const std::vector<std::size_t>& taken,
                          RandomSource& rng) {
    for (;;) {
        const std::size_t candidate = rng.next_below(count);
        if (std::find(taken.begin(), taken.end(), candidate) == taken.end()) return candidate;
    }
}

std::size_t argmax(const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

void validate_settings(const DESettings& s) {
    if (s.pop_size < 4) throw std::invalid_argument("DE population must be >= 4");
    if (s.generations < 0) throw std::invalid_argument("DE generations must be >= 0");
    if (s.cross_prob < 0.0 || s.cross_prob > 1.0)
        throw std::invalid_argument("DE crossover probability must lie in [0,1]");
    if (!(s.scale_lo > 0.0 && s.scale_lo < 2.0))
        throw std::invalid_argument("DE scale must lie in (0,2)");
    if (s.scale_hi > s.scale_lo && s.scale_hi > 2.0)
        throw std::invalid_argument("DE dither interval must stay inside (0,2)");
}

} // namespace

TuningResult de_optimize(const ParamSpace& space,
                         const std::function<double(const Configuration&)>& score,
                         const DESettings& settings, RandomSource& rng,
                         const std::optional<Configuration>& default_config, int jobs) {
    validate_settings(settings);
    const auto [lo, hi] = vector_bounds(space);
    const std::size_t dim = space.dimension();
    const auto pop_size = static_cast<std::size_t>(settings.pop_size);

    std::vector<std::vector<double>> population(pop_size, std::vector<double>(dim));
    for (auto& member : population)
        for (std::size_t j = 0; j < dim; ++j)
            member[j] = lo[j] + rng.next_double() * (hi[j] - lo[j]);
    if (settings.include_default && default_config)
        population.front() = encode_config(space, *default_config);

    std::atomic<std::uint64_t> evaluations{0};
    auto score_all = [&](const std::vector<std::vector<double>>& members) {
        std::vector<double> scores(members.size());
        parallel_for(members.size(), jobs, [&](std::size_t i) {
            scores[i] = score(decode_vector(space, members[i]).config);
            evaluations.fetch_add(1);
        });
        return scores;
    };

    std::vector<double> scores = score_all(population);
    TuningResult result;
    result.history.push_back({scores[argmax(scores)], scores});

    for (int g = 0; g < settings.generations; ++g) {
        const double scale = settings.scale_hi > settings.scale_lo
                                 ? settings.scale_lo +
                                       rng.next_double() * (settings.scale_hi - settings.scale_lo)
                                 : settings.scale_lo;
        const std::size_t best = argmax(scores);

        std::vector<std::vector<double>> trials(pop_size);
        for (std::size_t i = 0; i < pop_size; ++i) {
            std::vector<double> mutant;
            if (settings.strategy == DeStrategy::Rand1Bin) {
                const std::size_t r = draw_distinct(pop_size, {i}, rng);
                const std::size_t s = draw_distinct(pop_size, {i, r}, rng);
                const std::size_t t = draw_distinct(pop_size, {i, r, s}, rng);
                mutant = de_offspring(population[r], population[s], population[t], scale);
            } else {
                const std::size_t r = draw_distinct(pop_size, {i, best}, rng);
                const std::size_t s = draw_distinct(pop_size, {i, best, r}, rng);
                mutant = de_offspring(population[r], population[s], population[best], scale);
            }
            const std::size_t forced = rng.next_below(dim);
            std::vector<double> trial = population[i];
            for (std::size_t j = 0; j < dim; ++j)
                if (rng.next_double() < settings.cross_prob || j == forced) trial[j] = mutant[j];
            for (std::size_t j = 0; j < dim; ++j) trial[j] = std::clamp(trial[j], lo[j], hi[j]);
            trials[i] = std::move(trial);
        }

        const std::vector<double> trial_scores = score_all(trials);
        for (std::size_t i = 0; i < pop_size; ++i) {
            if (trial_scores[i] >= scores[i]) {  // >= lets the search drift across plateaus
                population[i] = std::move(trials[i]);
                scores[i] = trial_scores[i];
            }
        }
        result.history.push_back({scores[argmax(scores)], scores});
    }

    const std::size_t best = argmax(scores);
    result.best_config = decode_vector(space, population[best]).config;
    result.best_score = scores[best];
    result.score_evaluations = evaluations.load();
    result.algorithm_runs = result.score_evaluations;
    return result;
}

TuningResult de_tune(const ParamSpace& space, const EvaluationTask& task,
                     const Objective& objective, const DESettings& settings, RandomSource& rng,
                     std::uint64_t master_seed, int jobs) {
    auto scorer = [&](const Configuration& config) {
        return objective_score(evaluate_config(task, config, master_seed, 1), objective);
    };
    std::optional<Configuration> fallback;
    if (settings.include_default) fallback = default_preset(task.algorithm);
    TuningResult result = de_optimize(space, scorer, settings, rng, fallback, jobs);
    result.algorithm_runs = result.score_evaluations * task.subjects.size() *
                            static_cast<std::uint64_t>(task.repetitions);
    return result;
}

std::vector<GridRecord> grid_tune(const ParamSpace& space, const EvaluationTask& task,
                                  std::uint64_t master_seed, int jobs,
                                  std::optional<std::uint64_t> limit) {
    std::vector<std::pair<std::uint64_t, Configuration>> grid = grid_enumerate(space);
    if (limit && *limit < grid.size()) grid.resize(static_cast<std::size_t>(*limit));

    std::vector<GridRecord> records(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t i) {
        records[i].grid_id = grid[i].first;
        records[i].record = evaluate_config(task, grid[i].second, master_seed, 1);
    });
    return records;
}

BestSelection select_best(const std::vector<GridRecord>& records, const Objective& objective) {
    if (records.empty()) throw std::invalid_argument("select_best needs at least one record");
    const GridRecord* best = nullptr;
    double best_score = 0.0;
    for (const GridRecord& r : records) {
        const double score = objective_score(r.record, objective);
        if (!best || score > best_score || (score == best_score && r.grid_id < best->grid_id)) {
            best = &r;
            best_score = score;
        }
    }
    return {best->grid_id, best->record.config, best_score};
}

} // namespace sbtune
