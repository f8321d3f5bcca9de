#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sbtune/param_space.hpp"
#include "sbtune/run_result.hpp"
#include "sbtune/subject.hpp"

namespace sbtune {

/// Tuner fitness weights on final coverage and AUC. The five canonical
/// instances are (1,0), (0,1), (1,1), (10,1) and (1,10).
struct Objective {
    double alpha = 1.0;
    double beta = 0.0;
};

/// Trapezoidal area under coverage over budget fraction, extended with a
/// left endpoint (0,0) and a constant tail to fraction 1. Result in [0,1].
double auc(const CoverageTrace& trace);

enum class AlgorithmKind { Dynamosa, Mio };
const char* algorithm_name(AlgorithmKind kind);
AlgorithmKind algorithm_from_name(const std::string& name);
const ParamSpace& space_for(AlgorithmKind kind);
Configuration default_preset(AlgorithmKind kind);

/// One tuning evaluation unit: run the algorithm on every training subject
/// `repetitions` times at the given per-run budget.
struct EvaluationTask {
    AlgorithmKind algorithm = AlgorithmKind::Dynamosa;
    std::vector<const Subject*> subjects;
    int repetitions = 1;
    std::uint64_t budget = 2000;
    int checkpoints = 64;
};

struct EvalCell {
    std::size_t subject_index = 0;
    int repetition = 0;
    double coverage = 0.0;
    double auc_value = 0.0;
};

struct EvaluationRecord {
    Configuration config;
    std::vector<EvalCell> cells;
    double mean_coverage = 0.0;  // mean over repetitions, then subjects
    double mean_auc = 0.0;
    std::uint64_t evaluations_spent = 0;
};

/// alpha * mean coverage + beta * mean AUC.
double objective_score(const EvaluationRecord& record, const Objective& objective);

/// Runs the task's algorithm once per (subject, repetition) with seeds
/// derived from (master_seed, config digest, subject id, repetition).
/// Deterministic and independent of the jobs value.
EvaluationRecord evaluate_config(const EvaluationTask& task, const Configuration& config,
                                 std::uint64_t master_seed, int jobs = 1);

/// x_t + F * (x_r - x_s), componentwise. Throws on dimension mismatch.
std::vector<double> de_offspring(const std::vector<double>& x_r, const std::vector<double>& x_s,
                                 const std::vector<double>& x_t, double scale);

enum class DeStrategy { Rand1Bin, Best1Bin };

struct DESettings {
    int pop_size = 8;
    DeStrategy strategy = DeStrategy::Best1Bin;
    double scale_lo = 0.5;  // fixed scale when scale_hi <= scale_lo
    double scale_hi = 1.0;  // dither draws uniformly from [scale_lo, scale_hi)
    double cross_prob = 0.7;
    int generations = 12;
    bool include_default = true;
};

struct GenerationStats {
    double best_score = 0.0;
    std::vector<double> scores;
};

struct TuningResult {
    Configuration best_config;
    double best_score = 0.0;
    std::vector<GenerationStats> history;  // initial population, then one per generation
    std::uint64_t score_evaluations = 0;   // scorer invocations
    std::uint64_t algorithm_runs = 0;      // individual algorithm runs behind them
};

/// Synchronous DE over the space with greedy (>=) replacement and bounds
/// clipping. The scorer must be safe to call from worker threads.
TuningResult de_optimize(const ParamSpace& space,
                         const std::function<double(const Configuration&)>& score,
                         const DESettings& settings, RandomSource& rng,
                         const std::optional<Configuration>& default_config, int jobs = 1);

/// DE against real algorithm runs: maximises objective_score of
/// evaluate_config over the training subjects.
TuningResult de_tune(const ParamSpace& space, const EvaluationTask& task,
                     const Objective& objective, const DESettings& settings, RandomSource& rng,
                     std::uint64_t master_seed, int jobs = 1);

struct GridRecord {
    std::uint64_t grid_id = 0;
    EvaluationRecord record;
};

/// Evaluates every grid configuration exactly once (optionally only the
/// first `limit` of them); result is independent of evaluation order.
std::vector<GridRecord> grid_tune(const ParamSpace& space, const EvaluationTask& task,
                                  std::uint64_t master_seed, int jobs = 1,
                                  std::optional<std::uint64_t> limit = {});

struct BestSelection {
    std::uint64_t grid_id = 0;
    Configuration config;
    double score = 0.0;
};

/// Argmax of objective_score; ties go to the smallest grid_id.
BestSelection select_best(const std::vector<GridRecord>& records, const Objective& objective);

} // namespace sbtune
