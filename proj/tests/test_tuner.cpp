#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sbtune/dynamosa.hpp"
#include "sbtune/experiment.hpp"
#include "sbtune/mio.hpp"
#include "sbtune/tuner.hpp"

using namespace sbtune;

namespace {

std::vector<Subject> tiny_suite(int count, std::uint64_t seed) {
    SubjectParams params;
    params.roots = 2;
    params.max_depth = 3;
    params.child_prob = 0.5;
    params.slot_span = 3;
    std::vector<Subject> suite;
    for (int i = 0; i < count; ++i)
        suite.push_back(generate_subject("t" + std::to_string(i), mix64(seed + i), params));
    return suite;
}

EvaluationTask tiny_task(const std::vector<Subject>& suite, AlgorithmKind kind,
                         std::uint64_t budget = 120, int reps = 2) {
    EvaluationTask task;
    task.algorithm = kind;
    for (const Subject& s : suite) task.subjects.push_back(&s);
    task.repetitions = reps;
    task.budget = budget;
    task.checkpoints = 8;
    return task;
}

} // namespace

TEST_CASE("auc integrates the trace with a left extension") {
    CoverageTrace constant;
    constant.points = {{0.5, 0.6}, {1.0, 0.6}};
    CHECK(auc(constant) == doctest::Approx(0.75 * 0.6));

    CoverageTrace ramp;
    ramp.points = {{0.5, 0.4}, {1.0, 0.8}};
    CHECK(auc(ramp) == 0.4);  // 0.1 + 0.3, exact

    CoverageTrace single;
    single.points = {{1.0, 1.0}};
    CHECK(auc(single) == 0.5);

    SUBCASE("monotone traces never exceed their final coverage") {
        RandomSource rng(61);
        for (int iter = 0; iter < 500; ++iter) {
            CoverageTrace trace;
            const int n = 2 + static_cast<int>(rng.next_below(10));
            double fraction = 0.0, coverage = 0.0;
            for (int i = 0; i < n; ++i) {
                fraction += (1.0 - fraction) * (0.1 + 0.8 * rng.next_double());
                coverage = std::min(1.0, coverage + rng.next_double() * 0.3);
                trace.points.emplace_back(i + 1 == n ? 1.0 : fraction, coverage);
            }
            trace.points.back().first = 1.0;
            const double area = auc(trace);
            CHECK(area >= 0.0);
            CHECK(area <= 1.0);
            CHECK(area <= trace.final_coverage() + 1e-12);
        }
    }
}

TEST_CASE("objective scores are weighted sums of the aggregates") {
    EvaluationRecord record;
    record.mean_coverage = 0.85;
    record.mean_auc = 0.6;
    CHECK(objective_score(record, {1.0, 0.0}) == 0.85);
    record.mean_coverage = 0.8;
    CHECK(objective_score(record, {10.0, 1.0}) == doctest::Approx(8.6));
    CHECK_THROWS_AS(objective_score(record, {0.0, 0.0}), std::invalid_argument);

    SUBCASE("a (0,1) objective ranks records by mean AUC alone") {
        EvaluationRecord a, b;
        a.mean_coverage = 0.2;
        a.mean_auc = 0.9;
        b.mean_coverage = 0.99;
        b.mean_auc = 0.5;
        CHECK((objective_score(a, {0.0, 1.0}) > objective_score(b, {0.0, 1.0})) ==
              (a.mean_auc > b.mean_auc));
    }
}

TEST_CASE("evaluate_config is deterministic and order-invariant") {
    const std::vector<Subject> suite = tiny_suite(3, 100);

    SUBCASE("one subject, one repetition yields one cell") {
        const std::vector<Subject> one = tiny_suite(1, 5);
        const EvaluationRecord record =
            evaluate_config(tiny_task(one, AlgorithmKind::Mio, 60, 1), preset("mio-default"), 7);
        CHECK(record.cells.size() == 1);
        CHECK(record.mean_coverage == record.cells[0].coverage);
    }

    SUBCASE("repeated evaluation gives identical records") {
        const EvaluationTask task = tiny_task(suite, AlgorithmKind::Dynamosa);
        const Configuration config = preset("dynamosa-default");
        const EvaluationRecord a = evaluate_config(task, config, 42);
        const EvaluationRecord b = evaluate_config(task, config, 42, 4);
        REQUIRE(a.cells.size() == b.cells.size());
        for (std::size_t i = 0; i < a.cells.size(); ++i) {
            CHECK(a.cells[i].coverage == b.cells[i].coverage);
            CHECK(a.cells[i].auc_value == b.cells[i].auc_value);
        }
        CHECK(a.mean_coverage == b.mean_coverage);
        CHECK(a.evaluations_spent == b.evaluations_spent);
    }

    SUBCASE("permuting the subjects leaves the aggregates unchanged") {
        EvaluationTask task = tiny_task(suite, AlgorithmKind::Mio);
        const Configuration config = preset("mio-default");
        const EvaluationRecord forward = evaluate_config(task, config, 9);
        std::reverse(task.subjects.begin(), task.subjects.end());
        const EvaluationRecord backward = evaluate_config(task, config, 9);
        CHECK(forward.mean_coverage == doctest::Approx(backward.mean_coverage).epsilon(1e-12));
        CHECK(forward.mean_auc == doctest::Approx(backward.mean_auc).epsilon(1e-12));
    }

    SUBCASE("invalid configurations fail before any run") {
        const EvaluationTask task = tiny_task(suite, AlgorithmKind::Dynamosa);
        CHECK_THROWS_AS(evaluate_config(task, preset("mio-default"), 1), std::invalid_argument);
    }
}

TEST_CASE("de_offspring applies the donor formula componentwise") {
    CHECK(de_offspring({3, 4}, {1, 1}, {1, 2}, 0.5) == std::vector<double>{2.0, 3.5});
    CHECK(de_offspring({5, 6}, {5, 6}, {9, 9}, 0.7) == std::vector<double>{9.0, 9.0});
    CHECK(de_offspring({3, 4}, {1, 1}, {1, 2}, 0.0) == std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(de_offspring({1, 2}, {1}, {1, 2}, 0.5), std::invalid_argument);
}

TEST_CASE("de_optimize converges on a transparent surrogate") {
    const ParamSpace space = build_dynamosa_space();
    // unimodal in two decoded continuous parameters; optimum value 0
    auto surrogate = [](const Configuration& c) {
        const double crossover = c.real("crossover_rate");
        const double bias = c.real("rank_bias");
        return -((crossover - 0.42) * (crossover - 0.42) + (bias - 1.5) * (bias - 1.5));
    };

    DESettings settings;
    settings.pop_size = 8;
    settings.generations = 20;
    settings.include_default = false;

    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        RandomSource rng(seed);
        const TuningResult result = de_optimize(space, surrogate, settings, rng, std::nullopt);
        double best_so_far = -1e30;
        for (const GenerationStats& g : result.history) {
            CHECK(g.best_score >= best_so_far);
            best_so_far = g.best_score;
        }
        if (result.best_score >= -1e-2) ++hits;
        CHECK(result.score_evaluations == 8 * 21);
    }
    CHECK(hits >= 95);
}

TEST_CASE("zero generations with the default included still score it") {
    const std::vector<Subject> suite = tiny_suite(2, 200);
    const EvaluationTask task = tiny_task(suite, AlgorithmKind::Dynamosa, 100, 1);
    const Objective objective{1.0, 0.0};

    DESettings settings;
    settings.pop_size = 4;
    settings.generations = 0;
    settings.include_default = true;

    RandomSource rng(3);
    const TuningResult result = de_tune(build_dynamosa_space(), task, objective, settings, rng, 77);
    const double default_score =
        objective_score(evaluate_config(task, preset("dynamosa-default"), 77), objective);
    CHECK(result.best_score >= default_score);
    CHECK(result.history.size() == 1);
    CHECK(result.algorithm_runs == 4 * task.subjects.size() * 1);
}

TEST_CASE("rand-1-bin also improves over the initial population") {
    const ParamSpace space = build_mio_space();
    auto surrogate = [](const Configuration& c) {
        const double f = c.real("phase_switch");
        return -(f - 0.3) * (f - 0.3);
    };
    DESettings settings;
    settings.pop_size = 6;
    settings.generations = 10;
    settings.strategy = DeStrategy::Rand1Bin;
    settings.scale_lo = 0.7;
    settings.scale_hi = 0.7;  // fixed scale
    settings.include_default = false;
    RandomSource rng(5);
    const TuningResult result = de_optimize(space, surrogate, settings, rng, std::nullopt);
    CHECK(result.best_score > result.history.front().best_score - 1e-15);
    CHECK(result.history.size() == 11);
}

TEST_CASE("grid_tune walks the whole MIO grid deterministically") {
    const std::vector<Subject> suite = tiny_suite(1, 300);
    const EvaluationTask task = tiny_task(suite, AlgorithmKind::Mio, 30, 1);

    const std::vector<GridRecord> records = grid_tune(build_mio_space(), task, 5, 4);
    CHECK(records.size() == 1620);
    std::uint64_t runs = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].grid_id == i + 1);
        runs += records[i].record.cells.size();
    }
    CHECK(runs == 1620 * task.subjects.size() * 1);

    SUBCASE("a rerun reproduces the records") {
        const std::vector<GridRecord> again =
            grid_tune(build_mio_space(), task, 5, 1, std::uint64_t{25});
        CHECK(again.size() == 25);
        for (std::size_t i = 0; i < again.size(); ++i) {
            CHECK(again[i].record.mean_coverage == records[i].record.mean_coverage);
            CHECK(again[i].record.mean_auc == records[i].record.mean_auc);
        }
    }
}

TEST_CASE("select_best is a deterministic argmax with grid-id tie-break") {
    auto record_with = [](double cov, double area) {
        EvaluationRecord r;
        r.config = preset("mio-default");
        r.mean_coverage = cov;
        r.mean_auc = area;
        return r;
    };
    std::vector<GridRecord> records;
    records.push_back({1, record_with(0.9, 0.2)});
    records.push_back({2, record_with(0.5, 0.9)});
    records.push_back({3, record_with(0.9, 0.2)});

    SUBCASE("single record selects itself") {
        const std::vector<GridRecord> one(records.begin(), records.begin() + 1);
        CHECK(select_best(one, {1.0, 0.0}).grid_id == 1);
    }

    SUBCASE("different objectives can pick different grid ids") {
        CHECK(select_best(records, {1.0, 0.0}).grid_id == 1);   // coverage favours 1 (tie -> low id)
        CHECK(select_best(records, {0.0, 1.0}).grid_id == 2);   // auc favours 2
    }

    SUBCASE("scaling the objective keeps the argmax") {
        CHECK(select_best(records, {1.0, 1.0}).grid_id ==
              select_best(records, {2.0, 2.0}).grid_id);
    }

    SUBCASE("empty record sets are rejected") {
        CHECK_THROWS_AS(select_best({}, {1.0, 0.0}), std::invalid_argument);
    }
}
