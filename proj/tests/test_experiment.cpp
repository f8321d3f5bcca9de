#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "sbtune/experiment.hpp"

using namespace sbtune;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sbtune_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<Subject> make_suite(int count, std::uint64_t seed) {
    SubjectParams params;
    params.roots = 2;
    params.max_depth = 3;
    params.child_prob = 0.5;
    params.slot_span = 3;
    std::vector<Subject> suite;
    for (int i = 0; i < count; ++i)
        suite.push_back(
            generate_subject("subj-" + std::to_string(i), mix64(seed + i), params));
    return suite;
}

ExperimentManifest small_manifest(const fs::path& dir, const std::string& suite_file,
                                  AlgorithmKind algorithm) {
    ExperimentManifest manifest;
    manifest.suite_path = (dir / suite_file).string();
    manifest.master_seed = 11;
    manifest.split_seed = 4;
    manifest.algorithm = algorithm;
    manifest.repetitions = 3;
    manifest.budget = 120;
    manifest.checkpoints = 8;
    manifest.output_dir = (dir / "out").string();
    return manifest;
}

} // namespace

TEST_CASE("split_suite partitions deterministically with a ceil training side") {
    const std::vector<Subject> suite = make_suite(101, 1);
    const auto [train, test] = split_suite(suite, 0.8, 5);
    CHECK(train.size() == 81);
    CHECK(test.size() == 20);

    const auto [train2, test2] = split_suite(suite, 0.8, 5);
    CHECK(train == train2);
    CHECK(test == test2);

    std::set<std::string> all(train.begin(), train.end());
    all.insert(test.begin(), test.end());
    CHECK(all.size() == suite.size());

    SUBCASE("an empty side is an error") {
        const std::vector<Subject> two = make_suite(2, 2);
        CHECK_THROWS_AS(split_suite(two, 0.8, 1), std::invalid_argument);
        CHECK_THROWS_AS(split_suite(suite, 1.0, 1), std::invalid_argument);
    }
}

TEST_CASE("derive_seed is a stable avalanche mix") {
    CHECK(derive_seed(1, 2, 3, 4) == derive_seed(1, 2, 3, 4));
    CHECK(derive_seed(1, 2, 3, 4) != derive_seed(1, 2, 3, 5));

    // golden value: computed once from the documented splitmix64 chain and
    // frozen; a change here breaks every stored seed
    CHECK(derive_seed(0, 0, 0, 0) == 0x2130748aaac80268ULL);

    SUBCASE("no collisions over a million repetition-adjacent tuples") {
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(2100000);
        for (std::uint64_t i = 0; i < 500000; ++i) {
            seen.insert(derive_seed(7, 13, i, 0));
            seen.insert(derive_seed(7, 13, i, 1));
        }
        CHECK(seen.size() == 1000000);
    }
}

TEST_CASE("suite generation is byte-reproducible") {
    const fs::path dir = temp_dir("suitegen");
    SuiteGenOptions options;
    options.count = 12;
    options.seed = 7;
    options.out_path = (dir / "suite.json").string();
    std::ostringstream log;
    cmd_suite_generate(options, log);
    const std::string first = slurp(options.out_path);
    CHECK(log.str().find("subj-000") != std::string::npos);

    cmd_suite_generate(options, log);
    CHECK(slurp(options.out_path) == first);

    const std::vector<Subject> loaded = load_suite(options.out_path);
    CHECK(loaded.size() == 12);

    SUBCASE("count 0 is rejected") {
        options.count = 0;
        CHECK_THROWS_AS(cmd_suite_generate(options, log), std::invalid_argument);
    }
}

TEST_CASE("cmd_run writes ordered, reproducible records") {
    const fs::path dir = temp_dir("run");
    save_suite((dir / "suite.json").string(), make_suite(2, 31));
    const ExperimentManifest manifest = small_manifest(dir, "suite.json", AlgorithmKind::Dynamosa);

    RunOptions options;
    options.jobs = 1;
    std::ostringstream log;
    const std::vector<RunRecord> records =
        cmd_run(manifest, preset("dynamosa-default"), options, log);
    CHECK(records.size() == 6);  // 2 subjects x 3 repetitions
    for (std::size_t i = 1; i < records.size(); ++i) {
        const bool ordered = records[i - 1].subject_id < records[i].subject_id ||
                             (records[i - 1].subject_id == records[i].subject_id &&
                              records[i - 1].repetition < records[i].repetition);
        CHECK(ordered);
    }

    const std::string runs_once = slurp(fs::path(manifest.output_dir) / "runs.jsonl");
    const std::string traces_once = slurp(fs::path(manifest.output_dir) / "traces.csv");
    CHECK(std::count(runs_once.begin(), runs_once.end(), '\n') == 6);
    CHECK(traces_once.rfind("# manifest=", 0) == 0);

    SUBCASE("reruns and parallel runs are byte-identical") {
        RunOptions parallel;
        parallel.jobs = 4;
        cmd_run(manifest, preset("dynamosa-default"), parallel, log);
        CHECK(slurp(fs::path(manifest.output_dir) / "runs.jsonl") == runs_once);
        CHECK(slurp(fs::path(manifest.output_dir) / "traces.csv") == traces_once);
    }

    SUBCASE("trace rows are monotone per (subject, repetition)") {
        std::istringstream in(traces_once);
        std::string line;
        std::getline(in, line);  // comment
        std::getline(in, line);  // header
        std::map<std::string, double> last;
        while (std::getline(in, line)) {
            std::istringstream row(line);
            std::string subject, rep, fraction, coverage;
            std::getline(row, subject, ',');
            std::getline(row, rep, ',');
            std::getline(row, fraction, ',');
            std::getline(row, coverage);
            const std::string key = subject + "#" + rep;
            const double value = std::stod(coverage);
            if (last.count(key)) CHECK(value >= last[key]);
            last[key] = value;
        }
        CHECK(last.size() == 6);
    }

    SUBCASE("a mismatched configuration fails before any run") {
        CHECK_THROWS_AS(cmd_run(manifest, preset("mio-default"), options, log),
                        std::invalid_argument);
        CHECK(fs::exists(fs::path(manifest.output_dir) / "resume.json"));
    }
}

TEST_CASE("cmd_tune produces per-objective artifacts") {
    const fs::path dir = temp_dir("tune");
    save_suite((dir / "suite.json").string(), make_suite(5, 41));  // 4 train / 1 test

    SUBCASE("DE mode writes one tuning file per objective") {
        ExperimentManifest manifest = small_manifest(dir, "suite.json", AlgorithmKind::Mio);
        manifest.repetitions = 1;
        manifest.budget = 60;
        manifest.objectives = {{1, 0}, {0, 1}, {1, 1}, {10, 1}, {1, 10}};
        DESettings settings;
        settings.pop_size = 4;
        settings.generations = 1;
        manifest.tuner = DeTunerBlock{settings};

        std::ostringstream log;
        const TuneOutcome outcome = cmd_tune(manifest, 2, log);
        CHECK(outcome.files_written.size() == 5);
        for (const char* name : {"tuning_de_1+0.json", "tuning_de_0+1.json",
                                 "tuning_de_1+1.json", "tuning_de_10+1.json",
                                 "tuning_de_1+10.json"})
            CHECK(fs::exists(fs::path(manifest.output_dir) / name));
        // per objective: pop 4 x (initial + 1 generation) x 4 train x 1 rep
        CHECK(outcome.algorithm_runs == 5 * 4 * 2 * 4);

        const nlohmann::json tuning = nlohmann::json::parse(
            slurp(fs::path(manifest.output_dir) / "tuning_de_10+1.json"));
        CHECK(tuning.at("objective") == nlohmann::json::array({10.0, 1.0}));
        CHECK(tuning.at("history").size() == 2);
        CHECK(tuning.at("manifest").get<std::string>().size() == 16);
        CHECK_NOTHROW(config_from_json(tuning.at("best_config")));
    }

    SUBCASE("grid mode writes records plus one best summary per objective") {
        ExperimentManifest manifest = small_manifest(dir, "suite.json", AlgorithmKind::Mio);
        manifest.repetitions = 1;
        manifest.budget = 40;
        manifest.objectives = {{1.0, 0.0}, {1.0, 1.0}};
        manifest.tuner = GridTunerBlock{std::uint64_t{20}};

        std::ostringstream log;
        const TuneOutcome outcome = cmd_tune(manifest, 2, log);
        CHECK(fs::exists(fs::path(manifest.output_dir) / "grid_records.json"));
        CHECK(fs::exists(fs::path(manifest.output_dir) / "best_gs_1+0.json"));
        CHECK(fs::exists(fs::path(manifest.output_dir) / "best_gs_1+1.json"));

        const std::string csv = slurp(fs::path(manifest.output_dir) / "grid_records.csv");
        CHECK(csv.rfind("# manifest=", 0) == 0);
        CHECK(csv.find("grid_id,length,phase_switch,explore_tests_per_target,"
                       "explore_sampling_prob,explore_mutations,exploit_mutations,"
                       "mean_coverage,mean_auc,score_1+0,score_1+1") != std::string::npos);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 22);  // comment + header + 20 rows

        // run accounting: |grid subset| x |train| x reps
        const auto train_size = split_suite(load_suite(manifest.suite_path), 0.8, 4).first.size();
        CHECK(outcome.algorithm_runs == 20 * train_size * 1);
    }
}

TEST_CASE("cmd_compare reports the seven-column comparison layout") {
    const fs::path dir = temp_dir("compare");
    save_suite((dir / "suite.json").string(), make_suite(2, 51));
    ExperimentManifest manifest = small_manifest(dir, "suite.json", AlgorithmKind::Mio);
    manifest.repetitions = 4;
    manifest.budget = 80;

    std::ostringstream log;
    RunOptions options;
    options.out_dir = (dir / "base").string();
    cmd_run(manifest, preset("mio-default"), options, log);
    options.out_dir = (dir / "cand").string();
    cmd_run(manifest, preset("mio-gs-325"), options, log);
    fs::copy(dir / "base" / "runs.jsonl", dir / "baseline.jsonl");
    fs::copy(dir / "cand" / "runs.jsonl", dir / "candidate.jsonl");

    CompareOptions compare;
    compare.out_prefix = (dir / "report").string();
    const std::vector<CompareRow> rows = cmd_compare(
        {(dir / "baseline.jsonl").string(), (dir / "candidate.jsonl").string()}, compare, log);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].label == "baseline");

    const std::string csv = slurp(dir / "report.csv");
    CHECK(csv.find("configuration,mean_coverage,a12,p_value,mean_relative_coverage,"
                   "relative_a12,relative_p_value") != std::string::npos);
    CHECK(fs::exists(dir / "report.json"));

    SUBCASE("a baseline against itself is level") {
        const std::vector<CompareRow> self = cmd_compare(
            {(dir / "baseline.jsonl").string(), (dir / "baseline.jsonl").string()}, compare, log);
        CHECK(self[1].coverage.a12_value == 0.5);
        CHECK(self[1].coverage.p_value == 1.0);
        CHECK(self[1].relative.a12_value == 0.5);
        CHECK(self[1].relative.p_value == 1.0);
    }

    SUBCASE("mismatched subject sets are rejected") {
        save_suite((dir / "suite3.json").string(), make_suite(4, 99));
        ExperimentManifest other = small_manifest(dir, "suite3.json", AlgorithmKind::Mio);
        other.repetitions = 4;
        other.budget = 80;
        RunOptions third;
        third.out_dir = (dir / "third").string();
        cmd_run(other, preset("mio-default"), third, log);
        CHECK_THROWS_AS(
            cmd_compare({(dir / "baseline.jsonl").string(),
                         (dir / "third" / "runs.jsonl").string()},
                        compare, log),
            std::invalid_argument);
    }
}

TEST_CASE("trace export averages coverage per budget fraction") {
    const fs::path dir = temp_dir("trace");
    save_suite((dir / "suite.json").string(), make_suite(2, 61));
    ExperimentManifest manifest = small_manifest(dir, "suite.json", AlgorithmKind::Dynamosa);
    manifest.repetitions = 2;

    std::ostringstream log;
    RunOptions options;
    options.out_dir = (dir / "runs").string();
    cmd_run(manifest, preset("dynamosa-default"), options, log);

    const std::string out = (dir / "mean.csv").string();
    cmd_trace_export({(dir / "runs" / "traces.csv").string()}, {"default"}, out, log);
    const std::string exported = slurp(out);
    CHECK(exported.find("label,budget_fraction,mean_coverage") != std::string::npos);
    CHECK(exported.find("default,") != std::string::npos);

    CHECK_THROWS_AS(cmd_trace_export({}, {}, out, log), std::invalid_argument);
}

TEST_CASE("manifests round-trip through JSON with defaults") {
    ExperimentManifest manifest;
    manifest.suite_path = "suite.json";
    manifest.master_seed = 99;
    manifest.algorithm = AlgorithmKind::Mio;
    manifest.tuner = DeTunerBlock{};
    manifest.objectives = {{1.0, 0.0}, {10.0, 1.0}};

    const nlohmann::json j = manifest_to_json(manifest);
    const ExperimentManifest back = manifest_from_json(j);
    CHECK(manifest_to_json(back) == j);
    CHECK(manifest_digest(back) == manifest_digest(manifest));
    CHECK(back.repetitions == 15);
    CHECK(back.checkpoints == 64);
    CHECK(back.split_ratio == 0.8);

    SUBCASE("minimal manifests read with defaults applied") {
        const nlohmann::json minimal{{"suite", "s.json"},
                                     {"master_seed", 1},
                                     {"algorithm", "dynamosa"},
                                     {"budget", 500}};
        const ExperimentManifest m = manifest_from_json(minimal);
        CHECK(m.repetitions == 15);
        CHECK(m.checkpoints == 64);
        CHECK(m.objectives.size() == 1);
        CHECK(m.objectives[0].alpha == 1.0);
    }
}
