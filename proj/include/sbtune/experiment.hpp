#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sbtune/param_space.hpp"
#include "sbtune/stats.hpp"
#include "sbtune/subject.hpp"
#include "sbtune/tuner.hpp"

namespace sbtune {

/// Stable avalanche mix of the experiment inputs; bit-exact everywhere.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t config_digest,
                          std::uint64_t subject_key, std::uint64_t repetition);

/// FNV-1a key for a subject id string.
std::uint64_t subject_key(const std::string& subject_id);

/// Deterministic shuffle by seed, then ceil(ratio*n) subjects train and the
/// rest test. Throws when either side would be empty.
std::pair<std::vector<std::string>, std::vector<std::string>> split_suite(
    const std::vector<Subject>& suite, double ratio, std::uint64_t seed);

struct GridTunerBlock {
    std::optional<std::uint64_t> limit;  // evaluate only the first N grid ids
};
struct DeTunerBlock {
    DESettings settings;
};
using TunerBlock = std::variant<DeTunerBlock, GridTunerBlock>;

/// Everything that determines a campaign, including all randomness.
struct ExperimentManifest {
    std::string suite_path;
    std::uint64_t master_seed = 1;
    double split_ratio = 0.8;
    std::uint64_t split_seed = 1;
    AlgorithmKind algorithm = AlgorithmKind::Dynamosa;
    int repetitions = 15;
    std::uint64_t budget = 2000;
    int checkpoints = 64;
    std::optional<TunerBlock> tuner;
    std::vector<Objective> objectives;
    std::string output_dir = "out";
};

nlohmann::json manifest_to_json(const ExperimentManifest& manifest);
ExperimentManifest manifest_from_json(const nlohmann::json& j);
ExperimentManifest load_manifest(const std::string& path);
std::uint64_t manifest_digest(const ExperimentManifest& manifest);

std::vector<Subject> load_suite(const std::string& path);
void save_suite(const std::string& path, const std::vector<Subject>& suite);

struct RunRecord {
    std::string subject_id;
    std::string config_digest_hex;
    int repetition = 0;
    std::uint64_t seed = 0;
    double coverage = 0.0;
    double auc_value = 0.0;
    std::string trace_ref;
    std::string manifest_hex;
};

struct SuiteGenOptions {
    int count = 12;
    std::uint64_t seed = 1;
    SubjectParams params;
    std::string out_path = "suite.json";
};

/// Writes the suite JSON and prints per-subject goal counts.
void cmd_suite_generate(const SuiteGenOptions& options, std::ostream& log);

enum class SplitSelect { Train, Test, All };
SplitSelect split_select_from_name(const std::string& name);

struct RunOptions {
    SplitSelect split = SplitSelect::All;
    int jobs = 1;
    std::optional<double> wall_clock_seconds;  // excluded from golden outputs
    std::string out_dir;                       // overrides the manifest when set
};

/// Executes repetitions x subjects runs of one configuration; writes
/// runs.jsonl (ordered by subject id then repetition) and traces.csv.
std::vector<RunRecord> cmd_run(const ExperimentManifest& manifest, const Configuration& config,
                               const RunOptions& options, std::ostream& log);

struct TuneOutcome {
    std::vector<std::string> files_written;
    std::uint64_t algorithm_runs = 0;
};

/// DE mode: one tuning JSON per objective. Grid mode: one records file
/// (JSON + CSV) plus a best-configuration summary per objective. Tuning
/// always evaluates on the training split only.
TuneOutcome cmd_tune(const ExperimentManifest& manifest, int jobs, std::ostream& log);

struct CompareOptions {
    double alpha = 0.05;
    std::string out_prefix = "comparison";
    std::vector<std::string> labels;  // one per input file; derived when empty
};

struct CompareRow {
    std::string label;
    double mean_coverage = 0.0;
    ComparisonReport coverage;         // vs baseline (undefined for the baseline row)
    double mean_relative_coverage = 0.0;
    ComparisonReport relative;
};

/// First file is the baseline: emits a seven-column CSV (configuration,
/// mean coverage, A12, p, mean relative coverage, A12, p) plus a JSON copy.
std::vector<CompareRow> cmd_compare(const std::vector<std::string>& runs_files,
                                    const CompareOptions& options, std::ostream& log);

/// Averages coverage per budget fraction per input traces.csv and writes
/// plot-ready CSV columns (label, budget_fraction, mean_coverage).
void cmd_trace_export(const std::vector<std::string>& trace_files,
                      const std::vector<std::string>& labels, const std::string& out_path,
                      std::ostream& log);

} // namespace sbtune
