#include "sbtune/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sbtune/dynamosa.hpp"
#include "sbtune/mio.hpp"
#include "sbtune/parallel.hpp"
#include "sbtune/rng.hpp"

namespace fs = std::filesystem;

namespace sbtune {

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t config_digest,
                          std::uint64_t subject_key, std::uint64_t repetition) {
    std::uint64_t h = mix64(master_seed);
    h = mix64(h ^ config_digest);
    h = mix64(h ^ subject_key);
    h = mix64(h ^ repetition);
    return h;
}

std::uint64_t subject_key(const std::string& subject_id) { return fnv1a64(subject_id); }

std::pair<std::vector<std::string>, std::vector<std::string>> split_suite(
    const std::vector<Subject>& suite, double ratio, std::uint64_t seed) {
    const std::size_t n = suite.size();
    if (n < 2) throw std::invalid_argument("a split needs at least two subjects");
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must lie in (0,1)");
    const auto train_count =
        static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
    if (train_count == 0 || train_count >= n)
        throw std::invalid_argument("split ratio produces an empty side");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    RandomSource rng(seed);
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.next_below(i + 1)]);

    std::pair<std::vector<std::string>, std::vector<std::string>> split;
    for (std::size_t i = 0; i < n; ++i)
        (i < train_count ? split.first : split.second).push_back(suite[order[i]].id());
    return split;
}

namespace {

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

/// Shortest round-trip decimal form, shared by JSON and CSV outputs.
std::string format_double(double value) { return nlohmann::json(value).dump(); }

std::string objective_label(const Objective& objective) {
    auto one = [](double x) {
        if (x == std::floor(x) && std::fabs(x) < 1e15)
            return std::to_string(static_cast<long long>(x));
        return format_double(x);
    };
    return one(objective.alpha) + "+" + one(objective.beta);
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << contents;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_resume_marker(const std::string& dir, const std::string& stage,
                         const std::string& error) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    nlohmann::json marker{{"stage", stage}, {"error", error}};
    std::ofstream out(fs::path(dir) / "resume.json", std::ios::trunc);
    out << marker.dump(2) << '\n';
}

void clear_resume_marker(const std::string& dir) {
    std::error_code ec;
    fs::remove(fs::path(dir) / "resume.json", ec);
}

std::string file_stem(const std::string& path) { return fs::path(path).stem().string(); }

nlohmann::json tuner_block_to_json(const TunerBlock& block) {
    if (const auto* grid = std::get_if<GridTunerBlock>(&block)) {
        nlohmann::json j{{"mode", "grid"}};
        if (grid->limit) j["limit"] = *grid->limit;
        return j;
    }
    const DESettings& s = std::get<DeTunerBlock>(block).settings;
    nlohmann::json scale;
    if (s.scale_hi > s.scale_lo)
        scale = nlohmann::json::array({s.scale_lo, s.scale_hi});
    else
        scale = s.scale_lo;
    return nlohmann::json{{"mode", "de"},
                          {"pop_size", s.pop_size},
                          {"strategy", s.strategy == DeStrategy::Best1Bin ? "best-1-bin"
                                                                          : "rand-1-bin"},
                          {"scale", std::move(scale)},
                          {"cross_prob", s.cross_prob},
                          {"generations", s.generations},
                          {"include_default", s.include_default}};
}

TunerBlock tuner_block_from_json(const nlohmann::json& j) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "grid") {
        GridTunerBlock grid;
        if (j.contains("limit")) grid.limit = j.at("limit").get<std::uint64_t>();
        return grid;
    }
    if (mode != "de") throw std::invalid_argument("tuner mode must be 'de' or 'grid'");
    DeTunerBlock de;
    DESettings& s = de.settings;
    if (j.contains("pop_size")) s.pop_size = j.at("pop_size").get<int>();
    if (j.contains("strategy")) {
        const std::string name = j.at("strategy").get<std::string>();
        if (name == "best-1-bin")
            s.strategy = DeStrategy::Best1Bin;
        else if (name == "rand-1-bin")
            s.strategy = DeStrategy::Rand1Bin;
        else
            throw std::invalid_argument("unknown DE strategy '" + name + "'");
    }
    if (j.contains("scale")) {
        const nlohmann::json& scale = j.at("scale");
        if (scale.is_array()) {
            s.scale_lo = scale.at(0).get<double>();
            s.scale_hi = scale.at(1).get<double>();
        } else {
            s.scale_lo = scale.get<double>();
            s.scale_hi = s.scale_lo;
        }
    }
    if (j.contains("cross_prob")) s.cross_prob = j.at("cross_prob").get<double>();
    if (j.contains("generations")) s.generations = j.at("generations").get<int>();
    if (j.contains("include_default")) s.include_default = j.at("include_default").get<bool>();
    return de;
}

} // namespace

nlohmann::json manifest_to_json(const ExperimentManifest& m) {
    nlohmann::json objectives = nlohmann::json::array();
    for (const Objective& o : m.objectives) objectives.push_back({o.alpha, o.beta});
    nlohmann::json j{{"suite", m.suite_path},
                     {"master_seed", m.master_seed},
                     {"split_ratio", m.split_ratio},
                     {"split_seed", m.split_seed},
                     {"algorithm", algorithm_name(m.algorithm)},
                     {"repetitions", m.repetitions},
                     {"budget", m.budget},
                     {"checkpoints", m.checkpoints},
                     {"objectives", std::move(objectives)},
                     {"output_dir", m.output_dir}};
    if (m.tuner) j["tuner"] = tuner_block_to_json(*m.tuner);
    return j;
}

ExperimentManifest manifest_from_json(const nlohmann::json& j) {
    ExperimentManifest m;
    m.suite_path = j.at("suite").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("split_ratio")) m.split_ratio = j.at("split_ratio").get<double>();
    if (j.contains("split_seed")) m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
    if (j.contains("repetitions")) m.repetitions = j.at("repetitions").get<int>();
    m.budget = j.at("budget").get<std::uint64_t>();
    if (j.contains("checkpoints")) m.checkpoints = j.at("checkpoints").get<int>();
    if (j.contains("tuner")) m.tuner = tuner_block_from_json(j.at("tuner"));
    if (j.contains("objectives")) {
        for (const nlohmann::json& o : j.at("objectives"))
            m.objectives.push_back({o.at(0).get<double>(), o.at(1).get<double>()});
    }
    if (m.objectives.empty()) m.objectives.push_back({1.0, 0.0});
    if (j.contains("output_dir")) m.output_dir = j.at("output_dir").get<std::string>();
    if (!(m.split_ratio > 0.0 && m.split_ratio < 1.0))
        throw std::invalid_argument("manifest split_ratio must lie in (0,1)");
    if (m.repetitions < 1) throw std::invalid_argument("manifest repetitions must be >= 1");
    return m;
}

ExperimentManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read manifest '" + path + "'");
    nlohmann::json j;
    in >> j;
    return manifest_from_json(j);
}

std::uint64_t manifest_digest(const ExperimentManifest& manifest) {
    return fnv1a64(manifest_to_json(manifest).dump());
}

std::vector<Subject> load_suite(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read suite '" + path + "'");
    nlohmann::json j;
    in >> j;
    std::vector<Subject> suite;
    for (const nlohmann::json& js : j) suite.push_back(subject_from_json(js));
    if (suite.empty()) throw std::runtime_error("suite '" + path + "' is empty");
    std::set<std::string> ids;
    for (const Subject& s : suite)
        if (!ids.insert(s.id()).second)
            throw std::runtime_error("duplicate subject id '" + s.id() + "' in suite");
    return suite;
}

void save_suite(const std::string& path, const std::vector<Subject>& suite) {
    nlohmann::json j = nlohmann::json::array();
    for (const Subject& s : suite) j.push_back(subject_to_json(s));
    write_file(path, j.dump(2) + "\n");
}

void cmd_suite_generate(const SuiteGenOptions& options, std::ostream& log) {
    if (options.count < 1) throw std::invalid_argument("suite generation needs --count >= 1");
    std::vector<Subject> suite;
    suite.reserve(static_cast<std::size_t>(options.count));
    for (int i = 0; i < options.count; ++i) {
        std::ostringstream id;
        id << "subj-" << std::setw(3) << std::setfill('0') << i;
        suite.push_back(generate_subject(id.str(),
                                         mix64(options.seed + static_cast<std::uint64_t>(i)),
                                         options.params));
    }
    if (const fs::path dir = fs::path(options.out_path).parent_path(); !dir.empty())
        fs::create_directories(dir);
    save_suite(options.out_path, suite);
    log << "wrote " << suite.size() << " subjects to " << options.out_path << "\n";
    for (const Subject& s : suite)
        log << "  " << s.id() << ": " << s.nodes().size() << " nodes, " << s.goal_count()
            << " goals\n";
}

SplitSelect split_select_from_name(const std::string& name) {
    if (name == "train") return SplitSelect::Train;
    if (name == "test") return SplitSelect::Test;
    if (name == "all") return SplitSelect::All;
    throw std::invalid_argument("split must be one of train|test|all");
}

namespace {

std::vector<const Subject*> select_subjects(const std::vector<Subject>& suite,
                                            const ExperimentManifest& manifest,
                                            SplitSelect select) {
    std::vector<std::string> wanted;
    if (select == SplitSelect::All) {
        for (const Subject& s : suite) wanted.push_back(s.id());
    } else {
        auto [train, test] = split_suite(suite, manifest.split_ratio, manifest.split_seed);
        wanted = select == SplitSelect::Train ? std::move(train) : std::move(test);
    }
    std::sort(wanted.begin(), wanted.end());
    std::vector<const Subject*> out;
    for (const std::string& id : wanted)
        for (const Subject& s : suite)
            if (s.id() == id) out.push_back(&s);
    return out;
}

struct CellOutput {
    RunRecord record;
    CoverageTrace trace;
};

} // namespace

std::vector<RunRecord> cmd_run(const ExperimentManifest& manifest, const Configuration& config,
                               const RunOptions& options, std::ostream& log) {
    const std::string out_dir = options.out_dir.empty() ? manifest.output_dir : options.out_dir;
    try {
        const ParamSpace& space = space_for(manifest.algorithm);
        const Configuration normalized = space.normalize(config);
        space.validate(normalized);  // config/space mismatch fails before any run

        std::optional<DynaMosaConfig> dynamosa_config;
        std::optional<MioConfig> mio_config;
        if (manifest.algorithm == AlgorithmKind::Dynamosa)
            dynamosa_config = DynaMosaConfig::from_configuration(normalized);
        else
            mio_config = MioConfig::from_configuration(normalized);

        const std::vector<Subject> suite = load_suite(manifest.suite_path);
        const std::vector<const Subject*> subjects =
            select_subjects(suite, manifest, options.split);
        const std::uint64_t digest = config_digest(normalized);
        const std::string digest_hex = hex64(digest);
        const std::string manifest_hex = hex64(manifest_digest(manifest));

        const auto reps = static_cast<std::size_t>(manifest.repetitions);
        const std::size_t cell_count = subjects.size() * reps;
        std::vector<CellOutput> cells(cell_count);
        parallel_for(cell_count, options.jobs, [&](std::size_t i) {
            const Subject& subject = *subjects[i / reps];
            const auto rep = static_cast<int>(i % reps);
            const std::uint64_t seed = derive_seed(manifest.master_seed, digest,
                                                   subject_key(subject.id()),
                                                   static_cast<std::uint64_t>(rep));
            RandomSource rng(seed);
            Deadline deadline;
            if (options.wall_clock_seconds)
                deadline = std::chrono::steady_clock::now() +
                           std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                               std::chrono::duration<double>(*options.wall_clock_seconds));
            RunResult result =
                dynamosa_config ? run_dynamosa(subject, *dynamosa_config, manifest.budget,
                                               manifest.checkpoints, rng, nullptr, deadline)
                                : run_mio(subject, *mio_config, manifest.budget,
                                          manifest.checkpoints, rng, nullptr, deadline);
            CellOutput& cell = cells[i];
            cell.record = {subject.id(), digest_hex,        rep,
                           seed,         result.trace.final_coverage(), auc(result.trace),
                           "traces.csv", manifest_hex};
            cell.trace = std::move(result.trace);
        });

        fs::create_directories(out_dir);
        std::ostringstream runs;
        for (const CellOutput& cell : cells) {
            nlohmann::json line{{"subject", cell.record.subject_id},
                                {"config", cell.record.config_digest_hex},
                                {"repetition", cell.record.repetition},
                                {"seed", cell.record.seed},
                                {"coverage", cell.record.coverage},
                                {"auc", cell.record.auc_value},
                                {"trace", cell.record.trace_ref},
                                {"manifest", cell.record.manifest_hex}};
            runs << line.dump() << "\n";
        }
        write_file((fs::path(out_dir) / "runs.jsonl").string(), runs.str());

        std::ostringstream traces;
        traces << "# manifest=" << manifest_hex << "\n";
        traces << "subject,repetition,budget_fraction,coverage\n";
        for (const CellOutput& cell : cells)
            for (const auto& [fraction, coverage] : cell.trace.points)
                traces << cell.record.subject_id << "," << cell.record.repetition << ","
                       << format_double(fraction) << "," << format_double(coverage) << "\n";
        write_file((fs::path(out_dir) / "traces.csv").string(), traces.str());
        clear_resume_marker(out_dir);

        log << "ran " << cell_count << " runs (" << subjects.size() << " subjects x "
            << manifest.repetitions << " repetitions) into " << out_dir << "\n";
        std::vector<RunRecord> records;
        records.reserve(cells.size());
        for (CellOutput& cell : cells) records.push_back(std::move(cell.record));
        return records;
    } catch (const std::exception& e) {
        write_resume_marker(out_dir, "run", e.what());
        throw;
    }
}

namespace {

nlohmann::json tuning_result_to_json(const TuningResult& result, const Objective& objective,
                                     const std::string& manifest_hex) {
    nlohmann::json history = nlohmann::json::array();
    for (const GenerationStats& g : result.history)
        history.push_back({{"best", g.best_score}, {"scores", g.scores}});
    return nlohmann::json{{"objective", {objective.alpha, objective.beta}},
                          {"best_config", config_to_json(result.best_config)},
                          {"best_score", result.best_score},
                          {"history", std::move(history)},
                          {"score_evaluations", result.score_evaluations},
                          {"algorithm_runs", result.algorithm_runs},
                          {"manifest", manifest_hex}};
}

} // namespace

TuneOutcome cmd_tune(const ExperimentManifest& manifest, int jobs, std::ostream& log) {
    try {
        if (!manifest.tuner)
            throw std::invalid_argument("manifest has no tuner block");
        const std::vector<Subject> suite = load_suite(manifest.suite_path);
        const std::vector<const Subject*> train =
            select_subjects(suite, manifest, SplitSelect::Train);

        EvaluationTask task;
        task.algorithm = manifest.algorithm;
        task.subjects = train;
        task.repetitions = manifest.repetitions;
        task.budget = manifest.budget;
        task.checkpoints = manifest.checkpoints;

        const ParamSpace& space = space_for(manifest.algorithm);
        const std::string manifest_hex = hex64(manifest_digest(manifest));
        fs::create_directories(manifest.output_dir);

        TuneOutcome outcome;
        if (const auto* de = std::get_if<DeTunerBlock>(&*manifest.tuner)) {
            // the DE campaign runs once per objective
            for (std::size_t k = 0; k < manifest.objectives.size(); ++k) {
                const Objective& objective = manifest.objectives[k];
                RandomSource rng(derive_seed(manifest.master_seed, fnv1a64("tuner:de"),
                                             static_cast<std::uint64_t>(k), 0));
                const TuningResult result = de_tune(space, task, objective, de->settings, rng,
                                                    manifest.master_seed, jobs);
                const std::string path =
                    (fs::path(manifest.output_dir) /
                     ("tuning_de_" + objective_label(objective) + ".json"))
                        .string();
                write_file(path,
                           tuning_result_to_json(result, objective, manifest_hex).dump(2) + "\n");
                outcome.files_written.push_back(path);
                outcome.algorithm_runs += result.algorithm_runs;
                log << "DE " << objective_label(objective) << ": best score "
                    << format_double(result.best_score) << " after " << result.algorithm_runs
                    << " algorithm runs\n";
            }
            return outcome;
        }

        // grid mode: the raw records are computed once, best per objective after
        const auto& grid = std::get<GridTunerBlock>(*manifest.tuner);
        const std::vector<GridRecord> records =
            grid_tune(space, task, manifest.master_seed, jobs, grid.limit);
        for (const GridRecord& r : records)
            outcome.algorithm_runs += r.record.cells.size();

        nlohmann::json jrecords = nlohmann::json::array();
        for (const GridRecord& r : records)
            jrecords.push_back({{"grid_id", r.grid_id},
                                {"config", config_to_json(r.record.config)},
                                {"mean_coverage", r.record.mean_coverage},
                                {"mean_auc", r.record.mean_auc},
                                {"evaluations_spent", r.record.evaluations_spent}});
        const std::string records_path =
            (fs::path(manifest.output_dir) / "grid_records.json").string();
        write_file(records_path,
                   nlohmann::json{{"manifest", manifest_hex}, {"records", std::move(jrecords)}}
                           .dump(2) +
                       "\n");
        outcome.files_written.push_back(records_path);

        std::ostringstream csv;
        csv << "# manifest=" << manifest_hex << "\n";
        csv << "grid_id";
        for (const ParamSpec& spec : space.specs()) csv << "," << spec.name;
        csv << ",mean_coverage,mean_auc";
        for (const Objective& o : manifest.objectives) csv << ",score_" << objective_label(o);
        csv << "\n";
        for (const GridRecord& r : records) {
            csv << r.grid_id;
            for (const ParamSpec& spec : space.specs())
                csv << "," << param_value_str(r.record.config.at(spec.name));
            csv << "," << format_double(r.record.mean_coverage) << ","
                << format_double(r.record.mean_auc);
            for (const Objective& o : manifest.objectives)
                csv << "," << format_double(objective_score(r.record, o));
            csv << "\n";
        }
        const std::string csv_path = (fs::path(manifest.output_dir) / "grid_records.csv").string();
        write_file(csv_path, csv.str());
        outcome.files_written.push_back(csv_path);

        for (const Objective& objective : manifest.objectives) {
            const BestSelection best = select_best(records, objective);
            nlohmann::json summary{{"objective", {objective.alpha, objective.beta}},
                                   {"grid_id", best.grid_id},
                                   {"config", config_to_json(best.config)},
                                   {"score", best.score},
                                   {"manifest", manifest_hex}};
            const std::string path =
                (fs::path(manifest.output_dir) /
                 ("best_gs_" + objective_label(objective) + ".json"))
                    .string();
            write_file(path, summary.dump(2) + "\n");
            outcome.files_written.push_back(path);
            log << "GS " << objective_label(objective) << ": grid id " << best.grid_id
                << " scores " << format_double(best.score) << "\n";
        }
        return outcome;
    } catch (const std::exception& e) {
        write_resume_marker(manifest.output_dir, "tune", e.what());
        throw;
    }
}

namespace {

struct LoadedRuns {
    std::string label;
    std::string manifest_hex;
    // per subject, per repetition order as found in the file
    std::map<std::string, std::vector<double>> coverage_by_subject;
};

std::string runs_label(const std::string& path) {
    // "out/tuned/runs.jsonl" reads better as "tuned" than as "runs"
    const fs::path p(path);
    if (p.stem() == "runs" && p.has_parent_path() && !p.parent_path().filename().empty())
        return p.parent_path().filename().string();
    return p.stem().string();
}

LoadedRuns load_runs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read runs file '" + path + "'");
    LoadedRuns runs;
    runs.label = runs_label(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        runs.coverage_by_subject[j.at("subject").get<std::string>()].push_back(
            j.at("coverage").get<double>());
        if (runs.manifest_hex.empty() && j.contains("manifest"))
            runs.manifest_hex = j.at("manifest").get<std::string>();
    }
    if (runs.coverage_by_subject.empty())
        throw std::runtime_error("runs file '" + path + "' has no records");
    return runs;
}

} // namespace

std::vector<CompareRow> cmd_compare(const std::vector<std::string>& runs_files,
                                    const CompareOptions& options, std::ostream& log) {
    if (runs_files.size() < 2)
        throw std::invalid_argument("compare needs a baseline and at least one candidate");
    if (!options.labels.empty() && options.labels.size() != runs_files.size())
        throw std::invalid_argument("label count must match input count");

    std::vector<LoadedRuns> sets;
    sets.reserve(runs_files.size());
    for (std::size_t i = 0; i < runs_files.size(); ++i) {
        sets.push_back(load_runs(runs_files[i]));
        if (!options.labels.empty()) sets.back().label = options.labels[i];
    }

    std::vector<std::string> subjects;
    for (const auto& [id, values] : sets.front().coverage_by_subject) subjects.push_back(id);
    for (const LoadedRuns& runs : sets) {
        std::vector<std::string> ids;
        for (const auto& [id, values] : runs.coverage_by_subject) ids.push_back(id);
        if (ids != subjects)
            throw std::invalid_argument("result sets cover different subject sets");
    }

    // per-run pooled samples and per-subject means
    std::vector<SampleSet> pooled(sets.size());
    std::vector<std::vector<double>> mean_matrix(sets.size());
    for (std::size_t c = 0; c < sets.size(); ++c) {
        pooled[c].label = sets[c].label;
        for (const std::string& id : subjects) {
            const std::vector<double>& values = sets[c].coverage_by_subject.at(id);
            pooled[c].values.insert(pooled[c].values.end(), values.begin(), values.end());
            mean_matrix[c].push_back(std::accumulate(values.begin(), values.end(), 0.0) /
                                     static_cast<double>(values.size()));
        }
    }
    const std::vector<double> relative_means = relative_coverage(mean_matrix);

    // per-run relative samples: min-max over all runs of all sets per subject
    std::vector<SampleSet> relative_pooled(sets.size());
    for (std::size_t s = 0; s < subjects.size(); ++s) {
        double lo = sets.front().coverage_by_subject.at(subjects[s]).front();
        double hi = lo;
        for (const LoadedRuns& runs : sets)
            for (const double v : runs.coverage_by_subject.at(subjects[s])) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        for (std::size_t c = 0; c < sets.size(); ++c) {
            relative_pooled[c].label = sets[c].label;
            for (const double v : sets[c].coverage_by_subject.at(subjects[s]))
                relative_pooled[c].values.push_back(hi == lo ? 1.0 : (v - lo) / (hi - lo));
        }
    }

    auto mean_of = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };

    std::vector<CompareRow> rows(sets.size());
    for (std::size_t c = 0; c < sets.size(); ++c) {
        rows[c].label = sets[c].label;
        rows[c].mean_coverage = mean_of(pooled[c].values);
        rows[c].mean_relative_coverage = relative_means[c];
        if (c == 0) continue;
        rows[c].coverage = mann_whitney_u(pooled[c], pooled[0], options.alpha);
        rows[c].relative = mann_whitney_u(relative_pooled[c], relative_pooled[0], options.alpha);
    }

    std::ostringstream csv;
    csv << "# sources=";
    for (std::size_t c = 0; c < sets.size(); ++c)
        csv << (c ? ";" : "") << sets[c].label << ":" << sets[c].manifest_hex;
    csv << "\n";
    csv << "configuration,mean_coverage,a12,p_value,mean_relative_coverage,relative_a12,"
           "relative_p_value\n";
    for (std::size_t c = 0; c < rows.size(); ++c) {
        const CompareRow& row = rows[c];
        csv << row.label << "," << format_double(row.mean_coverage) << ",";
        if (c > 0)
            csv << format_double(row.coverage.a12_value) << ","
                << format_double(row.coverage.p_value);
        else
            csv << ",";
        csv << "," << format_double(row.mean_relative_coverage) << ",";
        if (c > 0)
            csv << format_double(row.relative.a12_value) << ","
                << format_double(row.relative.p_value);
        else
            csv << ",";
        csv << "\n";
    }
    write_file(options.out_prefix + ".csv", csv.str());

    nlohmann::json jrows = nlohmann::json::array();
    for (std::size_t c = 0; c < rows.size(); ++c) {
        nlohmann::json jr{{"configuration", rows[c].label},
                          {"mean_coverage", rows[c].mean_coverage},
                          {"mean_relative_coverage", rows[c].mean_relative_coverage}};
        if (c > 0) {
            jr["a12"] = rows[c].coverage.a12_value;
            jr["p_value"] = rows[c].coverage.p_value;
            jr["significant"] = rows[c].coverage.significant;
            jr["relative_a12"] = rows[c].relative.a12_value;
            jr["relative_p_value"] = rows[c].relative.p_value;
            jr["relative_significant"] = rows[c].relative.significant;
        }
        jrows.push_back(std::move(jr));
    }
    nlohmann::json sources = nlohmann::json::array();
    for (const LoadedRuns& runs : sets)
        sources.push_back({{"label", runs.label}, {"manifest", runs.manifest_hex}});
    nlohmann::json report{
        {"alpha", options.alpha},
        {"baseline", sets.front().label},
        {"rows", std::move(jrows)},
        {"sources", std::move(sources)},
        {"metadata",
         {{"coverage_samples", "per-run values pooled across subjects and repetitions"},
          {"relative_mean", "min-max of per-subject mean coverage over all compared sets"},
          {"relative_samples", "per-run min-max within subject over all compared sets"}}}};
    write_file(options.out_prefix + ".json", report.dump(2) + "\n");

    log << "compared " << sets.size() << " result sets against baseline '" << sets.front().label
        << "' (alpha " << options.alpha << ")\n";
    return rows;
}

void cmd_trace_export(const std::vector<std::string>& trace_files,
                      const std::vector<std::string>& labels, const std::string& out_path,
                      std::ostream& log) {
    if (trace_files.empty()) throw std::invalid_argument("trace export needs input files");
    if (!labels.empty() && labels.size() != trace_files.size())
        throw std::invalid_argument("label count must match input count");

    std::ostringstream out;
    std::ostringstream sources;
    struct Averaged {
        std::string label;
        std::map<double, std::pair<double, std::size_t>> by_fraction;
    };
    std::vector<Averaged> averaged;

    for (std::size_t f = 0; f < trace_files.size(); ++f) {
        std::ifstream in(trace_files[f]);
        if (!in) throw std::runtime_error("cannot read traces file '" + trace_files[f] + "'");
        Averaged avg;
        avg.label = labels.empty() ? file_stem(trace_files[f]) : labels[f];
        std::string line;
        bool header_seen = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (line.front() == '#') {
                sources << (sources.tellp() > 0 ? ";" : "") << avg.label << ":"
                        << line.substr(line.find('=') != std::string::npos
                                           ? line.find('=') + 1
                                           : 1);
                continue;
            }
            if (!header_seen) {  // column header
                header_seen = true;
                continue;
            }
            std::istringstream row(line);
            std::string subject, rep, fraction, coverage;
            if (!std::getline(row, subject, ',') || !std::getline(row, rep, ',') ||
                !std::getline(row, fraction, ',') || !std::getline(row, coverage))
                throw std::runtime_error("malformed traces row in '" + trace_files[f] + "'");
            auto& slot = avg.by_fraction[std::stod(fraction)];
            slot.first += std::stod(coverage);
            ++slot.second;
        }
        averaged.push_back(std::move(avg));
    }

    out << "# sources=" << sources.str() << "\n";
    out << "label,budget_fraction,mean_coverage\n";
    for (const Averaged& avg : averaged)
        for (const auto& [fraction, sum_count] : avg.by_fraction)
            out << avg.label << "," << format_double(fraction) << ","
                << format_double(sum_count.first / static_cast<double>(sum_count.second)) << "\n";
    write_file(out_path, out.str());
    log << "wrote mean coverage curves for " << averaged.size() << " trace sets to " << out_path
        << "\n";
}

} // namespace sbtune
