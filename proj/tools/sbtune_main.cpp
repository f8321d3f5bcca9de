// sbtune: search-based test-generation and hyperparameter-tuning workbench.
//
// Subcommands: suite generate, run, tune, compare, trace export.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbtune/experiment.hpp"
#include "sbtune/param_space.hpp"

namespace {

sbtune::Configuration load_config_source(const std::string& preset_name,
                                         const std::string& config_path) {
    if (!preset_name.empty() && !config_path.empty())
        throw std::invalid_argument("give either --preset or --config, not both");
    if (!preset_name.empty()) return sbtune::preset(preset_name);
    if (config_path.empty())
        throw std::invalid_argument("a configuration source is required (--preset or --config)");
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot read config '" + config_path + "'");
    nlohmann::json j;
    in >> j;
    return sbtune::config_from_json(j);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"search-based test generation and hyperparameter tuning workbench"};
    app.require_subcommand(1);

    // suite generate
    auto* suite = app.add_subcommand("suite", "suite file operations");
    suite->require_subcommand(1);
    auto* generate = suite->add_subcommand("generate", "generate a suite of synthetic subjects");
    sbtune::SuiteGenOptions gen_options;
    generate->add_option("--count", gen_options.count, "number of subjects");
    generate->add_option("--seed", gen_options.seed, "suite master seed");
    generate->add_option("--out", gen_options.out_path, "output suite JSON path");
    generate->add_option("--roots", gen_options.params.roots, "root predicates per subject");
    generate->add_option("--max-depth", gen_options.params.max_depth, "maximum nesting depth");
    generate->add_option("--child-prob", gen_options.params.child_prob,
                         "per-outcome child probability");
    generate->add_option("--slot-span", gen_options.params.slot_span,
                         "slots predicates may read");
    generate->add_option("--const-lo", gen_options.params.const_lo, "constant range low");
    generate->add_option("--const-hi", gen_options.params.const_hi, "constant range high");

    // run
    auto* run = app.add_subcommand("run", "run one configuration over a suite");
    std::string run_manifest_path, run_preset, run_config, run_split = "all", run_out;
    int run_jobs = 1;
    double wall_clock = 0.0;
    run->add_option("--manifest", run_manifest_path, "experiment manifest")->required();
    run->add_option("--preset", run_preset, "named preset configuration");
    run->add_option("--config", run_config, "configuration JSON file");
    run->add_option("--split", run_split, "train|test|all (default all)");
    run->add_option("--jobs", run_jobs, "worker threads");
    run->add_option("--out", run_out, "output directory (overrides manifest)");
    run->add_option("--wall-clock", wall_clock,
                    "per-run wall-clock limit in seconds (non-deterministic)");

    // tune
    auto* tune = app.add_subcommand("tune", "run the manifest's tuning campaign");
    std::string tune_manifest_path;
    int tune_jobs = 1;
    tune->add_option("--manifest", tune_manifest_path, "experiment manifest")->required();
    tune->add_option("--jobs", tune_jobs, "worker threads");

    // compare
    auto* compare = app.add_subcommand("compare", "compare result sets against a baseline");
    std::vector<std::string> compare_files;
    sbtune::CompareOptions compare_options;
    compare->add_option("--alpha", compare_options.alpha, "significance level");
    compare->add_option("--out", compare_options.out_prefix, "output prefix (.csv/.json)");
    compare->add_option("--labels", compare_options.labels, "labels, one per input file");
    compare->add_option("files", compare_files, "runs.jsonl files, baseline first")
        ->required()
        ->expected(-2);

    // trace export
    auto* trace = app.add_subcommand("trace", "trace file operations");
    trace->require_subcommand(1);
    auto* trace_export = trace->add_subcommand("export", "export mean coverage-over-budget data");
    std::vector<std::string> trace_files, trace_labels;
    std::string trace_out = "trace_export.csv";
    trace_export->add_option("--out", trace_out, "output CSV path");
    trace_export->add_option("--labels", trace_labels, "labels, one per input file");
    trace_export->add_option("files", trace_files, "traces.csv files")->required()->expected(-1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            sbtune::cmd_suite_generate(gen_options, std::cout);
        } else if (*run) {
            const sbtune::ExperimentManifest manifest = sbtune::load_manifest(run_manifest_path);
            const sbtune::Configuration config = load_config_source(run_preset, run_config);
            sbtune::RunOptions options;
            options.split = sbtune::split_select_from_name(run_split);
            options.jobs = run_jobs;
            options.out_dir = run_out;
            if (wall_clock > 0.0) options.wall_clock_seconds = wall_clock;
            sbtune::cmd_run(manifest, config, options, std::cout);
        } else if (*tune) {
            const sbtune::ExperimentManifest manifest = sbtune::load_manifest(tune_manifest_path);
            sbtune::cmd_tune(manifest, tune_jobs, std::cout);
        } else if (*compare) {
            sbtune::cmd_compare(compare_files, compare_options, std::cout);
        } else if (*trace_export) {
            sbtune::cmd_trace_export(trace_files, trace_labels, trace_out, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
