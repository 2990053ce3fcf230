// duelrl: corridor experiment runner.
//
//   duelrl run --config exp.cfg [--out DIR] [--seeds 1..5] [--jobs N]
//   duelrl aggregate 'results/se_*.csv' --out DIR
//   duelrl metric --agent A --baseline B --human H --random R
//   duelrl saliency --checkpoint FILE --out FILE
//   duelrl oracle-dump --actions N [--epsilon E] [--out FILE]
//
// Exit codes: 0 success, 1 usage or invalid config, 2 runtime failure.

#include "duel/experiment.hpp"
#include "duel/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dueling network corridor experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(DUEL_VERSION));

    std::string config_path;
    std::string out_override;
    std::string seeds_override;
    std::size_t jobs = 0;
    auto* run = app.add_subcommand("run", "run every (architecture, action count, seed) in a config");
    run->add_option("--config", config_path, "key = value experiment file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_override, "output directory (overrides the config)");
    run->add_option("--seeds", seeds_override, "seed list such as 1..5 or 1,3,7 (overrides the config)");
    run->add_option("--jobs", jobs, "parallel runs (overrides the config)")->check(CLI::PositiveNumber);

    std::string pattern;
    std::string agg_out = "results";
    auto* aggregate = app.add_subcommand("aggregate", "median SE curve per (architecture, action count)");
    aggregate->add_option("inputs", pattern, "CSV glob such as 'results/se_*.csv', or a directory")->required();
    aggregate->add_option("--out", agg_out, "output directory");

    duel::ScoreRecord rec;
    auto* metric = app.add_subcommand("metric", "normalised improvement over the better of human and baseline");
    metric->add_option("--agent", rec.agent)->required();
    metric->add_option("--baseline", rec.baseline)->required();
    metric->add_option("--human", rec.human)->required();
    metric->add_option("--random", rec.random)->required();

    std::string checkpoint;
    std::string saliency_out;
    auto* saliency = app.add_subcommand("saliency", "per-cell value and advantage saliency of a dueling checkpoint");
    saliency->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    saliency->add_option("--out", saliency_out)->required();

    std::size_t n_actions = 5;
    double epsilon = 0.001;
    double tolerance = 1e-10;
    std::string oracle_out;
    auto* oracle = app.add_subcommand("oracle-dump", "exact Q*, Q^pi, V^pi, A^pi table");
    oracle->add_option("--actions", n_actions)->check(CLI::IsMember({5, 10, 20}));
    oracle->add_option("--epsilon", epsilon)->check(CLI::Range(0.0, 1.0));
    oracle->add_option("--tol", tolerance)->check(CLI::PositiveNumber);
    oracle->add_option("--out", oracle_out, "output file (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    try {
        if (*run) {
            duel::ExperimentConfig config = duel::load_config(config_path);
            if (!out_override.empty()) config.out_dir = out_override;
            if (!seeds_override.empty()) config.seeds = duel::parse_seed_list(seeds_override);
            if (jobs) config.jobs = jobs;
            config.validate();
            const duel::RunSummary summary = duel::run_experiment(config);
            for (const auto& o : summary.outputs)
                std::cout << o.csv.string() << "  " << o.wall_seconds << " s\n";
            std::cout << summary.manifest.string() << '\n';
        } else if (*aggregate) {
            const auto inputs = duel::expand_glob(pattern);
            if (inputs.empty()) {
                std::cerr << "aggregate: no files match '" << pattern << "'\n";
                return kUsage;
            }
            for (const auto& path : duel::aggregate_curves(inputs, agg_out)) std::cout << path.string() << '\n';
        } else if (*metric) {
            const double m = duel::improvement_metric(rec);
            std::printf("%.17g\n%.2f%%\n", m, 100.0 * m);
        } else if (*saliency) {
            duel::dump_saliency(checkpoint, saliency_out);
            std::cout << saliency_out << '\n';
        } else if (*oracle) {
            const std::string csv = duel::oracle_dump(n_actions, epsilon, tolerance);
            if (oracle_out.empty()) std::cout << csv;
            else duel::write_file_atomic(oracle_out, csv);
        }
    } catch (const duel::ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return 0;
}
