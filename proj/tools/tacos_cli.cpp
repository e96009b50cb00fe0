#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "tacos/acceptance.hpp"
#include "tacos/experiment.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"time-adaptive control and sensing experiments"};
    app.require_subcommand(1);

    std::string config_path, output_root, artifact_dir, suite = "fast";

    CLI::App* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--output-root", output_root,
                    "artifact root (default $TACOS_OUT_ROOT or ./results)");

    CLI::App* summ = app.add_subcommand("summarize", "aggregate an experiment's artifacts");
    summ->add_option("--dir", artifact_dir, "experiment artifact directory")->required();

    CLI::App* plot = app.add_subcommand("emit-plotdata",
                                        "write per-figure tables and SVG charts");
    plot->add_option("--dir", artifact_dir, "experiment artifact directory")->required();

    CLI::App* verify = app.add_subcommand("verify", "run the acceptance criteria");
    verify->add_option("--suite", suite, "fast (no training) | full (all criteria)")
        ->check(CLI::IsMember({"fast", "full"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            tacos::ExperimentConfig e =
                tacos::ExperimentConfig::from_config(tacos::KvConfig::parse_file(config_path));
            const fs::path root = tacos::resolve_output_root(output_root);
            const int failures = tacos::run_experiment(e, root);
            tacos::emit_plotdata(root / e.output);
            if (failures > 0) {
                std::cerr << failures << " run(s) failed; partial results kept under "
                          << (root / e.output) << "\n";
                return 1;
            }
            std::cout << "artifacts written to " << (root / e.output) << "\n";
            return 0;
        }
        if (*summ) {
            auto summaries = tacos::summarize(artifact_dir);
            tacos::write_summary_csv(artifact_dir, summaries);
            std::cout << "cell,return_mean,return_se,interactions_mean,n_seeds\n";
            for (const auto& s : summaries)
                std::cout << s.cell << ',' << s.eval_return.mean << ',' << s.eval_return.se << ','
                          << s.interactions.mean << ',' << s.n_seeds << "\n";
            return 0;
        }
        if (*plot) {
            tacos::emit_plotdata(artifact_dir);
            std::cout << "plot data written under " << artifact_dir << "\n";
            return 0;
        }
        if (*verify) {
            const auto results = tacos::run_acceptance(suite == "fast");
            int failures = 0;
            for (const auto& r : results) {
                std::cout << (r.pass ? "[pass] " : "[FAIL] ") << "criterion " << r.id << ": "
                          << r.name << " — " << r.detail << "\n";
                failures += r.pass ? 0 : 1;
            }
            return failures;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 0;
}
