#include "sonadv/experiment.hpp"

#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "sonadv/errors.hpp"

namespace sonadv::harness {

namespace {

struct CliOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    std::string format = "json";
};

void add_common_flags(CLI::App* sub, CliOptions& opts) {
    sub->add_option("--config", opts.config_path,
                    "Experiment config JSON file (built-in defaults when omitted)");
    sub->add_option("--seed", opts.seed, "Master seed, overriding the config")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    sub->add_option("--out", opts.out, "Output directory, overriding the config");
    sub->add_option("--format", opts.format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}));
}

} // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Abnormal-KPI detector experiments: train an MLP on E-RAB drop-rate "
                 "records, craft FGSM/JSMA adversarial examples, retrain defensively, "
                 "and rank the features each attack perturbs"};
    app.require_subcommand(1);

    CliOptions opts;
    const std::vector<std::pair<std::string, std::string>> stages = {
        {"run", "Execute the full pipeline and write the report"},
        {"generate", "Write the synthetic dataset CSV"},
        {"train", "Train the detector and write model.json"},
        {"attack", "Craft adversarial examples for each configured attack"},
        {"defend", "Adversarially retrain the detector"},
        {"explain", "Rank features by adversarial perturbation"},
        {"report", "Assemble the report from stage outputs"},
    };
    for (const auto& [name, description] : stages) {
        add_common_flags(app.add_subcommand(name, description), opts);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ExperimentConfig config =
            opts.config_path.empty() ? default_config() : load_config(opts.config_path);
        if (opts.seed_set) config.seed = opts.seed;
        if (!opts.out.empty()) config.output_dir = opts.out;
        const ReportFormat format =
            opts.format == "csv" ? ReportFormat::Csv : ReportFormat::Json;

        const std::string stage = app.get_subcommands().front()->get_name();
        if (stage == "run") {
            run_experiment(config, format);
        } else if (stage == "generate") {
            stage_generate(config);
        } else if (stage == "train") {
            stage_train(config);
        } else if (stage == "attack") {
            stage_attack(config);
        } else if (stage == "defend") {
            stage_defend(config);
        } else if (stage == "explain") {
            stage_explain(config);
        } else {
            stage_report(config, format);
        }
    } catch (const Error& e) {
        std::cerr << "sonadv: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "sonadv: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace sonadv::harness
