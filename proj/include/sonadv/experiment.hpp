#ifndef SONADV_EXPERIMENT_HPP
#define SONADV_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sonadv/attacks.hpp"
#include "sonadv/dataset.hpp"
#include "sonadv/defense.hpp"
#include "sonadv/explain.hpp"
#include "sonadv/nn.hpp"

namespace sonadv::harness {

// Fraction of predictions matching labels. Throws DataError on empty input.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

struct LabelingConfig {
    enum class Mode { Threshold, AsIs };
    Mode mode = Mode::Threshold;
    double threshold = 5.0; // percent drop rate
};

struct SplitConfig {
    std::array<double, 3> ratios{0.7, 0.15, 0.15};
    bool stratified = true;
};

struct ModelConfig {
    std::vector<std::size_t> layer_dims{26, 256, 256, 256, 2};
    double dropout = 0.4;
};

struct DefensePlan {
    double ratio = 1.0;
    // Augmentation attack; when absent each evaluated attack defends itself.
    std::optional<attacks::AttackSpec> attack;
    nn::TrainConfig retrain;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::optional<data::GeneratorConfig> generator; // exactly one of
    std::optional<std::filesystem::path> csv_path;  // generator / csv_path
    LabelingConfig labeling;
    SplitConfig split;
    ModelConfig model;
    nn::TrainConfig train;
    std::vector<attacks::AttackSpec> attack_specs;
    std::optional<DefensePlan> defense;
    std::filesystem::path output_dir = "out";
};

// The paper-shaped defaults: 4464 synthetic records, 3x256 MLP, FGSM eps 0.1
// and JSMA budget 6, adversarial training at ratio 1.
ExperimentConfig default_config();

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical JSON echo of a config (defaults filled in, stable key order).
std::string config_to_json(const ExperimentConfig& config);

// The materialized data pipeline for a config: records loaded (dataset.csv
// under output_dir for generator configs), labeled, encoded, split, and
// scaled with train-set min/max. Every stage rebuilds its data through this,
// which is what makes staged and monolithic runs agree.
struct PreparedData {
    data::FeatureSchema schema;
    nn::LabeledSet train;
    nn::LabeledSet valid;
    nn::LabeledSet test;
    data::ScalerParams scaler;
    std::size_t n_records = 0;
    std::size_t n_normal = 0;
    std::size_t n_anomaly = 0;
};
PreparedData prepare_data(const ExperimentConfig& config);

struct AttackOutcome {
    std::string tag; // file tag, e.g. "fgsm"
    attacks::AttackSpec spec;
    double adversarial_accuracy = 0.0;
    double mean_modified_features = 0.0;
    explain::FeatureImportanceTable importance;
    bool defended = false;
    std::size_t n_augmented = 0;
    double post_defense_adv_accuracy = 0.0;
    double post_defense_clean_accuracy = 0.0;
};

struct ExperimentReport {
    std::string payload_json; // determinism-checked payload, serialized
    std::string timings_json; // wall-clock per stage, excluded from the payload

    // Typed mirror of the payload for in-process consumers.
    std::size_t n_records = 0;
    std::size_t n_normal = 0;
    std::size_t n_anomaly = 0;
    std::size_t encoded_width = 0;
    std::array<std::size_t, 3> split_sizes{};
    double clean_accuracy = 0.0;
    std::vector<AttackOutcome> attacks;
    data::ScalerParams scaler;
};

// Full report file content: {schema_version, payload, timings}.
std::string report_to_json(const ExperimentReport& report);

enum class ReportFormat { Json, Csv };

// Pipeline stages. Each works against files under config.output_dir so the
// CLI can reproduce an experiment stage by stage; `run_experiment` executes
// them in order. A failing stage removes the files it had started writing.
void stage_generate(const ExperimentConfig& config); // dataset.csv
void stage_train(const ExperimentConfig& config);    // model.json
void stage_attack(const ExperimentConfig& config);   // adversarial_<tag>.csv, attack_<tag>.json
void stage_defend(const ExperimentConfig& config);   // defended_<tag>.json, defense_<tag>.json
void stage_explain(const ExperimentConfig& config);  // importance_<tag>.csv
ExperimentReport stage_report(const ExperimentConfig& config,
                              ReportFormat format = ReportFormat::Json);

ExperimentReport run_experiment(const ExperimentConfig& config,
                                ReportFormat format = ReportFormat::Json);

// File tag for attack i in the config ("fgsm"/"jsma", index-suffixed when
// the same kind appears more than once).
std::string attack_file_tag(const ExperimentConfig& config, std::size_t index);

int cli_main(int argc, char** argv);

} // namespace sonadv::harness

#endif
