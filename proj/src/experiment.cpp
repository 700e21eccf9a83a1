#include "sonadv/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sonadv/errors.hpp"
#include "sonadv/log.hpp"
#include "sonadv/seeds.hpp"
#include "sonadv/svg.hpp"

namespace sonadv::harness {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string g17(double v) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

fs::path out_file(const ExperimentConfig& config, const std::string& name) {
    return config.output_dir / name;
}

void ensure_output_dir(const ExperimentConfig& config) {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) {
        throw DataError("cannot create output directory " + config.output_dir.string() +
                        ": " + ec.message());
    }
}

// Stage outputs land under their final name only once complete.
void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw DataError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw DataError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

void remove_partials(const ExperimentConfig& config) {
    std::error_code ec;
    if (!fs::is_directory(config.output_dir, ec)) return;
    for (const auto& entry : fs::directory_iterator(config.output_dir, ec)) {
        if (entry.path().extension() == ".tmp") fs::remove(entry.path(), ec);
    }
}

template <class F>
void run_stage(const char* name, const ExperimentConfig& config,
               std::map<std::string, double>& timings, F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
        fn();
    } catch (const Error& e) {
        remove_partials(config);
        throw Error("stage " + std::string(name) + " failed: " + e.what());
    }
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    timings[std::string(name) + "_s"] = elapsed.count();
    log::info("stage " + std::string(name) + " took " + std::to_string(elapsed.count()) +
              " s");
}

std::vector<data::KpiRecord> load_pipeline_records(const ExperimentConfig& config) {
    if (config.generator) {
        const fs::path path = out_file(config, "dataset.csv");
        if (!fs::exists(path)) {
            throw DataError("missing " + path.string() + "; run the generate stage first");
        }
        return data::load_csv(path, data::default_schema(config.generator->n_enodebs));
    }
    return data::load_csv(*config.csv_path, data::default_schema(1));
}

nn::LabeledSet gather_rows(const Matrix& features, const std::vector<int>& labels,
                           const std::vector<std::size_t>& indices) {
    nn::LabeledSet set;
    set.features = Matrix(indices.size(), features.cols());
    set.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = features.row(indices[r]);
        std::copy(src.begin(), src.end(), set.features.row(r).begin());
        set.labels.push_back(labels[indices[r]]);
    }
    return set;
}

struct AttackFile {
    Matrix adversarial;
    std::vector<std::vector<std::size_t>> modified;
    std::vector<bool> success;
    std::vector<std::uint64_t> queries;
};

AttackFile load_attack_file(const ExperimentConfig& config, const std::string& tag,
                            std::size_t n_rows, std::size_t n_cols) {
    const fs::path path = out_file(config, "attack_" + tag + ".json");
    if (!fs::exists(path)) {
        throw DataError("missing " + path.string() + "; run the attack stage first");
    }
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    try {
        if (doc.at("schema_version").get<int>() != 1) {
            throw ParseError(path.string() + ": unsupported schema_version");
        }
        const auto& rows = doc.at("rows");
        if (rows.size() != n_rows) {
            throw DataError(path.string() + " holds " + std::to_string(rows.size()) +
                            " rows but the test partition has " + std::to_string(n_rows) +
                            "; re-run the attack stage");
        }
        AttackFile out;
        out.adversarial = Matrix(n_rows, n_cols);
        out.modified.reserve(n_rows);
        for (std::size_t r = 0; r < n_rows; ++r) {
            const auto& row = rows[r];
            const auto x = row.at("adversarial").get<std::vector<double>>();
            if (x.size() != n_cols) {
                throw DataError(path.string() + " row " + std::to_string(r) +
                                " width mismatch; re-run the attack stage");
            }
            std::copy(x.begin(), x.end(), out.adversarial.row(r).begin());
            out.modified.push_back(row.at("modified").get<std::vector<std::size_t>>());
            out.success.push_back(row.at("success").get<bool>());
            out.queries.push_back(row.at("queries").get<std::uint64_t>());
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

nn::MlpModel load_victim(const ExperimentConfig& config) {
    const fs::path path = out_file(config, "model.json");
    if (!fs::exists(path)) {
        throw DataError("missing " + path.string() + "; run the train stage first");
    }
    return nn::load_model(path);
}

struct DefenseJob {
    attacks::AttackSpec spec;
    std::string tag;
};

std::vector<DefenseJob> defense_jobs(const ExperimentConfig& config) {
    std::vector<DefenseJob> jobs;
    if (!config.defense) return jobs;
    if (config.defense->attack) {
        jobs.push_back({*config.defense->attack,
                        attacks::attack_kind(*config.defense->attack)});
        return jobs;
    }
    for (std::size_t i = 0; i < config.attack_specs.size(); ++i) {
        jobs.push_back({config.attack_specs[i], attack_file_tag(config, i)});
    }
    return jobs;
}

// Defense tag whose retrained model covers attack i of the config.
std::string defense_tag_for(const ExperimentConfig& config, std::size_t index) {
    if (config.defense && config.defense->attack) {
        return attacks::attack_kind(*config.defense->attack);
    }
    return attack_file_tag(config, index);
}

std::string format_param(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string attack_display(const attacks::AttackSpec& spec) {
    if (const auto* fgsm = std::get_if<attacks::FgsmConfig>(&spec)) {
        return "FGSM (eps=" + format_param(fgsm->epsilon) + ")";
    }
    const auto& jsma = std::get<attacks::JsmaConfig>(spec);
    return "JSMA (budget=" + std::to_string(jsma.max_features) + ")";
}

ordered_json importance_to_json(const explain::FeatureImportanceTable& table) {
    ordered_json rows = ordered_json::array();
    for (const auto& entry : table) {
        ordered_json row;
        row["feature"] = entry.encoded_index;
        row["name"] = entry.name;
        row["count"] = entry.nonzero_delta_count;
        row["mean_abs_delta"] = entry.mean_abs_delta;
        rows.push_back(std::move(row));
    }
    return rows;
}

ordered_json affected_to_json(const explain::AffectedFeatureReport& report) {
    ordered_json doc;
    ordered_json top = ordered_json::array();
    for (const auto& feature : report.top_features) {
        ordered_json row;
        row["encoded_name"] = feature.encoded_name;
        row["raw_name"] = feature.raw_name;
        row["group"] = explain::group_label(feature.group);
        row["count"] = feature.nonzero_delta_count;
        row["mean_abs_delta"] = feature.mean_abs_delta;
        top.push_back(std::move(row));
    }
    doc["top"] = std::move(top);
    ordered_json counts;
    counts[explain::group_label(data::FeatureGroup::TimeLocation)] =
        report.group_counts[0];
    counts[explain::group_label(data::FeatureGroup::Dependent)] = report.group_counts[1];
    counts[explain::group_label(data::FeatureGroup::Independent)] =
        report.group_counts[2];
    doc["group_counts"] = std::move(counts);
    return doc;
}

// The exact oracle tying the explanation table to the attack results: table
// counts must equal the column-wise aggregation of per-row modified sets.
void check_importance_against_attacks(const explain::FeatureImportanceTable& table,
                                      const std::vector<std::vector<std::size_t>>& modified,
                                      std::size_t width, const std::string& tag) {
    std::vector<std::size_t> counts(width, 0);
    for (const auto& row : modified) {
        for (std::size_t c : row) {
            if (c >= width) {
                throw InternalError("attack " + tag + " modified index out of range");
            }
            ++counts[c];
        }
    }
    for (const auto& entry : table) {
        if (counts[entry.encoded_index] != entry.nonzero_delta_count) {
            throw InternalError(
                "attack " + tag + " feature " + entry.name + ": delta count " +
                std::to_string(entry.nonzero_delta_count) +
                " does not match the aggregated modified-feature count " +
                std::to_string(counts[entry.encoded_index]));
        }
    }
}

ExperimentReport report_impl(const ExperimentConfig& config, ReportFormat format,
                             std::map<std::string, double> timings);

} // namespace

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.empty() || labels.empty()) {
        throw DataError("accuracy needs at least one prediction");
    }
    if (predictions.size() != labels.size()) {
        throw ShapeError("prediction count " + std::to_string(predictions.size()) +
                         " does not match label count " + std::to_string(labels.size()));
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

std::string attack_file_tag(const ExperimentConfig& config, std::size_t index) {
    if (index >= config.attack_specs.size()) {
        throw DataError("attack index " + std::to_string(index) + " out of range");
    }
    const std::string kind = attacks::attack_kind(config.attack_specs[index]);
    std::size_t same_kind = 0;
    for (const auto& spec : config.attack_specs) {
        if (attacks::attack_kind(spec) == kind) ++same_kind;
    }
    return same_kind > 1 ? kind + "_" + std::to_string(index) : kind;
}

PreparedData prepare_data(const ExperimentConfig& config) {
    std::vector<data::KpiRecord> records = load_pipeline_records(config);
    if (records.empty()) throw DataError("dataset holds no records");

    if (config.labeling.mode == LabelingConfig::Mode::Threshold) {
        data::label_records(records, config.labeling.threshold);
    }

    data::FeatureSchema schema;
    if (config.generator) {
        schema = data::default_schema(config.generator->n_enodebs);
    } else {
        std::set<std::string> ids;
        for (const auto& r : records) ids.insert(r.enodeb_id);
        schema = data::schema_for_enodebs({ids.begin(), ids.end()});
    }

    if (config.model.layer_dims.front() != schema.encoded_width()) {
        throw ConfigError("model.layer_dims[0] is " +
                          std::to_string(config.model.layer_dims.front()) +
                          " but the schema encodes " +
                          std::to_string(schema.encoded_width()) + " columns");
    }

    const data::RawEncoded encoded = data::encode(records, schema);
    const data::SplitIndices indices =
        data::split(encoded.labels, config.split.ratios,
                    derive_seed(config.seed, "split"), config.split.stratified);

    PreparedData prepared;
    prepared.schema = std::move(schema);
    prepared.n_records = records.size();
    for (int label : encoded.labels) {
        if (label == 1) {
            ++prepared.n_anomaly;
        } else {
            ++prepared.n_normal;
        }
    }

    nn::LabeledSet raw_train = gather_rows(encoded.features, encoded.labels, indices.train);
    nn::LabeledSet raw_valid = gather_rows(encoded.features, encoded.labels, indices.valid);
    nn::LabeledSet raw_test = gather_rows(encoded.features, encoded.labels, indices.test);

    prepared.scaler = data::fit_scaler(raw_train.features);
    prepared.train = {data::apply_scaler(raw_train.features, prepared.scaler),
                      std::move(raw_train.labels)};
    prepared.valid = {data::apply_scaler(raw_valid.features, prepared.scaler),
                      std::move(raw_valid.labels)};
    prepared.test = {data::apply_scaler(raw_test.features, prepared.scaler),
                     std::move(raw_test.labels)};
    return prepared;
}

void stage_generate(const ExperimentConfig& config) {
    if (!config.generator) {
        throw ConfigError("config reads dataset.csv_path; there is nothing to generate");
    }
    ensure_output_dir(config);
    data::GeneratorConfig generator = *config.generator;
    generator.seed = derive_seed(config.seed, "generate");
    const std::vector<data::KpiRecord> records = data::generate(generator);

    const fs::path path = out_file(config, "dataset.csv");
    const fs::path tmp = path.string() + ".tmp";
    data::save_csv(records, tmp);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw DataError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
    log::info("generated " + std::to_string(records.size()) + " records into " +
              path.string());
}

void stage_train(const ExperimentConfig& config) {
    ensure_output_dir(config);
    const PreparedData prepared = prepare_data(config);

    const nn::MlpModel init = nn::init_model(config.model.layer_dims, config.model.dropout,
                                             derive_seed(config.seed, "init"));
    nn::TrainConfig train_config = config.train;
    train_config.seed = derive_seed(config.seed, "train");

    const auto [model, report] =
        nn::train(init, prepared.train, prepared.valid, train_config);
    write_file_atomic(out_file(config, "model.json"), nn::to_json(model) + "\n");
    log::info("trained for " + std::to_string(report.epochs_run) + " epoch(s)" +
              (report.stopped_early ? " (stopped early)" : ""));
}

void stage_attack(const ExperimentConfig& config) {
    ensure_output_dir(config);
    const PreparedData prepared = prepare_data(config);
    const nn::MlpModel model = load_victim(config);

    for (std::size_t i = 0; i < config.attack_specs.size(); ++i) {
        const std::string tag = attack_file_tag(config, i);
        const attacks::TestSetAttack result = attacks::attack_test_set(
            model, prepared.test.features, prepared.test.labels, config.attack_specs[i]);

        ordered_json doc;
        doc["schema_version"] = 1;
        doc["kind"] = attacks::attack_kind(config.attack_specs[i]);
        ordered_json rows = ordered_json::array();
        for (const attacks::AttackResult& row : result.results) {
            ordered_json entry;
            entry["adversarial"] = row.adversarial_x;
            entry["modified"] = row.modified_features;
            entry["success"] = row.success;
            entry["queries"] = row.queries;
            rows.push_back(std::move(entry));
        }
        doc["rows"] = std::move(rows);
        write_file_atomic(out_file(config, "attack_" + tag + ".json"), doc.dump(2) + "\n");

        std::string csv;
        const auto& names = prepared.schema.encoded_names();
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (c > 0) csv += ',';
            csv += names[c];
        }
        csv += '\n';
        for (std::size_t r = 0; r < result.adversarial.rows(); ++r) {
            for (std::size_t c = 0; c < result.adversarial.cols(); ++c) {
                if (c > 0) csv += ',';
                csv += g17(result.adversarial.at(r, c));
            }
            csv += '\n';
        }
        write_file_atomic(out_file(config, "adversarial_" + tag + ".csv"), csv);
        log::info("attack " + tag + " crafted " +
                  std::to_string(result.adversarial.rows()) + " adversarial rows");
    }
}

void stage_defend(const ExperimentConfig& config) {
    if (!config.defense) throw ConfigError("config has no defense section");
    ensure_output_dir(config);
    const PreparedData prepared = prepare_data(config);
    const nn::MlpModel victim = load_victim(config);

    for (const DefenseJob& job : defense_jobs(config)) {
        defense::DefenseConfig defense_config;
        defense_config.attack_spec = job.spec;
        defense_config.augmentation_ratio = config.defense->ratio;
        defense_config.retrain = config.defense->retrain;
        defense_config.retrain.seed =
            derive_seed(config.seed, "defense.retrain." + job.tag);

        const auto [defended, report] = defense::adversarial_train(
            victim, prepared.train, prepared.valid, defense_config,
            derive_seed(config.seed, "defense.subset." + job.tag));

        write_file_atomic(out_file(config, "defended_" + job.tag + ".json"),
                          nn::to_json(defended) + "\n");
        ordered_json doc;
        doc["schema_version"] = 1;
        doc["attack"] = attacks::attack_kind(job.spec);
        doc["n_augmented"] = report.n_augmented;
        ordered_json validation;
        validation["pre_defense_adv_accuracy"] = report.pre_defense_adv_accuracy;
        validation["post_defense_adv_accuracy"] = report.post_defense_adv_accuracy;
        validation["post_defense_clean_accuracy"] = report.post_defense_clean_accuracy;
        doc["validation"] = std::move(validation);
        write_file_atomic(out_file(config, "defense_" + job.tag + ".json"),
                          doc.dump(2) + "\n");
        log::info("defense " + job.tag + " retrained with " +
                  std::to_string(report.n_augmented) + " augmented rows");
    }
}

void stage_explain(const ExperimentConfig& config) {
    ensure_output_dir(config);
    const PreparedData prepared = prepare_data(config);

    for (std::size_t i = 0; i < config.attack_specs.size(); ++i) {
        const std::string tag = attack_file_tag(config, i);
        const AttackFile attack = load_attack_file(config, tag, prepared.test.size(),
                                                   prepared.schema.encoded_width());
        const explain::FeatureImportanceTable table = explain::feature_deltas(
            prepared.test.features, attack.adversarial, prepared.schema);

        const fs::path path = out_file(config, "importance_" + tag + ".csv");
        const fs::path tmp = path.string() + ".tmp";
        explain::save_importance_csv(table, tmp);
        std::error_code ec;
        fs::rename(tmp, path, ec);
        if (ec) {
            throw DataError("cannot move " + tmp.string() +
                            " into place: " + ec.message());
        }
    }
}

namespace {

ExperimentReport report_impl(const ExperimentConfig& config, ReportFormat format,
                             std::map<std::string, double> timings) {
    const auto start = std::chrono::steady_clock::now();
    ensure_output_dir(config);
    const PreparedData prepared = prepare_data(config);
    const nn::MlpModel victim = load_victim(config);

    ExperimentReport report;
    report.n_records = prepared.n_records;
    report.n_normal = prepared.n_normal;
    report.n_anomaly = prepared.n_anomaly;
    report.encoded_width = prepared.schema.encoded_width();
    report.split_sizes = {prepared.train.size(), prepared.valid.size(),
                          prepared.test.size()};
    report.scaler = prepared.scaler;
    report.clean_accuracy =
        accuracy(nn::predict_all(victim, prepared.test.features), prepared.test.labels);

    const ordered_json config_echo = ordered_json::parse(config_to_json(config));
    ordered_json payload;
    payload["config"] = config_echo;
    ordered_json dataset;
    dataset["n_records"] = report.n_records;
    dataset["n_normal"] = report.n_normal;
    dataset["n_anomaly"] = report.n_anomaly;
    dataset["encoded_width"] = report.encoded_width;
    dataset["split_sizes"] = report.split_sizes;
    payload["dataset"] = std::move(dataset);
    ordered_json scaler;
    scaler["min"] = prepared.scaler.min;
    scaler["max"] = prepared.scaler.max;
    payload["scaler"] = std::move(scaler);
    payload["clean_accuracy"] = report.clean_accuracy;

    std::vector<ChartGroup> chart;
    ordered_json attack_sections = ordered_json::array();
    for (std::size_t i = 0; i < config.attack_specs.size(); ++i) {
        const std::string tag = attack_file_tag(config, i);
        const AttackFile attack = load_attack_file(config, tag, prepared.test.size(),
                                                   prepared.schema.encoded_width());

        AttackOutcome outcome;
        outcome.tag = tag;
        outcome.spec = config.attack_specs[i];
        outcome.adversarial_accuracy = accuracy(
            nn::predict_all(victim, attack.adversarial), prepared.test.labels);
        std::size_t total_modified = 0;
        for (const auto& row : attack.modified) total_modified += row.size();
        outcome.mean_modified_features =
            prepared.test.size() == 0
                ? 0.0
                : static_cast<double>(total_modified) /
                      static_cast<double>(prepared.test.size());
        outcome.importance = explain::feature_deltas(
            prepared.test.features, attack.adversarial, prepared.schema);
        check_importance_against_attacks(outcome.importance, attack.modified,
                                         prepared.schema.encoded_width(), tag);
        const explain::AffectedFeatureReport affected =
            explain::affected_feature_report(outcome.importance, 6, prepared.schema);

        ordered_json section;
        section["tag"] = tag;
        for (const auto& [key, value] : config_echo.at("attacks").at(i).items()) {
            section[key] = value;
        }
        section["adversarial_accuracy"] = outcome.adversarial_accuracy;
        section["mean_modified_features"] = outcome.mean_modified_features;
        section["importance"] = importance_to_json(outcome.importance);
        section["affected"] = affected_to_json(affected);

        ChartGroup group;
        group.label = attack_display(config.attack_specs[i]);
        group.clean = report.clean_accuracy;
        group.adversarial = outcome.adversarial_accuracy;

        if (config.defense) {
            const std::string defense_tag = defense_tag_for(config, i);
            const fs::path defended_path =
                out_file(config, "defended_" + defense_tag + ".json");
            if (!fs::exists(defended_path)) {
                throw DataError("missing " + defended_path.string() +
                                "; run the defend stage first");
            }
            const nn::MlpModel defended = nn::load_model(defended_path);
            outcome.defended = true;
            // Robust accuracy re-attacks the defended model; the stored
            // adversarial set only measures the victim.
            const attacks::TestSetAttack defended_attack = attacks::attack_test_set(
                defended, prepared.test.features, prepared.test.labels,
                config.attack_specs[i]);
            outcome.post_defense_adv_accuracy = accuracy(
                nn::predict_all(defended, defended_attack.adversarial),
                prepared.test.labels);
            outcome.post_defense_clean_accuracy = accuracy(
                nn::predict_all(defended, prepared.test.features), prepared.test.labels);

            const fs::path defense_path =
                out_file(config, "defense_" + defense_tag + ".json");
            if (fs::exists(defense_path)) {
                std::ifstream in(defense_path);
                json doc;
                try {
                    doc = json::parse(in);
                    outcome.n_augmented = doc.at("n_augmented").get<std::size_t>();
                } catch (const json::exception& e) {
                    throw ParseError(defense_path.string() + ": " + e.what());
                }
            }
            section["defended"] = true;
            section["defense_tag"] = defense_tag;
            section["n_augmented"] = outcome.n_augmented;
            section["post_defense_adv_accuracy"] = outcome.post_defense_adv_accuracy;
            section["post_defense_clean_accuracy"] = outcome.post_defense_clean_accuracy;
            group.defended = outcome.post_defense_adv_accuracy;
        } else {
            section["defended"] = false;
        }

        attack_sections.push_back(std::move(section));
        chart.push_back(std::move(group));
        report.attacks.push_back(std::move(outcome));
    }
    payload["attacks"] = std::move(attack_sections);
    report.payload_json = payload.dump(2);

    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    timings["report_s"] = elapsed.count();
    ordered_json timings_json;
    for (const auto& [key, value] : timings) timings_json[key] = value;
    report.timings_json = timings_json.dump(2);

    write_file_atomic(out_file(config, "report.json"), report_to_json(report) + "\n");
    write_file_atomic(out_file(config, "accuracy.svg"), render_accuracy_chart(chart));

    if (format == ReportFormat::Csv) {
        std::string csv = "key,value\n";
        csv += "n_records," + std::to_string(report.n_records) + "\n";
        csv += "n_normal," + std::to_string(report.n_normal) + "\n";
        csv += "n_anomaly," + std::to_string(report.n_anomaly) + "\n";
        csv += "encoded_width," + std::to_string(report.encoded_width) + "\n";
        csv += "train_size," + std::to_string(report.split_sizes[0]) + "\n";
        csv += "valid_size," + std::to_string(report.split_sizes[1]) + "\n";
        csv += "test_size," + std::to_string(report.split_sizes[2]) + "\n";
        csv += "clean_accuracy," + g17(report.clean_accuracy) + "\n";
        for (const AttackOutcome& outcome : report.attacks) {
            csv += outcome.tag + ".adversarial_accuracy," +
                   g17(outcome.adversarial_accuracy) + "\n";
            csv += outcome.tag + ".mean_modified_features," +
                   g17(outcome.mean_modified_features) + "\n";
            csv += outcome.tag + ".defended," + (outcome.defended ? "1" : "0") + "\n";
            if (outcome.defended) {
                csv += outcome.tag + ".n_augmented," +
                       std::to_string(outcome.n_augmented) + "\n";
                csv += outcome.tag + ".post_defense_adv_accuracy," +
                       g17(outcome.post_defense_adv_accuracy) + "\n";
                csv += outcome.tag + ".post_defense_clean_accuracy," +
                       g17(outcome.post_defense_clean_accuracy) + "\n";
            }
        }
        write_file_atomic(out_file(config, "report.csv"), csv);
    }
    return report;
}

} // namespace

ExperimentReport stage_report(const ExperimentConfig& config, ReportFormat format) {
    return report_impl(config, format, {});
}

std::string report_to_json(const ExperimentReport& report) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["payload"] = ordered_json::parse(report.payload_json);
    doc["timings"] = report.timings_json.empty()
                         ? ordered_json::object()
                         : ordered_json::parse(report.timings_json);
    return doc.dump(2);
}

ExperimentReport run_experiment(const ExperimentConfig& config, ReportFormat format) {
    std::map<std::string, double> timings;
    if (config.generator) {
        run_stage("generate", config, timings, [&] { stage_generate(config); });
    }
    run_stage("train", config, timings, [&] { stage_train(config); });
    run_stage("attack", config, timings, [&] { stage_attack(config); });
    if (config.defense) {
        run_stage("defend", config, timings, [&] { stage_defend(config); });
    }
    run_stage("explain", config, timings, [&] { stage_explain(config); });

    try {
        return report_impl(config, format, std::move(timings));
    } catch (const Error& e) {
        remove_partials(config);
        throw Error("stage report failed: " + std::string(e.what()));
    }
}

} // namespace sonadv::harness
