#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "sonadv/errors.hpp"
#include "sonadv/experiment.hpp"

namespace sonadv::harness {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void expect_object(const json& value, const std::string& path) {
    if (!value.is_object()) throw ConfigError(path + ": expected a JSON object");
}

void expect_keys(const json& obj, const std::string& path,
                 std::initializer_list<std::string_view> keys) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
            throw ConfigError(path + ": unknown key \"" + it.key() + "\"");
        }
    }
}

double get_real(const json& obj, const std::string& path, const char* key,
                double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return v.get<double>();
}

std::uint64_t get_u64(const json& obj, const std::string& path, const char* key,
                      std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned()) {
        throw ConfigError(path + "." + key + ": expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

std::size_t get_count(const json& obj, const std::string& path, const char* key,
                      std::size_t fallback) {
    return static_cast<std::size_t>(get_u64(obj, path, key, fallback));
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

data::GeneratorConfig parse_generator(const json& obj, const std::string& path) {
    expect_object(obj, path);
    expect_keys(obj, path,
                {"n_enodebs", "n_days", "anomaly_rate", "tnl_anomaly_share",
                 "drop_rate_anomaly_threshold"});
    data::GeneratorConfig g;
    g.n_enodebs = get_count(obj, path, "n_enodebs", g.n_enodebs);
    g.n_days = get_count(obj, path, "n_days", g.n_days);
    g.anomaly_rate = get_real(obj, path, "anomaly_rate", g.anomaly_rate);
    g.tnl_anomaly_share = get_real(obj, path, "tnl_anomaly_share", g.tnl_anomaly_share);
    g.drop_rate_anomaly_threshold =
        get_real(obj, path, "drop_rate_anomaly_threshold", g.drop_rate_anomaly_threshold);
    if (g.n_enodebs == 0) throw ConfigError(path + ".n_enodebs: must be positive");
    if (g.n_days == 0) throw ConfigError(path + ".n_days: must be positive");
    if (!(g.anomaly_rate > 0.0 && g.anomaly_rate < 1.0)) {
        throw ConfigError(path + ".anomaly_rate: must lie in (0,1)");
    }
    if (!(g.tnl_anomaly_share >= 0.0 && g.tnl_anomaly_share <= 1.0)) {
        throw ConfigError(path + ".tnl_anomaly_share: must lie in [0,1]");
    }
    if (!(g.drop_rate_anomaly_threshold > 0.0)) {
        throw ConfigError(path + ".drop_rate_anomaly_threshold: must be positive");
    }
    return g;
}

nn::TrainConfig parse_train(const json& obj, const std::string& path,
                            nn::TrainConfig base) {
    expect_object(obj, path);
    expect_keys(obj, path,
                {"learning_rate", "max_epochs", "batch_size", "early_stop_patience",
                 "optimizer"});
    base.learning_rate = get_real(obj, path, "learning_rate", base.learning_rate);
    base.max_epochs = get_count(obj, path, "max_epochs", base.max_epochs);
    base.batch_size = get_count(obj, path, "batch_size", base.batch_size);
    base.early_stop_patience =
        get_count(obj, path, "early_stop_patience", base.early_stop_patience);
    const std::string optimizer = get_string(
        obj, path, "optimizer", base.optimizer == nn::Optimizer::Adam ? "adam" : "sgd");
    if (optimizer == "adam") {
        base.optimizer = nn::Optimizer::Adam;
    } else if (optimizer == "sgd") {
        base.optimizer = nn::Optimizer::SGD;
    } else {
        throw ConfigError(path + ".optimizer: expected \"adam\" or \"sgd\"");
    }
    if (!(base.learning_rate > 0.0)) {
        throw ConfigError(path + ".learning_rate: must be positive");
    }
    if (base.max_epochs == 0) throw ConfigError(path + ".max_epochs: must be positive");
    if (base.batch_size == 0) throw ConfigError(path + ".batch_size: must be positive");
    if (base.early_stop_patience >= base.max_epochs) {
        throw ConfigError(path + ".early_stop_patience: must be smaller than " + path +
                          ".max_epochs");
    }
    return base;
}

attacks::AttackSpec parse_attack(const json& obj, const std::string& path) {
    expect_object(obj, path);
    const std::string kind = get_string(obj, path, "kind", "");
    if (kind == "fgsm") {
        expect_keys(obj, path, {"kind", "epsilon", "clip"});
        attacks::FgsmConfig fgsm;
        fgsm.epsilon = get_real(obj, path, "epsilon", fgsm.epsilon);
        fgsm.clip = get_bool(obj, path, "clip", fgsm.clip);
        if (!(fgsm.epsilon >= 0.0 && fgsm.epsilon <= 1.0)) {
            throw ConfigError(path + ".epsilon: must lie in [0,1]");
        }
        return fgsm;
    }
    if (kind == "jsma") {
        expect_keys(obj, path, {"kind", "theta", "max_features"});
        attacks::JsmaConfig jsma;
        jsma.theta = get_real(obj, path, "theta", jsma.theta);
        jsma.max_features = get_count(obj, path, "max_features", jsma.max_features);
        if (jsma.theta == 0.0 || !(std::abs(jsma.theta) <= 1.0)) {
            throw ConfigError(path + ".theta: must lie in [-1,1] and be nonzero");
        }
        return jsma;
    }
    throw ConfigError(path + ".kind: expected \"fgsm\" or \"jsma\"");
}

ordered_json attack_to_json(const attacks::AttackSpec& spec) {
    ordered_json doc;
    if (const auto* fgsm = std::get_if<attacks::FgsmConfig>(&spec)) {
        doc["kind"] = "fgsm";
        doc["epsilon"] = fgsm->epsilon;
        doc["clip"] = fgsm->clip;
    } else {
        const auto& jsma = std::get<attacks::JsmaConfig>(spec);
        doc["kind"] = "jsma";
        doc["theta"] = jsma.theta;
        doc["max_features"] = jsma.max_features;
    }
    return doc;
}

ordered_json train_to_json(const nn::TrainConfig& train) {
    ordered_json doc;
    doc["learning_rate"] = train.learning_rate;
    doc["max_epochs"] = train.max_epochs;
    doc["batch_size"] = train.batch_size;
    doc["early_stop_patience"] = train.early_stop_patience;
    doc["optimizer"] = train.optimizer == nn::Optimizer::Adam ? "adam" : "sgd";
    return doc;
}

} // namespace

ExperimentConfig default_config() {
    ExperimentConfig config;
    config.seed = 1;
    config.generator = data::GeneratorConfig{};
    config.labeling = LabelingConfig{};
    config.split = SplitConfig{};
    config.model = ModelConfig{};
    config.train.learning_rate = 1e-3;
    config.train.max_epochs = 40;
    config.train.batch_size = 32;
    config.train.early_stop_patience = 10;
    config.train.optimizer = nn::Optimizer::Adam;
    config.attack_specs = {attacks::FgsmConfig{0.1, true},
                           attacks::JsmaConfig{1.0, 6, 0}};
    DefensePlan defense;
    defense.ratio = 1.0;
    defense.retrain = config.train;
    config.defense = defense;
    config.output_dir = "out";
    return config;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
    expect_object(doc, "config");
    expect_keys(doc, "config",
                {"schema_version", "seed", "dataset", "labeling", "split", "model",
                 "train", "attacks", "defense", "output_dir"});
    if (!doc.contains("schema_version")) {
        throw ConfigError("config: missing schema_version");
    }
    if (!doc.at("schema_version").is_number_unsigned() ||
        doc.at("schema_version").get<std::uint64_t>() != 1) {
        throw ConfigError("config.schema_version: unsupported value (expected 1)");
    }

    ExperimentConfig config = default_config();
    config.seed = get_u64(doc, "config", "seed", config.seed);

    if (doc.contains("dataset")) {
        const json& ds = doc.at("dataset");
        expect_object(ds, "dataset");
        expect_keys(ds, "dataset", {"generator", "csv_path"});
        const bool has_generator = ds.contains("generator");
        const bool has_csv = ds.contains("csv_path");
        if (has_generator == has_csv) {
            throw ConfigError(
                "dataset: exactly one of \"generator\" and \"csv_path\" is required");
        }
        if (has_generator) {
            config.generator = parse_generator(ds.at("generator"), "dataset.generator");
            config.csv_path.reset();
        } else {
            const std::string path = get_string(ds, "dataset", "csv_path", "");
            if (path.empty()) throw ConfigError("dataset.csv_path: must be non-empty");
            config.csv_path = path;
            config.generator.reset();
        }
    }

    if (doc.contains("labeling")) {
        const json& lb = doc.at("labeling");
        expect_object(lb, "labeling");
        expect_keys(lb, "labeling", {"mode", "threshold"});
        const std::string mode = get_string(
            lb, "labeling", "mode",
            config.labeling.mode == LabelingConfig::Mode::Threshold ? "threshold"
                                                                    : "as_is");
        if (mode == "threshold") {
            config.labeling.mode = LabelingConfig::Mode::Threshold;
        } else if (mode == "as_is") {
            config.labeling.mode = LabelingConfig::Mode::AsIs;
        } else {
            throw ConfigError("labeling.mode: expected \"threshold\" or \"as_is\"");
        }
        config.labeling.threshold =
            get_real(lb, "labeling", "threshold", config.labeling.threshold);
        if (!(config.labeling.threshold > 0.0)) {
            throw ConfigError("labeling.threshold: must be positive");
        }
    }

    if (doc.contains("split")) {
        const json& sp = doc.at("split");
        expect_object(sp, "split");
        expect_keys(sp, "split", {"ratios", "stratified"});
        if (sp.contains("ratios")) {
            const json& ratios = sp.at("ratios");
            if (!ratios.is_array() || ratios.size() != 3) {
                throw ConfigError("split.ratios: expected an array of 3 numbers");
            }
            for (std::size_t i = 0; i < 3; ++i) {
                if (!ratios[i].is_number()) {
                    throw ConfigError("split.ratios[" + std::to_string(i) +
                                      "]: expected a number");
                }
                config.split.ratios[i] = ratios[i].get<double>();
                if (config.split.ratios[i] < 0.0) {
                    throw ConfigError("split.ratios[" + std::to_string(i) +
                                      "]: must be nonnegative");
                }
            }
            const double sum = config.split.ratios[0] + config.split.ratios[1] +
                               config.split.ratios[2];
            if (std::abs(sum - 1.0) > 1e-9) {
                throw ConfigError("split.ratios: must sum to 1");
            }
        }
        config.split.stratified =
            get_bool(sp, "split", "stratified", config.split.stratified);
    }

    if (doc.contains("model")) {
        const json& md = doc.at("model");
        expect_object(md, "model");
        expect_keys(md, "model", {"layer_dims", "dropout"});
        if (md.contains("layer_dims")) {
            const json& dims = md.at("layer_dims");
            if (!dims.is_array() || dims.size() < 3) {
                throw ConfigError(
                    "model.layer_dims: expected an array of at least 3 dimensions");
            }
            config.model.layer_dims.clear();
            for (std::size_t i = 0; i < dims.size(); ++i) {
                if (!dims[i].is_number_unsigned() || dims[i].get<std::uint64_t>() == 0) {
                    throw ConfigError("model.layer_dims[" + std::to_string(i) +
                                      "]: expected a positive integer");
                }
                config.model.layer_dims.push_back(dims[i].get<std::size_t>());
            }
            if (config.model.layer_dims.back() < 2) {
                throw ConfigError("model.layer_dims: output dimension must be at least 2");
            }
        }
        config.model.dropout = get_real(md, "model", "dropout", config.model.dropout);
        if (!(config.model.dropout >= 0.0 && config.model.dropout < 1.0)) {
            throw ConfigError("model.dropout: must lie in [0,1)");
        }
    }

    if (doc.contains("train")) {
        config.train = parse_train(doc.at("train"), "train", config.train);
    }

    if (doc.contains("attacks")) {
        const json& attacks_json = doc.at("attacks");
        if (!attacks_json.is_array()) throw ConfigError("attacks: expected an array");
        config.attack_specs.clear();
        for (std::size_t i = 0; i < attacks_json.size(); ++i) {
            config.attack_specs.push_back(
                parse_attack(attacks_json[i], "attacks[" + std::to_string(i) + "]"));
        }
    }

    if (doc.contains("defense")) {
        const json& df = doc.at("defense");
        if (df.is_null()) {
            config.defense.reset();
        } else {
            expect_object(df, "defense");
            expect_keys(df, "defense", {"ratio", "attack", "retrain"});
            DefensePlan plan;
            plan.retrain = config.train;
            plan.ratio = get_real(df, "defense", "ratio", plan.ratio);
            if (!(plan.ratio > 0.0 && plan.ratio <= 1.0)) {
                throw ConfigError("defense.ratio: must lie in (0,1]");
            }
            if (df.contains("attack")) {
                plan.attack = parse_attack(df.at("attack"), "defense.attack");
            }
            if (df.contains("retrain")) {
                plan.retrain = parse_train(df.at("retrain"), "defense.retrain",
                                           plan.retrain);
            }
            config.defense = plan;
        }
    }

    if (doc.contains("output_dir")) {
        const std::string dir = get_string(doc, "config", "output_dir", "out");
        if (dir.empty()) throw ConfigError("output_dir: must be non-empty");
        config.output_dir = dir;
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& config) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["seed"] = config.seed;

    ordered_json dataset;
    if (config.generator) {
        ordered_json gen;
        gen["n_enodebs"] = config.generator->n_enodebs;
        gen["n_days"] = config.generator->n_days;
        gen["anomaly_rate"] = config.generator->anomaly_rate;
        gen["tnl_anomaly_share"] = config.generator->tnl_anomaly_share;
        gen["drop_rate_anomaly_threshold"] = config.generator->drop_rate_anomaly_threshold;
        dataset["generator"] = std::move(gen);
    } else {
        dataset["csv_path"] = config.csv_path ? config.csv_path->string() : "";
    }
    doc["dataset"] = std::move(dataset);

    ordered_json labeling;
    labeling["mode"] =
        config.labeling.mode == LabelingConfig::Mode::Threshold ? "threshold" : "as_is";
    labeling["threshold"] = config.labeling.threshold;
    doc["labeling"] = std::move(labeling);

    ordered_json split;
    split["ratios"] = config.split.ratios;
    split["stratified"] = config.split.stratified;
    doc["split"] = std::move(split);

    ordered_json model;
    model["layer_dims"] = config.model.layer_dims;
    model["dropout"] = config.model.dropout;
    doc["model"] = std::move(model);

    doc["train"] = train_to_json(config.train);

    ordered_json attack_list = ordered_json::array();
    for (const auto& spec : config.attack_specs) attack_list.push_back(attack_to_json(spec));
    doc["attacks"] = std::move(attack_list);

    if (config.defense) {
        ordered_json defense;
        defense["ratio"] = config.defense->ratio;
        if (config.defense->attack) {
            defense["attack"] = attack_to_json(*config.defense->attack);
        }
        defense["retrain"] = train_to_json(config.defense->retrain);
        doc["defense"] = std::move(defense);
    } else {
        doc["defense"] = nullptr;
    }

    doc["output_dir"] = config.output_dir.string();
    return doc.dump(2);
}

} // namespace sonadv::harness
