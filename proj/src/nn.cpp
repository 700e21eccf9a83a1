#include "sonadv/nn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sonadv/errors.hpp"
#include "sonadv/log.hpp"

namespace sonadv::nn {

namespace {

using EigenRowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const EigenRowMat>;
using MatMap = Eigen::Map<EigenRowMat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

ConstMatMap weight_map(const MlpModel& model, std::size_t layer) {
    const Matrix& w = model.weights[layer];
    return ConstMatMap(w.data(), static_cast<Eigen::Index>(w.rows()),
                       static_cast<Eigen::Index>(w.cols()));
}

ConstVecMap bias_map(const MlpModel& model, std::size_t layer) {
    const auto& b = model.biases[layer];
    return ConstVecMap(b.data(), static_cast<Eigen::Index>(b.size()));
}

void check_input_dim(const MlpModel& model, std::size_t got) {
    if (got != model.input_dim()) {
        throw ShapeError("input length " + std::to_string(got) +
                         " does not match model input dimension " +
                         std::to_string(model.input_dim()));
    }
}

void check_label(const MlpModel& model, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= model.output_dim()) {
        throw LabelError("label " + std::to_string(label) + " outside output range [0, " +
                         std::to_string(model.output_dim()) + ")");
    }
}

// Forward pass keeping per-layer activations; activations[0] is the input,
// activations[L] holds the pre-softmax logits.
std::vector<Eigen::VectorXd> forward_trace(const MlpModel& model,
                                           std::span<const double> x) {
    std::vector<Eigen::VectorXd> activations;
    activations.reserve(model.n_layers() + 1);
    activations.emplace_back(ConstVecMap(x.data(), static_cast<Eigen::Index>(x.size())));
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        Eigen::VectorXd z = weight_map(model, l).transpose() * activations.back();
        z += bias_map(model, l);
        if (l + 1 < model.n_layers()) z = z.cwiseMax(0.0);
        activations.push_back(std::move(z));
    }
    return activations;
}

std::vector<double> softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    e /= e.sum();
    return {e.data(), e.data() + e.size()};
}

double log_sum_exp(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    return m + std::log((logits.array() - m).exp().sum());
}

// Backpropagates d loss / d logits to the input layer.
Eigen::VectorXd backprop_to_input(const MlpModel& model,
                                  const std::vector<Eigen::VectorXd>& activations,
                                  Eigen::VectorXd delta) {
    for (std::size_t l = model.n_layers(); l-- > 0;) {
        Eigen::VectorXd prev = weight_map(model, l) * delta;
        if (l > 0) {
            // ReLU mask from the stored post-activation values.
            const Eigen::VectorXd& act = activations[l];
            for (Eigen::Index i = 0; i < prev.size(); ++i) {
                if (act[i] <= 0.0) prev[i] = 0.0;
            }
        }
        delta = std::move(prev);
    }
    return delta;
}

// Batched logits for a feature matrix (no dropout).
EigenRowMat batched_logits(const MlpModel& model, const Matrix& features) {
    check_input_dim(model, features.cols());
    EigenRowMat a = ConstMatMap(features.data(), static_cast<Eigen::Index>(features.rows()),
                                static_cast<Eigen::Index>(features.cols()));
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        EigenRowMat z = a * weight_map(model, l);
        z.rowwise() += bias_map(model, l).transpose();
        if (l + 1 < model.n_layers()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

void check_set(const MlpModel& model, const LabeledSet& set, const char* which) {
    if (set.size() == 0) {
        throw DataError(std::string(which) + " set is empty");
    }
    if (set.features.rows() != set.labels.size()) {
        throw ShapeError(std::string(which) + " set has " +
                         std::to_string(set.features.rows()) + " feature rows but " +
                         std::to_string(set.labels.size()) + " labels");
    }
    check_input_dim(model, set.features.cols());
    for (int label : set.labels) check_label(model, label);
}

struct ModelParams {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

ModelParams snapshot(const MlpModel& model) { return {model.weights, model.biases}; }

void restore(MlpModel& model, const ModelParams& params) {
    model.weights = params.weights;
    model.biases = params.biases;
}

} // namespace

MlpModel init_model(const std::vector<std::size_t>& layer_dims, double dropout_rate,
                    std::uint64_t seed) {
    if (layer_dims.size() < 3) {
        throw InvalidArchitectureError("layer_dims needs input, at least one hidden and "
                                       "output entry, got " +
                                       std::to_string(layer_dims.size()));
    }
    for (std::size_t d : layer_dims) {
        if (d == 0) throw InvalidArchitectureError("layer dimension must be positive");
    }
    if (layer_dims.back() < 2) {
        throw InvalidArchitectureError("output dimension must be at least 2");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ConfigError("dropout_rate must lie in [0,1)");
    }

    MlpModel model;
    model.layer_dims = layer_dims;
    model.dropout_rate = dropout_rate;

    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t fan_in = layer_dims[l];
        const std::size_t fan_out = layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix w(fan_in, fan_out);
        for (double& v : w.storage()) v = dist(rng);
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(fan_out, 0.0);
    }
    return model;
}

std::vector<double> forward_logits(const MlpModel& model, std::span<const double> x) {
    check_input_dim(model, x.size());
    auto activations = forward_trace(model, x);
    const Eigen::VectorXd& z = activations.back();
    return {z.data(), z.data() + z.size()};
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
    check_input_dim(model, x.size());
    auto activations = forward_trace(model, x);
    return softmax(activations.back());
}

double loss(const MlpModel& model, std::span<const double> x, int label) {
    check_input_dim(model, x.size());
    check_label(model, label);
    auto activations = forward_trace(model, x);
    const Eigen::VectorXd& z = activations.back();
    return log_sum_exp(z) - z[label];
}

std::vector<double> input_gradient(const MlpModel& model, std::span<const double> x,
                                   int label) {
    check_input_dim(model, x.size());
    check_label(model, label);
    auto activations = forward_trace(model, x);
    const Eigen::VectorXd& z = activations.back();
    const double m = z.maxCoeff();
    Eigen::VectorXd delta = (z.array() - m).exp();
    delta /= delta.sum();
    delta[label] -= 1.0; // d loss / d logits = p - onehot
    Eigen::VectorXd g = backprop_to_input(model, activations, std::move(delta));
    return {g.data(), g.data() + g.size()};
}

Matrix class_jacobian(const MlpModel& model, std::span<const double> x) {
    check_input_dim(model, x.size());
    auto activations = forward_trace(model, x);
    const std::size_t out = model.output_dim();
    Matrix jac(out, model.input_dim());
    for (std::size_t j = 0; j < out; ++j) {
        Eigen::VectorXd seed = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
        seed[static_cast<Eigen::Index>(j)] = 1.0;
        Eigen::VectorXd g = backprop_to_input(model, activations, std::move(seed));
        for (std::size_t i = 0; i < model.input_dim(); ++i) {
            jac.at(j, i) = g[static_cast<Eigen::Index>(i)];
        }
    }
    return jac;
}

int predict(const MlpModel& model, std::span<const double> x) {
    auto probs = forward(model, x);
    int best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = static_cast<int>(i);
    }
    return best;
}

std::vector<int> predict_all(const MlpModel& model, const Matrix& features) {
    EigenRowMat logits = batched_logits(model, features);
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(r, c) > logits(r, best)) best = c;
        }
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

double mean_loss(const MlpModel& model, const LabeledSet& set) {
    check_set(model, set, "evaluation");
    EigenRowMat logits = batched_logits(model, set.features);
    double total = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
        total += lse - logits(r, set.labels[static_cast<std::size_t>(r)]);
    }
    return total / static_cast<double>(logits.rows());
}

std::pair<MlpModel, TrainReport> train(const MlpModel& model, const LabeledSet& train_set,
                                       const LabeledSet& valid_set,
                                       const TrainConfig& config) {
    check_set(model, train_set, "training");
    check_set(model, valid_set, "validation");
    if (config.batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (config.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (config.max_epochs == 0) throw ConfigError("max_epochs must be at least 1");
    if (config.early_stop_patience >= config.max_epochs) {
        throw ConfigError("early_stop_patience must be smaller than max_epochs");
    }

    MlpModel current = model;
    const std::size_t n = train_set.size();
    const std::size_t n_layers = current.n_layers();
    const double keep = 1.0 - current.dropout_rate;

    // Adam state.
    std::vector<Matrix> mw, vw;
    std::vector<std::vector<double>> mb, vb;
    for (std::size_t l = 0; l < n_layers; ++l) {
        mw.emplace_back(current.weights[l].rows(), current.weights[l].cols());
        vw.emplace_back(current.weights[l].rows(), current.weights[l].cols());
        mb.emplace_back(current.biases[l].size(), 0.0);
        vb.emplace_back(current.biases[l].size(), 0.0);
    }
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::size_t adam_t = 0;

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    TrainReport report;
    ModelParams best = snapshot(current);
    double best_valid = std::numeric_limits<double>::infinity();
    std::size_t bad_epochs = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t b = std::min(config.batch_size, n - start);
            EigenRowMat x(b, current.input_dim());
            std::vector<int> labels(b);
            for (std::size_t r = 0; r < b; ++r) {
                const std::size_t src = order[start + r];
                auto row = train_set.features.row(src);
                for (std::size_t c = 0; c < row.size(); ++c) {
                    x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
                }
                labels[r] = train_set.labels[src];
            }

            // Forward with inverted dropout on hidden activations.
            std::vector<EigenRowMat> acts;   // acts[0] = batch input
            std::vector<EigenRowMat> masks;  // dropout masks per hidden layer
            acts.reserve(n_layers + 1);
            acts.push_back(std::move(x));
            for (std::size_t l = 0; l < n_layers; ++l) {
                EigenRowMat z = acts.back() * weight_map(current, l);
                z.rowwise() += bias_map(current, l).transpose();
                if (l + 1 < n_layers) {
                    z = z.cwiseMax(0.0);
                    if (current.dropout_rate > 0.0) {
                        EigenRowMat mask(z.rows(), z.cols());
                        std::uniform_real_distribution<double> uni(0.0, 1.0);
                        for (Eigen::Index i = 0; i < mask.rows(); ++i) {
                            for (Eigen::Index jj = 0; jj < mask.cols(); ++jj) {
                                mask(i, jj) = uni(rng) < keep ? 1.0 / keep : 0.0;
                            }
                        }
                        z = z.cwiseProduct(mask);
                        masks.push_back(std::move(mask));
                    }
                }
                acts.push_back(std::move(z));
            }

            // Softmax + cross-entropy on the logits.
            EigenRowMat& logits = acts.back();
            EigenRowMat dz(logits.rows(), logits.cols());
            double batch_loss = 0.0;
            for (Eigen::Index r = 0; r < logits.rows(); ++r) {
                const double mx = logits.row(r).maxCoeff();
                Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp();
                const double sum = e.sum();
                batch_loss += mx + std::log(sum) - logits(r, labels[static_cast<std::size_t>(r)]);
                dz.row(r) = e / sum;
                dz(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
            }
            epoch_loss += batch_loss;
            dz /= static_cast<double>(b);

            // Backward.
            ++adam_t;
            const double bias_corr1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t));
            const double bias_corr2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t));
            for (std::size_t l = n_layers; l-- > 0;) {
                EigenRowMat dw = acts[l].transpose() * dz;
                Eigen::RowVectorXd db = dz.colwise().sum();
                EigenRowMat prev;
                if (l > 0) {
                    prev = dz * weight_map(current, l).transpose();
                    if (current.dropout_rate > 0.0) prev = prev.cwiseProduct(masks[l - 1]);
                    // ReLU gate: the stored activation already includes the
                    // dropout scale, so its sign still marks active units.
                    for (Eigen::Index i = 0; i < prev.rows(); ++i) {
                        for (Eigen::Index jj = 0; jj < prev.cols(); ++jj) {
                            if (acts[l](i, jj) <= 0.0) prev(i, jj) = 0.0;
                        }
                    }
                }

                MatMap w(current.weights[l].data(),
                         static_cast<Eigen::Index>(current.weights[l].rows()),
                         static_cast<Eigen::Index>(current.weights[l].cols()));
                Eigen::Map<Eigen::RowVectorXd> bvec(current.biases[l].data(),
                                                    static_cast<Eigen::Index>(current.biases[l].size()));
                if (config.optimizer == Optimizer::Adam) {
                    MatMap mwm(mw[l].data(), dw.rows(), dw.cols());
                    MatMap vwm(vw[l].data(), dw.rows(), dw.cols());
                    mwm = beta1 * mwm + (1.0 - beta1) * dw;
                    vwm = beta2 * vwm + (1.0 - beta2) * dw.cwiseProduct(dw);
                    w.array() -= config.learning_rate * (mwm.array() / bias_corr1) /
                                 ((vwm.array() / bias_corr2).sqrt() + adam_eps);
                    Eigen::Map<Eigen::RowVectorXd> mbv(mb[l].data(), db.size());
                    Eigen::Map<Eigen::RowVectorXd> vbv(vb[l].data(), db.size());
                    mbv = beta1 * mbv + (1.0 - beta1) * db;
                    vbv = beta2 * vbv + (1.0 - beta2) * db.cwiseProduct(db);
                    bvec.array() -= config.learning_rate * (mbv.array() / bias_corr1) /
                                    ((vbv.array() / bias_corr2).sqrt() + adam_eps);
                } else {
                    w -= config.learning_rate * dw;
                    bvec -= config.learning_rate * db;
                }
                if (l > 0) dz = std::move(prev);
            }
        }

        epoch_loss /= static_cast<double>(n);
        report.loss_history.push_back(epoch_loss);
        report.epochs_run = epoch;
        if (!std::isfinite(epoch_loss)) {
            throw DivergenceError("training loss became non-finite at epoch " +
                                      std::to_string(epoch),
                                  epoch);
        }

        const double valid_loss = mean_loss(current, valid_set);
        if (!std::isfinite(valid_loss)) {
            throw DivergenceError("validation loss became non-finite at epoch " +
                                      std::to_string(epoch),
                                  epoch);
        }
        log::debug("epoch " + std::to_string(epoch) + " train_loss " +
                   std::to_string(epoch_loss) + " valid_loss " + std::to_string(valid_loss));

        if (valid_loss < best_valid) {
            best_valid = valid_loss;
            best = snapshot(current);
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs >= config.early_stop_patience) {
                report.stopped_early = true;
                break;
            }
        }
    }

    restore(current, best);
    return {std::move(current), std::move(report)};
}

namespace {

// Reals carry 17 significant digits so the JSON round-trips them exactly.
void append_real(std::string& out, double v) {
    if (!std::isfinite(v)) throw InternalError("model contains a non-finite value");
    char buf[64];
    const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

void append_real_array(std::string& out, const std::vector<double>& values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        append_real(out, values[i]);
    }
    out += ']';
}

} // namespace

std::string to_json(const MlpModel& model) {
    std::string out;
    out += "{\n  \"schema_version\": 1,\n  \"layer_dims\": [";
    for (std::size_t i = 0; i < model.layer_dims.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(model.layer_dims[i]);
    }
    out += "],\n  \"dropout_rate\": ";
    append_real(out, model.dropout_rate);
    out += ",\n  \"weights\": [";
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        if (l > 0) out += ',';
        out += "\n    ";
        append_real_array(out, model.weights[l].storage());
    }
    out += "\n  ],\n  \"biases\": [";
    for (std::size_t l = 0; l < model.biases.size(); ++l) {
        if (l > 0) out += ',';
        out += "\n    ";
        append_real_array(out, model.biases[l]);
    }
    out += "\n  ]\n}";
    return out;
}

MlpModel from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model JSON: ") + e.what());
    }
    try {
        if (doc.at("schema_version").get<int>() != 1) {
            throw ParseError("model JSON: unsupported schema_version");
        }
        MlpModel model;
        model.layer_dims = doc.at("layer_dims").get<std::vector<std::size_t>>();
        model.dropout_rate = doc.at("dropout_rate").get<double>();
        const auto& weights = doc.at("weights");
        const auto& biases = doc.at("biases");
        if (model.layer_dims.size() < 2 || weights.size() != model.layer_dims.size() - 1 ||
            biases.size() != weights.size()) {
            throw ParseError("model JSON: layer/weight/bias counts disagree");
        }
        for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
            auto values = weights[l].get<std::vector<double>>();
            model.weights.emplace_back(model.layer_dims[l], model.layer_dims[l + 1],
                                       std::move(values));
            auto b = biases[l].get<std::vector<double>>();
            if (b.size() != model.layer_dims[l + 1]) {
                throw ParseError("model JSON: bias length mismatch at layer " +
                                 std::to_string(l));
            }
            model.biases.push_back(std::move(b));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model JSON: ") + e.what());
    } catch (const ShapeError& e) {
        throw ParseError(std::string("model JSON: ") + e.what());
    }
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << to_json(model) << '\n';
    if (!out) throw DataError("failed writing " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

} // namespace sonadv::nn
