#ifndef SONADV_NN_HPP
#define SONADV_NN_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sonadv/matrix.hpp"

namespace sonadv::nn {

enum class HiddenActivation { ReLU };
enum class OutputActivation { Softmax };
enum class Optimizer { SGD, Adam };
enum class EarlyStopMetric { ValidationLoss };

// Dense feed-forward classifier. weights[i] is (layer_dims[i] x layer_dims[i+1]),
// biases[i] has layer_dims[i+1] entries. Immutable once training returns;
// inference entry points are safe to call concurrently on a frozen model.
struct MlpModel {
    std::vector<std::size_t> layer_dims;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    HiddenActivation hidden_activation = HiddenActivation::ReLU;
    OutputActivation output_activation = OutputActivation::Softmax;
    double dropout_rate = 0.0;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t n_layers() const { return weights.size(); }
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t max_epochs = 60;
    std::size_t batch_size = 32;
    std::size_t early_stop_patience = 10;
    EarlyStopMetric early_stop_metric = EarlyStopMetric::ValidationLoss;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Adam;
};

struct TrainReport {
    std::size_t epochs_run = 0;
    std::vector<double> loss_history; // mean training loss per epoch
    bool stopped_early = false;
};

// Feature matrix plus one class index per row.
struct LabeledSet {
    Matrix features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
};

// Seeded He-uniform initialization; identical seed gives a bit-identical model.
MlpModel init_model(const std::vector<std::size_t>& layer_dims, double dropout_rate,
                    std::uint64_t seed);

// Class probabilities (softmax). Dropout is never applied here.
std::vector<double> forward(const MlpModel& model, std::span<const double> x);

// Pre-softmax logits.
std::vector<double> forward_logits(const MlpModel& model, std::span<const double> x);

// Cross-entropy of the softmax output against `label`.
double loss(const MlpModel& model, std::span<const double> x, int label);

// Gradient of the cross-entropy loss with respect to the input vector.
std::vector<double> input_gradient(const MlpModel& model, std::span<const double> x,
                                   int label);

// Jacobian of the pre-softmax logits with respect to the input:
// row j holds d logit_j / d x.
Matrix class_jacobian(const MlpModel& model, std::span<const double> x);

// Argmax of forward(); ties break toward the lower index.
int predict(const MlpModel& model, std::span<const double> x);

// Row-wise predict over a feature matrix.
std::vector<int> predict_all(const MlpModel& model, const Matrix& features);

// Mean cross-entropy over a labeled set (dropout off).
double mean_loss(const MlpModel& model, const LabeledSet& set);

// Mini-batch training with inverted dropout and early stopping on validation
// loss; returns the best-validation snapshot. Deterministic under
// (seed, config, data). Optionally continues from `model`'s current weights.
std::pair<MlpModel, TrainReport> train(const MlpModel& model, const LabeledSet& train_set,
                                       const LabeledSet& valid_set,
                                       const TrainConfig& config);

// Versioned JSON round-trip; weight values survive exactly.
std::string to_json(const MlpModel& model);
MlpModel from_json(const std::string& text);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

} // namespace sonadv::nn

#endif
