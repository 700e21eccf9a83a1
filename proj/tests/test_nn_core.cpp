#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "sonadv/errors.hpp"
#include "sonadv/nn.hpp"
#include "support.hpp"

using namespace sonadv;
using testsupport::fixed_output_model;
using testsupport::hand_model;
using testsupport::random_model;
using testsupport::random_point;
using testsupport::toy_set;

namespace {

struct HandForward {
    double z0, z1;
    double p0, p1;
};

// Softmax over hand-derived logits, computed independently of the library.
HandForward softmax_of(double z0, double z1) {
    const double e0 = std::exp(z0);
    const double e1 = std::exp(z1);
    return {z0, z1, e0 / (e0 + e1), e1 / (e0 + e1)};
}

double fd_loss_gradient(const nn::MlpModel& model, std::vector<double> x, int label,
                        std::size_t i) {
    const double h = 1e-5;
    const double saved = x[i];
    x[i] = saved + h;
    const double up = nn::loss(model, x, label);
    x[i] = saved - h;
    const double down = nn::loss(model, x, label);
    return (up - down) / (2.0 * h);
}

double fd_logit_gradient(const nn::MlpModel& model, std::vector<double> x, int logit,
                         std::size_t i) {
    const double h = 1e-5;
    const double saved = x[i];
    x[i] = saved + h;
    const double up = nn::forward_logits(model, x)[logit];
    x[i] = saved - h;
    const double down = nn::forward_logits(model, x)[logit];
    return (up - down) / (2.0 * h);
}

// The 1e-6 floor keeps exactly-zero coordinates (dead ReLU paths) from
// turning finite-difference noise into a huge relative error.
bool rel_close(double a, double b, double tol) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-6});
    return std::fabs(a - b) <= tol * scale;
}

} // namespace

TEST_CASE("init_model builds the requested architecture") {
    const nn::MlpModel model = nn::init_model({26, 256, 256, 256, 2}, 0.4, 7);
    CHECK(model.layer_dims == std::vector<std::size_t>{26, 256, 256, 256, 2});
    REQUIRE(model.weights.size() == 4);
    CHECK(model.weights[0].rows() == 26);
    CHECK(model.weights[0].cols() == 256);
    CHECK(model.weights[3].rows() == 256);
    CHECK(model.weights[3].cols() == 2);
    CHECK(model.biases[2].size() == 256);
    CHECK(model.dropout_rate == 0.4);
}

TEST_CASE("init_model is deterministic under the seed") {
    const nn::MlpModel a = nn::init_model({2, 3, 2}, 0.0, 1);
    const nn::MlpModel b = nn::init_model({2, 3, 2}, 0.0, 1);
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
        CHECK(a.weights[i].storage() == b.weights[i].storage());
        CHECK(a.biases[i] == b.biases[i]);
    }
    const nn::MlpModel c = nn::init_model({2, 3, 2}, 0.0, 2);
    CHECK(a.weights[0].storage() != c.weights[0].storage());
}

TEST_CASE("init_model draws fan-in-scaled uniform weights and zero biases") {
    const nn::MlpModel model = nn::init_model({8, 16, 2}, 0.0, 11);
    bool any_nonzero = false;
    for (std::size_t layer = 0; layer < model.weights.size(); ++layer) {
        const double limit = std::sqrt(6.0 / static_cast<double>(
                                                 model.layer_dims[layer]));
        for (double w : model.weights[layer].storage()) {
            CHECK(std::fabs(w) <= limit);
            any_nonzero = any_nonzero || w != 0.0;
        }
        for (double b : model.biases[layer]) CHECK(b == 0.0);
    }
    CHECK(any_nonzero);
}

TEST_CASE("init_model rejects bad architectures") {
    CHECK_THROWS_AS(nn::init_model({26, 2}, 0.0, 1), InvalidArchitectureError);
    CHECK_THROWS_AS(nn::init_model({4, 0, 2}, 0.0, 1), InvalidArchitectureError);
    CHECK_THROWS_AS(nn::init_model({4, 3, 1}, 0.0, 1), InvalidArchitectureError);
    CHECK_THROWS_AS(nn::init_model({4, 3, 2}, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(nn::init_model({4, 3, 2}, -0.1, 1), ConfigError);
}

TEST_CASE("forward of an all-zero model is uniform") {
    nn::MlpModel model = fixed_output_model(0.5, 0.5);
    model.biases[1] = {0.0, 0.0};
    const std::vector<double> probs = nn::forward(model, std::vector<double>{0.3, 0.9});
    CHECK(probs[0] == 0.5);
    CHECK(probs[1] == 0.5);
}

TEST_CASE("forward normalizes to strictly positive probabilities") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const nn::MlpModel model = random_model({4, 6, 3}, 100 + trial);
        const std::vector<double> x = random_point(4, rng);
        const std::vector<double> probs = nn::forward(model, x);
        double sum = 0.0;
        for (double p : probs) {
            CHECK(p > 0.0);
            sum += p;
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("forward matches the 2-2-2 hand computation") {
    const nn::MlpModel model = hand_model();
    // x = (0.6, 0.4): hidden pre-activations 0.7 and 0.05, both active,
    // logits 0.7625 and -0.375.
    const HandForward expect = softmax_of(0.7625, -0.375);
    const std::vector<double> probs = nn::forward(model, std::vector<double>{0.6, 0.4});
    CHECK(std::fabs(probs[0] - expect.p0) <= 1e-12);
    CHECK(std::fabs(probs[1] - expect.p1) <= 1e-12);

    const std::vector<double> logits =
        nn::forward_logits(model, std::vector<double>{0.6, 0.4});
    CHECK(std::fabs(logits[0] - 0.7625) <= 1e-12);
    CHECK(std::fabs(logits[1] - (-0.375)) <= 1e-12);
}

TEST_CASE("forward rejects dimension mismatches") {
    const nn::MlpModel model = hand_model();
    CHECK_THROWS_AS(nn::forward(model, std::vector<double>{0.1}), ShapeError);
    CHECK_THROWS_AS(nn::forward(model, std::vector<double>{0.1, 0.2, 0.3}), ShapeError);
}

TEST_CASE("inference ignores dropout and repeats bit-identically") {
    nn::MlpModel model = random_model({3, 8, 2}, 9);
    model.dropout_rate = 0.5;
    const std::vector<double> x{0.2, 0.7, 0.4};
    const std::vector<double> first = nn::forward(model, x);
    const std::vector<double> second = nn::forward(model, x);
    CHECK(first == second);
}

TEST_CASE("loss of a uniform model is ln 2") {
    const nn::MlpModel model = fixed_output_model(0.5, 0.5);
    const double value = nn::loss(model, std::vector<double>{0.1, 0.1}, 0);
    CHECK(std::fabs(value - std::log(2.0)) <= 1e-12);
}

TEST_CASE("loss of a near-certain model is near zero") {
    const double eps = 1e-9;
    const nn::MlpModel model = fixed_output_model(1.0 - eps, eps);
    const double value = nn::loss(model, std::vector<double>{0.1, 0.1}, 0);
    CHECK(value > 0.0);
    CHECK(value >= 0.5 * eps);
    CHECK(value <= 2.0 * eps);
}

TEST_CASE("loss matches the 2-2-2 hand computation") {
    const nn::MlpModel model = hand_model();
    const HandForward expect = softmax_of(0.7625, -0.375);
    const double value = nn::loss(model, std::vector<double>{0.6, 0.4}, 1);
    CHECK(std::fabs(value - (-std::log(expect.p1))) <= 1e-12);
}

TEST_CASE("loss validates the label") {
    const nn::MlpModel model = hand_model();
    CHECK_THROWS_AS(nn::loss(model, std::vector<double>{0.6, 0.4}, 2), LabelError);
    CHECK_THROWS_AS(nn::loss(model, std::vector<double>{0.6, 0.4}, -1), LabelError);
}

TEST_CASE("input_gradient of an all-zero model is zero") {
    const nn::MlpModel model = fixed_output_model(0.5, 0.5);
    const std::vector<double> grad =
        nn::input_gradient(model, std::vector<double>{0.3, 0.8}, 0);
    CHECK(grad == std::vector<double>{0.0, 0.0});
}

TEST_CASE("input_gradient matches the hand chain rule") {
    const nn::MlpModel model = hand_model();

    SUBCASE("both hidden units active") {
        const HandForward fwd = softmax_of(0.7625, -0.375);
        const double g0 = fwd.p0;
        const double g1 = fwd.p1 - 1.0;
        const double dz1_0 = 1.0 * g0 + (-0.5) * g1;
        const double dz1_1 = 0.25 * g0 + 0.5 * g1;
        const double dx0 = 0.5 * dz1_0 + (-0.25) * dz1_1;
        const double dx1 = 0.75 * dz1_0 + 1.0 * dz1_1;
        const std::vector<double> grad =
            nn::input_gradient(model, std::vector<double>{0.6, 0.4}, 1);
        CHECK(std::fabs(grad[0] - dx0) <= 1e-10);
        CHECK(std::fabs(grad[1] - dx1) <= 1e-10);
    }

    SUBCASE("dead hidden unit contributes nothing") {
        // x = (0.8, 0.1): pre-activations 0.575 and -0.3, logits 0.625, -0.3375.
        const HandForward fwd = softmax_of(0.625, -0.3375);
        const double g0 = fwd.p0 - 1.0;
        const double g1 = fwd.p1;
        const double dz1_0 = 1.0 * g0 + (-0.5) * g1;
        const double dx0 = 0.5 * dz1_0;
        const double dx1 = 0.75 * dz1_0;
        const std::vector<double> grad =
            nn::input_gradient(model, std::vector<double>{0.8, 0.1}, 0);
        CHECK(std::fabs(grad[0] - dx0) <= 1e-10);
        CHECK(std::fabs(grad[1] - dx1) <= 1e-10);
    }
}

TEST_CASE("input_gradient matches central finite differences") {
    const std::vector<std::vector<std::size_t>> architectures = {
        {3, 5, 2}, {4, 8, 3}, {2, 4, 4, 2}, {5, 6, 2}, {6, 10, 4, 3}, {2, 2, 2},
    };
    std::mt19937_64 rng(41);
    int checked = 0;
    for (int trial = 0; trial < 21; ++trial) {
        const auto& dims = architectures[trial % architectures.size()];
        const nn::MlpModel model = random_model(dims, 500 + trial);
        const std::vector<double> x = random_point(dims.front(), rng);
        const int label = trial % static_cast<int>(dims.back());
        const std::vector<double> grad = nn::input_gradient(model, x, label);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(rel_close(grad[i], fd_loss_gradient(model, x, label, i), 1e-4));
        }
        ++checked;
    }
    CHECK(checked == 21);
}

TEST_CASE("class_jacobian of an all-zero model is zero") {
    const nn::MlpModel model = fixed_output_model(0.5, 0.5);
    const Matrix jac = nn::class_jacobian(model, std::vector<double>{0.3, 0.8});
    for (double v : jac.storage()) CHECK(v == 0.0);
}

TEST_CASE("class_jacobian of an identity-through-relu net is the weight transpose") {
    nn::MlpModel model;
    model.layer_dims = {2, 2, 2};
    model.weights = {Matrix(2, 2, {1.0, 0.0, 0.0, 1.0}),
                     Matrix(2, 2, {0.7, -0.3, 0.2, 0.9})};
    model.biases = {{0.0, 0.0}, {0.0, 0.0}};
    // Positive inputs keep the identity layer's ReLU in its linear region.
    const Matrix jac = nn::class_jacobian(model, std::vector<double>{0.4, 0.6});
    CHECK(jac.rows() == 2);
    CHECK(jac.cols() == 2);
    CHECK(jac.at(0, 0) == 0.7);
    CHECK(jac.at(0, 1) == 0.2);
    CHECK(jac.at(1, 0) == -0.3);
    CHECK(jac.at(1, 1) == 0.9);
}

TEST_CASE("class_jacobian matches central finite differences") {
    const std::vector<std::vector<std::size_t>> architectures = {
        {3, 6, 2}, {4, 5, 3}, {2, 4, 4, 2}, {5, 8, 2},
    };
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 12; ++trial) {
        const auto& dims = architectures[trial % architectures.size()];
        const nn::MlpModel model = random_model(dims, 900 + trial);
        const std::vector<double> x = random_point(dims.front(), rng);
        const Matrix jac = nn::class_jacobian(model, x);
        REQUIRE(jac.rows() == dims.back());
        REQUIRE(jac.cols() == dims.front());
        for (std::size_t j = 0; j < jac.rows(); ++j) {
            for (std::size_t i = 0; i < jac.cols(); ++i) {
                CHECK(rel_close(jac.at(j, i),
                                fd_logit_gradient(model, x, static_cast<int>(j), i),
                                1e-4));
            }
        }
    }
}

TEST_CASE("loss gradient decomposes over the class jacobian") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        const nn::MlpModel model = random_model({4, 7, 2}, 1300 + trial);
        const std::vector<double> x = random_point(4, rng);
        const int label = trial % 2;
        const std::vector<double> probs = nn::forward(model, x);
        const Matrix jac = nn::class_jacobian(model, x);
        const std::vector<double> grad = nn::input_gradient(model, x, label);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double combined = 0.0;
            for (std::size_t j = 0; j < jac.rows(); ++j) {
                const double indicator = static_cast<int>(j) == label ? 1.0 : 0.0;
                combined += (probs[j] - indicator) * jac.at(j, i);
            }
            CHECK(std::fabs(combined - grad[i]) <= 1e-8);
        }
    }
}

TEST_CASE("predict takes the argmax with low-index ties") {
    CHECK(nn::predict(fixed_output_model(0.9, 0.1), std::vector<double>{0.0, 0.0}) == 0);
    CHECK(nn::predict(fixed_output_model(0.5, 0.5), std::vector<double>{0.0, 0.0}) == 0);
    CHECK(nn::predict(fixed_output_model(0.2, 0.8), std::vector<double>{0.0, 0.0}) == 1);
}

TEST_CASE("predict_all and mean_loss agree with their row-wise forms") {
    const nn::MlpModel model = random_model({3, 6, 2}, 77);
    nn::LabeledSet set;
    set.features = Matrix(5, 3);
    std::mt19937_64 rng(78);
    for (std::size_t r = 0; r < 5; ++r) {
        const std::vector<double> x = random_point(3, rng);
        std::copy(x.begin(), x.end(), set.features.row(r).begin());
        set.labels.push_back(static_cast<int>(r % 2));
    }
    const std::vector<int> batch = nn::predict_all(model, set.features);
    double total = 0.0;
    for (std::size_t r = 0; r < 5; ++r) {
        CHECK(batch[r] == nn::predict(model, set.features.row(r)));
        total += nn::loss(model, set.features.row(r), set.labels[r]);
    }
    CHECK(std::fabs(nn::mean_loss(model, set) - total / 5.0) <= 1e-12);
}

TEST_CASE("train fits a linearly separable toy set perfectly") {
    const nn::LabeledSet train = toy_set(100, 21);
    const nn::LabeledSet valid = toy_set(20, 22);

    // The margin oracle: scan directions for a separating line before
    // trusting the network to find one.
    bool separable = false;
    for (int angle = 0; angle < 360 && !separable; ++angle) {
        const double rad = angle * M_PI / 180.0;
        const double nx = std::cos(rad), ny = std::sin(rad);
        double max0 = -1e30, min1 = 1e30;
        for (std::size_t r = 0; r < train.size(); ++r) {
            const double proj = nx * train.features.at(r, 0) +
                                ny * train.features.at(r, 1);
            if (train.labels[r] == 0) {
                max0 = std::max(max0, proj);
            } else {
                min1 = std::min(min1, proj);
            }
        }
        separable = max0 < min1;
    }
    REQUIRE(separable);

    const nn::MlpModel init = nn::init_model({2, 8, 8, 2}, 0.0, 5);
    nn::TrainConfig config;
    config.max_epochs = 60;
    config.early_stop_patience = 10;
    config.seed = 6;
    const auto [model, report] = nn::train(init, train, valid, config);
    CHECK(report.epochs_run >= 1);
    CHECK(report.loss_history.size() == report.epochs_run);

    const std::vector<int> predictions = nn::predict_all(model, train.features);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < train.size(); ++r) {
        if (predictions[r] == train.labels[r]) ++correct;
    }
    CHECK(correct == train.size());
}

TEST_CASE("train is bit-deterministic under seed, config, and data") {
    const nn::LabeledSet train = toy_set(40, 31);
    const nn::LabeledSet valid = toy_set(10, 32);
    nn::MlpModel init = nn::init_model({2, 6, 2}, 0.4, 8);
    nn::TrainConfig config;
    config.max_epochs = 8;
    config.early_stop_patience = 4;
    config.seed = 19;

    const auto [a, report_a] = nn::train(init, train, valid, config);
    const auto [b, report_b] = nn::train(init, train, valid, config);
    CHECK(report_a.epochs_run == report_b.epochs_run);
    CHECK(report_a.loss_history == report_b.loss_history);
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
        CHECK(a.weights[i].storage() == b.weights[i].storage());
        CHECK(a.biases[i] == b.biases[i]);
    }
}

TEST_CASE("train stops early when validation loss keeps worsening") {
    const nn::LabeledSet train = toy_set(60, 51);
    nn::LabeledSet valid = toy_set(60, 51);
    for (int& label : valid.labels) label = 1 - label;

    const nn::MlpModel init = nn::init_model({2, 8, 2}, 0.0, 9);
    nn::TrainConfig config;
    config.max_epochs = 50;
    config.early_stop_patience = 3;
    config.seed = 10;
    const auto [model, report] = nn::train(init, train, valid, config);
    CHECK(report.stopped_early);
    CHECK(report.epochs_run < config.max_epochs);
    CHECK(report.loss_history.size() == report.epochs_run);
}

TEST_CASE("train reports divergence with the failing epoch") {
    const nn::LabeledSet train = toy_set(40, 61);
    const nn::LabeledSet valid = toy_set(10, 62);
    const nn::MlpModel init = nn::init_model({2, 8, 2}, 0.0, 12);
    nn::TrainConfig config;
    config.learning_rate = 1e300;
    config.optimizer = nn::Optimizer::SGD;
    config.max_epochs = 20;
    config.early_stop_patience = 10;
    config.seed = 13;
    try {
        nn::train(init, train, valid, config);
        FAIL("expected a divergence error");
    } catch (const DivergenceError& e) {
        CHECK(e.epoch() >= 1);
        CHECK(e.epoch() <= config.max_epochs);
    }
}

TEST_CASE("train validates inputs and config") {
    const nn::LabeledSet train = toy_set(10, 71);
    const nn::LabeledSet valid = toy_set(5, 72);
    const nn::MlpModel init = nn::init_model({2, 4, 2}, 0.0, 14);
    nn::TrainConfig config;
    config.max_epochs = 5;
    config.early_stop_patience = 2;

    nn::LabeledSet empty;
    CHECK_THROWS_AS(nn::train(init, empty, valid, config), DataError);
    CHECK_THROWS_AS(nn::train(init, train, empty, config), DataError);

    nn::LabeledSet wide = train;
    wide.features = Matrix(train.size(), 3, 0.1);
    CHECK_THROWS_AS(nn::train(init, wide, valid, config), ShapeError);

    nn::LabeledSet bad_labels = train;
    bad_labels.labels[0] = 7;
    CHECK_THROWS_AS(nn::train(init, bad_labels, valid, config), LabelError);

    nn::TrainConfig bad = config;
    bad.early_stop_patience = 5;
    CHECK_THROWS_AS(nn::train(init, train, valid, bad), ConfigError);
    bad = config;
    bad.batch_size = 0;
    CHECK_THROWS_AS(nn::train(init, train, valid, bad), ConfigError);
    bad = config;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(nn::train(init, train, valid, bad), ConfigError);
    bad = config;
    bad.max_epochs = 0;
    CHECK_THROWS_AS(nn::train(init, train, valid, bad), ConfigError);
}

TEST_CASE("model JSON round-trips bit-exactly") {
    nn::MlpModel model = random_model({3, 5, 2}, 23);
    model.dropout_rate = 0.4;
    model.weights[0].at(0, 0) = 0.1;
    model.weights[1].at(2, 1) = -1.0 / 3.0;

    const nn::MlpModel back = nn::from_json(nn::to_json(model));
    CHECK(back.layer_dims == model.layer_dims);
    CHECK(back.dropout_rate == model.dropout_rate);
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        CHECK(back.weights[i].storage() == model.weights[i].storage());
        CHECK(back.biases[i] == model.biases[i]);
    }
}

TEST_CASE("model files save and load through the filesystem") {
    testsupport::TempDir dir;
    const nn::MlpModel model = nn::init_model({4, 6, 2}, 0.2, 33);
    const auto path = dir.file("model.json");
    nn::save_model(model, path);
    const nn::MlpModel back = nn::load_model(path);
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        CHECK(back.weights[i].storage() == model.weights[i].storage());
    }
    CHECK_THROWS_AS(nn::load_model(dir.file("missing.json")), DataError);
    CHECK_THROWS_AS(nn::save_model(model, dir.path() / "no-dir" / "model.json"),
                    DataError);
}

TEST_CASE("from_json rejects malformed documents") {
    CHECK_THROWS_AS(nn::from_json("not json"), ParseError);
    CHECK_THROWS_AS(nn::from_json("{}"), ParseError);

    const std::string good = nn::to_json(nn::init_model({2, 3, 2}, 0.0, 1));
    std::string wrong_version = good;
    const auto pos = wrong_version.find("\"schema_version\": 1");
    REQUIRE(pos != std::string::npos);
    wrong_version.replace(pos, 19, "\"schema_version\": 9");
    CHECK_THROWS_AS(nn::from_json(wrong_version), ParseError);

    CHECK_THROWS_AS(
        nn::from_json(R"({"schema_version":1,"layer_dims":[2,3,2],"dropout_rate":0.0,)"
                      R"("weights":[[1,2],[1,2,3,4,5,6]],"biases":[[0,0,0],[0,0]]})"),
        ParseError);
}
