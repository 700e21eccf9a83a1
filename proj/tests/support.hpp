#ifndef SONADV_TESTS_SUPPORT_HPP
#define SONADV_TESTS_SUPPORT_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sonadv/matrix.hpp"
#include "sonadv/nn.hpp"

namespace testsupport {

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl =
            (std::filesystem::temp_directory_path() / "sonadv-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << content;
}

// 2-2-2 net with fixed small weights, ReLU hidden, softmax output. The hand
// oracles in the nn tests are computed from exactly these numbers.
inline sonadv::nn::MlpModel hand_model() {
    sonadv::nn::MlpModel model;
    model.layer_dims = {2, 2, 2};
    model.weights = {
        sonadv::Matrix(2, 2, {0.5, -0.25, 0.75, 1.0}),
        sonadv::Matrix(2, 2, {1.0, -0.5, 0.25, 0.5}),
    };
    model.biases = {{0.1, -0.2}, {0.05, -0.05}};
    return model;
}

// Bias-only binary model whose softmax output is exactly `probs`.
inline sonadv::nn::MlpModel fixed_output_model(double p0, double p1) {
    sonadv::nn::MlpModel model;
    model.layer_dims = {2, 2, 2};
    model.weights = {sonadv::Matrix(2, 2, 0.0), sonadv::Matrix(2, 2, 0.0)};
    model.biases = {{0.0, 0.0}, {std::log(p0), std::log(p1)}};
    return model;
}

// Two well-separated 2-D point clouds: class 0 near (0.2, 0.2) and class 1
// near (0.8, 0.8). Margin along x+y is at least 0.5.
inline sonadv::nn::LabeledSet toy_set(std::size_t per_class, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    sonadv::nn::LabeledSet set;
    set.features = sonadv::Matrix(2 * per_class, 2);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const int label = i < per_class ? 0 : 1;
        const double base = label == 0 ? 0.2 : 0.8;
        set.features.at(i, 0) = base + jitter(rng);
        set.features.at(i, 1) = base + jitter(rng);
        set.labels.push_back(label);
    }
    return set;
}

// Seeded model with uniform weights in [-1,1]; exercises gradient code on
// architectures the initializer would never produce.
inline sonadv::nn::MlpModel random_model(const std::vector<std::size_t>& dims,
                                         std::uint64_t seed) {
    sonadv::nn::MlpModel model;
    model.layer_dims = dims;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        sonadv::Matrix w(dims[i], dims[i + 1]);
        for (double& v : w.storage()) v = uni(rng);
        model.weights.push_back(std::move(w));
        std::vector<double> b(dims[i + 1]);
        for (double& v : b) v = uni(rng);
        model.biases.push_back(std::move(b));
    }
    return model;
}

inline std::vector<double> random_point(std::size_t dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> x(dim);
    for (double& v : x) v = uni(rng);
    return x;
}

} // namespace testsupport

#endif
