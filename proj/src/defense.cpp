#include "sonadv/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sonadv/errors.hpp"
#include "sonadv/log.hpp"

namespace sonadv::defense {

namespace {

double fraction_correct(const nn::MlpModel& model, const Matrix& features,
                        const std::vector<int>& labels) {
    const std::vector<int> preds = nn::predict_all(model, features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (preds[i] == labels[i]) ++correct;
    }
    return labels.empty() ? 0.0
                          : static_cast<double>(correct) /
                                static_cast<double>(labels.size());
}

} // namespace

std::pair<nn::MlpModel, DefenseReport>
adversarial_train(const nn::MlpModel& victim, const nn::LabeledSet& train_set,
                  const nn::LabeledSet& valid_set, const DefenseConfig& config,
                  std::uint64_t seed) {
    if (!(config.augmentation_ratio > 0.0 && config.augmentation_ratio <= 1.0)) {
        throw ConfigError("defense ratio must lie in (0,1]");
    }
    if (train_set.size() == 0) throw DataError("training set is empty");
    if (valid_set.size() == 0) throw DataError("validation set is empty");

    DefenseReport report;

    // Robust accuracy attacks the model under evaluation, so the victim and
    // the defended model each face examples crafted against themselves.
    const attacks::TestSetAttack adv_victim = attacks::attack_test_set(
        victim, valid_set.features, valid_set.labels, config.attack_spec);
    report.pre_defense_adv_accuracy =
        fraction_correct(victim, adv_victim.adversarial, valid_set.labels);

    const std::size_t n = train_set.size();
    const auto m = static_cast<std::size_t>(
        std::llround(config.augmentation_ratio * static_cast<double>(n)));
    report.n_augmented = m;

    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(m);
    std::sort(indices.begin(), indices.end());

    Matrix subset(m, train_set.features.cols());
    std::vector<int> subset_labels(m);
    for (std::size_t r = 0; r < m; ++r) {
        const auto src = train_set.features.row(indices[r]);
        std::copy(src.begin(), src.end(), subset.row(r).begin());
        subset_labels[r] = train_set.labels[indices[r]];
    }

    const attacks::TestSetAttack twins =
        attacks::attack_test_set(victim, subset, subset_labels, config.attack_spec);

    nn::LabeledSet augmented;
    augmented.features = Matrix(n + m, train_set.features.cols());
    augmented.labels.reserve(n + m);
    for (std::size_t r = 0; r < n; ++r) {
        const auto src = train_set.features.row(r);
        std::copy(src.begin(), src.end(), augmented.features.row(r).begin());
        augmented.labels.push_back(train_set.labels[r]);
    }
    for (std::size_t r = 0; r < m; ++r) {
        const auto src = twins.adversarial.row(r);
        std::copy(src.begin(), src.end(), augmented.features.row(n + r).begin());
        augmented.labels.push_back(subset_labels[r]);
    }

    log::info("adversarial training: " + std::to_string(m) + " augmented rows, " +
              attacks::attack_kind(config.attack_spec) + " attack");

    auto [defended, train_report] =
        nn::train(victim, augmented, valid_set, config.retrain);
    (void)train_report;

    const attacks::TestSetAttack adv_defended = attacks::attack_test_set(
        defended, valid_set.features, valid_set.labels, config.attack_spec);
    report.post_defense_adv_accuracy =
        fraction_correct(defended, adv_defended.adversarial, valid_set.labels);
    report.post_defense_clean_accuracy =
        fraction_correct(defended, valid_set.features, valid_set.labels);
    return {std::move(defended), std::move(report)};
}

} // namespace sonadv::defense
