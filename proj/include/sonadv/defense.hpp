#ifndef SONADV_DEFENSE_HPP
#define SONADV_DEFENSE_HPP

#include <cstdint>

#include "sonadv/attacks.hpp"
#include "sonadv/nn.hpp"

namespace sonadv::defense {

struct DefenseConfig {
    attacks::AttackSpec attack_spec;
    double augmentation_ratio = 1.0; // fraction of training rows to duplicate
    nn::TrainConfig retrain;
};

// Accuracies below are measured on the validation set passed to
// adversarial_train. Adversarial accuracy attacks the model being measured:
// the pre number attacks the victim, the post number attacks the defended
// model. The augmentation set itself is crafted once against the victim.
struct DefenseReport {
    std::size_t n_augmented = 0;
    double pre_defense_adv_accuracy = 0.0;
    double post_defense_adv_accuracy = 0.0;
    double post_defense_clean_accuracy = 0.0;
};

// Adversarial training: crafts adversarial twins of a seeded random subset of
// the training rows against the victim model, appends them with the original
// labels, and retrains warm-started from the victim's weights.
std::pair<nn::MlpModel, DefenseReport>
adversarial_train(const nn::MlpModel& victim, const nn::LabeledSet& train_set,
                  const nn::LabeledSet& valid_set, const DefenseConfig& config,
                  std::uint64_t seed);

} // namespace sonadv::defense

#endif
