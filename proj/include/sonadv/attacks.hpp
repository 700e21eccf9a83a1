#ifndef SONADV_ATTACKS_HPP
#define SONADV_ATTACKS_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sonadv/matrix.hpp"
#include "sonadv/nn.hpp"

namespace sonadv::attacks {

struct FgsmConfig {
    double epsilon = 0.1; // perturbation magnitude in scaled-feature units
    bool clip = true;
};

struct JsmaConfig {
    double theta = 1.0;           // per-step feature change, in [-1,1] \ {0}
    std::size_t max_features = 6; // distortion budget
    int target_class = 0;
};

using AttackSpec = std::variant<FgsmConfig, JsmaConfig>;
std::string attack_kind(const AttackSpec& spec);

struct AttackResult {
    std::vector<double> adversarial_x;
    std::vector<double> delta;                 // adversarial_x - original_x, exactly
    std::vector<std::size_t> modified_features; // nonzero support of delta
    bool success = false;
    std::size_t queries = 0; // model evaluations (forward or gradient passes)
};

// One-step sign attack: x* = clip(x + eps * sign(grad)), with sign(0) = 0.
// Holds max|delta| <= eps exactly and keeps x* inside [0,1] when clipping.
AttackResult fgsm_attack(const nn::MlpModel& model, std::span<const double> x,
                         int true_label, const FgsmConfig& config);

// Per-feature saliency scores for pushing the target class, in both
// directions. increase[i] > 0 means raising feature i helps the target.
struct SaliencyScores {
    std::vector<double> increase;
    std::vector<double> decrease;
};
SaliencyScores saliency_map(const Matrix& jacobian, int target_class);

// Iterative single-feature saliency attack toward target_class. Recomputes
// the Jacobian each step, moves the best-scoring feature by +/-|theta|
// (clipped to [0,1]), and retires features that saturate at a bound.
AttackResult jsma_attack(const nn::MlpModel& model, std::span<const double> x,
                         const JsmaConfig& config);

// Row-wise attack over a test matrix. JSMA rows target the class opposite
// the true label. Row order is preserved; results are deterministic.
struct TestSetAttack {
    Matrix adversarial;
    std::vector<AttackResult> results;
};
TestSetAttack attack_test_set(const nn::MlpModel& model, const Matrix& features,
                              const std::vector<int>& labels, const AttackSpec& spec);

} // namespace sonadv::attacks

#endif
