#include "sonadv/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sonadv/errors.hpp"

namespace sonadv::attacks {

namespace {

void check_box(std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
            throw DataError("input coordinate " + std::to_string(i) +
                            " lies outside the [0,1] box");
        }
    }
}

void check_fgsm(const FgsmConfig& config) {
    if (!(config.epsilon >= 0.0 && config.epsilon <= 1.0)) {
        throw ConfigError("fgsm epsilon must lie in [0,1]");
    }
}

void check_jsma(const JsmaConfig& config, std::size_t input_dim) {
    if (config.theta == 0.0 || !(std::abs(config.theta) <= 1.0)) {
        throw ConfigError("jsma theta must lie in [-1,1] and be nonzero");
    }
    if (config.max_features > input_dim) {
        throw ConfigError("jsma max_features exceeds the input dimension");
    }
}

std::vector<std::size_t> nonzero_support(const std::vector<double>& delta) {
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        if (delta[i] != 0.0) support.push_back(i);
    }
    return support;
}

// Pulls a coordinate back toward its origin until the move fits the budget;
// rounding can otherwise leave |adv - x| one ulp above eps.
double bound_move(double adv, double x, double eps) {
    while (std::abs(adv - x) > eps) adv = std::nextafter(adv, x);
    return adv;
}

template <class E>
[[noreturn]] void rethrow_with_row(const E& e, std::size_t row) {
    throw E("row " + std::to_string(row) + ": " + e.what());
}

} // namespace

std::string attack_kind(const AttackSpec& spec) {
    return std::holds_alternative<FgsmConfig>(spec) ? "fgsm" : "jsma";
}

AttackResult fgsm_attack(const nn::MlpModel& model, std::span<const double> x,
                         int true_label, const FgsmConfig& config) {
    check_fgsm(config);
    check_box(x);

    AttackResult result;
    const std::vector<double> grad = nn::input_gradient(model, x, true_label);
    result.queries = 1;

    result.adversarial_x.assign(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double g = grad[i];
        const double sign = g > 0.0 ? 1.0 : g < 0.0 ? -1.0 : 0.0;
        double adv = x[i] + config.epsilon * sign;
        if (config.clip) adv = std::clamp(adv, 0.0, 1.0);
        result.adversarial_x[i] = bound_move(adv, x[i], config.epsilon);
    }

    result.delta.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) result.delta[i] = result.adversarial_x[i] - x[i];
    result.modified_features = nonzero_support(result.delta);
    result.success = nn::predict(model, result.adversarial_x) != true_label;
    ++result.queries;
    return result;
}

SaliencyScores saliency_map(const Matrix& jacobian, int target_class) {
    if (jacobian.rows() == 0 || jacobian.cols() == 0) {
        throw ShapeError("saliency map needs a nonempty Jacobian");
    }
    if (target_class < 0 || static_cast<std::size_t>(target_class) >= jacobian.rows()) {
        throw LabelError("target class " + std::to_string(target_class) +
                         " outside Jacobian rows [0, " + std::to_string(jacobian.rows()) +
                         ")");
    }
    const auto t = static_cast<std::size_t>(target_class);

    SaliencyScores scores;
    scores.increase.resize(jacobian.cols());
    scores.decrease.resize(jacobian.cols());
    for (std::size_t i = 0; i < jacobian.cols(); ++i) {
        const double jt = jacobian.at(t, i);
        double others = 0.0;
        for (std::size_t j = 0; j < jacobian.rows(); ++j) {
            if (j != t) others += jacobian.at(j, i);
        }
        scores.increase[i] = (jt < 0.0 || others > 0.0) ? 0.0 : jt * std::abs(others);
        scores.decrease[i] = (jt > 0.0 || others < 0.0) ? 0.0 : -jt * others;
    }
    return scores;
}

AttackResult jsma_attack(const nn::MlpModel& model, std::span<const double> x,
                         const JsmaConfig& config) {
    check_jsma(config, x.size());
    check_box(x);
    if (config.target_class < 0 ||
        static_cast<std::size_t>(config.target_class) >= model.output_dim()) {
        throw LabelError("target class " + std::to_string(config.target_class) +
                         " outside output range [0, " + std::to_string(model.output_dim()) +
                         ")");
    }

    AttackResult result;
    std::vector<double> cur(x.begin(), x.end());
    const double step = std::abs(config.theta);
    const std::size_t d = x.size();

    std::set<std::size_t> stepped;
    std::vector<bool> retired(d, false);
    int pred = nn::predict(model, cur);
    ++result.queries;

    // Bounded against direction flip-flops when |theta| < 1; with the default
    // theta every stepped feature saturates immediately.
    const std::size_t step_cap =
        2 * d * static_cast<std::size_t>(std::ceil(1.0 / step)) + 8;

    for (std::size_t iter = 0; iter < step_cap && pred != config.target_class; ++iter) {
        const Matrix jac = nn::class_jacobian(model, cur);
        ++result.queries;
        const SaliencyScores scores = saliency_map(jac, config.target_class);

        // Best (feature, direction): highest score, then lowest index, then
        // the increase direction.
        std::size_t best_i = d;
        bool best_up = true;
        double best_score = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            if (retired[i]) continue;
            if (stepped.count(i) == 0 && stepped.size() >= config.max_features) continue;
            if (cur[i] < 1.0 && scores.increase[i] > best_score) {
                best_i = i;
                best_up = true;
                best_score = scores.increase[i];
            }
            if (cur[i] > 0.0 && scores.decrease[i] > best_score) {
                best_i = i;
                best_up = false;
                best_score = scores.decrease[i];
            }
        }
        if (best_i == d) break;

        const double moved = cur[best_i] + (best_up ? step : -step);
        cur[best_i] = std::clamp(moved, 0.0, 1.0);
        stepped.insert(best_i);
        if (cur[best_i] == 0.0 || cur[best_i] == 1.0) retired[best_i] = true;

        pred = nn::predict(model, cur);
        ++result.queries;
    }

    result.adversarial_x = std::move(cur);
    result.delta.resize(d);
    for (std::size_t i = 0; i < d; ++i) result.delta[i] = result.adversarial_x[i] - x[i];
    result.modified_features = nonzero_support(result.delta);
    if (result.modified_features.size() > config.max_features) {
        throw InternalError("modified-feature count exceeded the budget");
    }
    result.success = pred == config.target_class;
    return result;
}

TestSetAttack attack_test_set(const nn::MlpModel& model, const Matrix& features,
                              const std::vector<int>& labels, const AttackSpec& spec) {
    if (features.rows() != labels.size()) {
        throw ShapeError("feature rows " + std::to_string(features.rows()) +
                         " do not match label count " + std::to_string(labels.size()));
    }
    if (const auto* fgsm = std::get_if<FgsmConfig>(&spec)) {
        check_fgsm(*fgsm);
    } else {
        check_jsma(std::get<JsmaConfig>(spec), features.cols());
        if (model.output_dim() != 2) {
            throw ConfigError("jsma over a test set needs a binary model to pick the "
                              "opposite class as target");
        }
    }

    TestSetAttack out;
    out.adversarial = Matrix(features.rows(), features.cols());
    out.results.reserve(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        AttackResult result;
        try {
            if (const auto* fgsm = std::get_if<FgsmConfig>(&spec)) {
                result = fgsm_attack(model, features.row(r), labels[r], *fgsm);
            } else {
                JsmaConfig jsma = std::get<JsmaConfig>(spec);
                if (labels[r] != 0 && labels[r] != 1) {
                    throw LabelError("label " + std::to_string(labels[r]) +
                                     " is not binary");
                }
                jsma.target_class = 1 - labels[r];
                result = jsma_attack(model, features.row(r), jsma);
            }
        } catch (const ShapeError& e) {
            rethrow_with_row(e, r);
        } catch (const LabelError& e) {
            rethrow_with_row(e, r);
        } catch (const ConfigError& e) {
            rethrow_with_row(e, r);
        } catch (const DataError& e) {
            rethrow_with_row(e, r);
        } catch (const Error& e) {
            throw Error("row " + std::to_string(r) + ": " + e.what());
        }
        std::copy(result.adversarial_x.begin(), result.adversarial_x.end(),
                  out.adversarial.row(r).begin());
        out.results.push_back(std::move(result));
    }
    return out;
}

} // namespace sonadv::attacks
