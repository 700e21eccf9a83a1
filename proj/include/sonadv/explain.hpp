#ifndef SONADV_EXPLAIN_HPP
#define SONADV_EXPLAIN_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "sonadv/dataset.hpp"
#include "sonadv/matrix.hpp"

namespace sonadv::explain {

struct FeatureImportance {
    std::size_t encoded_index = 0;
    std::string name;
    std::size_t nonzero_delta_count = 0;
    double mean_abs_delta = 0.0; // mean |delta| over the rows that changed
};

// One row per encoded feature, sorted by nonzero_delta_count desc, then
// mean_abs_delta desc, then name asc.
using FeatureImportanceTable = std::vector<FeatureImportance>;

// Ranks features by how often the adversarial matrix differs from the
// original (exact floating-point inequality per cell).
FeatureImportanceTable feature_deltas(const Matrix& original, const Matrix& adversarial,
                                      const data::FeatureSchema& schema);

struct AffectedFeature {
    std::string encoded_name;
    std::string raw_name;
    data::FeatureGroup group;
    std::size_t nonzero_delta_count = 0;
    double mean_abs_delta = 0.0;
};

struct AffectedFeatureReport {
    std::vector<AffectedFeature> top_features; // table order
    // Features per group among the top-k, indexed by FeatureGroup.
    std::array<std::size_t, 3> group_counts{};
};

// Maps the top-k table entries back to their raw-schema feature groups.
AffectedFeatureReport affected_feature_report(const FeatureImportanceTable& table,
                                              std::size_t top_k,
                                              const data::FeatureSchema& schema);

// Human-readable group names for report output.
const char* group_label(data::FeatureGroup group);

// "feature,name,count,mean_abs_delta" rows in table order.
void save_importance_csv(const FeatureImportanceTable& table,
                         const std::filesystem::path& path);

} // namespace sonadv::explain

#endif
