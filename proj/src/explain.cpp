#include "sonadv/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sonadv/errors.hpp"

namespace sonadv::explain {

FeatureImportanceTable feature_deltas(const Matrix& original, const Matrix& adversarial,
                                      const data::FeatureSchema& schema) {
    if (original.rows() != adversarial.rows() || original.cols() != adversarial.cols()) {
        throw ShapeError("original and adversarial matrices differ in shape");
    }
    if (original.cols() != schema.encoded_width()) {
        throw ShapeError("matrix width " + std::to_string(original.cols()) +
                         " does not match schema encoded width " +
                         std::to_string(schema.encoded_width()));
    }

    FeatureImportanceTable table(original.cols());
    std::vector<double> abs_sums(original.cols(), 0.0);
    for (std::size_t c = 0; c < original.cols(); ++c) {
        table[c].encoded_index = c;
        table[c].name = schema.encoded_names()[c];
    }
    for (std::size_t r = 0; r < original.rows(); ++r) {
        for (std::size_t c = 0; c < original.cols(); ++c) {
            const double diff = adversarial.at(r, c) - original.at(r, c);
            if (diff != 0.0) {
                ++table[c].nonzero_delta_count;
                abs_sums[c] += std::abs(diff);
            }
        }
    }
    for (std::size_t c = 0; c < original.cols(); ++c) {
        if (table[c].nonzero_delta_count > 0) {
            table[c].mean_abs_delta =
                abs_sums[c] / static_cast<double>(table[c].nonzero_delta_count);
        }
    }

    std::sort(table.begin(), table.end(),
              [](const FeatureImportance& a, const FeatureImportance& b) {
                  if (a.nonzero_delta_count != b.nonzero_delta_count) {
                      return a.nonzero_delta_count > b.nonzero_delta_count;
                  }
                  if (a.mean_abs_delta != b.mean_abs_delta) {
                      return a.mean_abs_delta > b.mean_abs_delta;
                  }
                  return a.name < b.name;
              });
    return table;
}

AffectedFeatureReport affected_feature_report(const FeatureImportanceTable& table,
                                              std::size_t top_k,
                                              const data::FeatureSchema& schema) {
    AffectedFeatureReport report;
    const std::size_t k = std::min(top_k, table.size());
    for (std::size_t i = 0; i < k; ++i) {
        const FeatureImportance& entry = table[i];
        if (entry.encoded_index >= schema.encoded_width()) {
            throw ShapeError("table entry index " + std::to_string(entry.encoded_index) +
                             " outside the schema");
        }
        const data::FeatureSpec& owner = schema.owner_of(entry.encoded_index);
        AffectedFeature feature;
        feature.encoded_name = entry.name;
        feature.raw_name = owner.name;
        feature.group = owner.group;
        feature.nonzero_delta_count = entry.nonzero_delta_count;
        feature.mean_abs_delta = entry.mean_abs_delta;
        report.group_counts[static_cast<std::size_t>(owner.group)] += 1;
        report.top_features.push_back(std::move(feature));
    }
    return report;
}

const char* group_label(data::FeatureGroup group) {
    switch (group) {
    case data::FeatureGroup::TimeLocation: return "time/location";
    case data::FeatureGroup::Dependent: return "dependent (drop reasons)";
    case data::FeatureGroup::Independent: return "independent";
    }
    return "unknown";
}

void save_importance_csv(const FeatureImportanceTable& table,
                         const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << "feature,name,count,mean_abs_delta\n";
    for (const FeatureImportance& entry : table) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", entry.mean_abs_delta);
        out << entry.encoded_index << ',' << entry.name << ','
            << entry.nonzero_delta_count << ',' << buf << '\n';
    }
    if (!out) throw DataError("failed writing " + path.string());
}

} // namespace sonadv::explain
