#ifndef SONADV_DATASET_HPP
#define SONADV_DATASET_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sonadv/matrix.hpp"

namespace sonadv::data {

// E-RAB abnormal-release causes tracked per record.
enum class DropReason { Tnl = 0, Radio, Congestion, Handover, Other };
inline constexpr std::size_t kNumDropReasons = 5;
const char* drop_reason_name(DropReason r);

enum class Label { Normal = 0, Anomaly = 1 };
const char* label_name(Label l);

// One hourly eNodeB measurement row.
struct KpiRecord {
    int hour_of_day = 0; // 0..23
    int day_index = 0;
    std::string enodeb_id;
    std::string cell_id;
    std::array<std::int64_t, kNumDropReasons> drop_reason_counts{};
    double signal_strength_dbm = 0.0;
    double latency_ms = 0.0;
    std::int64_t active_users = 0;
    std::int64_t erab_normal_releases = 0;
    std::int64_t erab_abnormal_releases = 0;
    Label label = Label::Normal;

    std::int64_t reason_count(DropReason r) const {
        return drop_reason_counts[static_cast<std::size_t>(r)];
    }
    // erab_abnormal_releases must equal the sum of drop_reason_counts.
    bool counts_consistent() const;

    bool operator==(const KpiRecord& other) const = default;
};

// E-RAB Drop Rate as a percentage: 100 * abnormal / normal.
// Throws UndefinedRateError when normal_releases is zero.
double compute_drop_rate(std::int64_t abnormal_releases, std::int64_t normal_releases);

enum class FeatureKind { Numeric, Nominal };
enum class FeatureGroup { TimeLocation, Dependent, Independent };
const char* feature_group_name(FeatureGroup g);

// Where a feature's value comes from: stored on the record (and in CSV files)
// or derived from record fields at encode time.
enum class FeatureSource { Record, Derived };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    FeatureGroup group = FeatureGroup::Independent;
    FeatureSource source = FeatureSource::Record;
    std::vector<std::string> categories; // nominal only

    std::size_t encoded_width() const {
        return kind == FeatureKind::Nominal ? categories.size() : 1;
    }
};

// Ordered feature descriptors defining the raw -> encoded column mapping.
class FeatureSchema {
public:
    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<FeatureSpec> features);

    const std::vector<FeatureSpec>& features() const { return features_; }
    std::size_t raw_width() const { return features_.size(); }
    std::size_t encoded_width() const { return encoded_width_; }

    // Encoded column names; nominal features expand to "name=category".
    const std::vector<std::string>& encoded_names() const { return encoded_names_; }
    // Raw feature index owning each encoded column.
    const std::vector<std::size_t>& encoded_owner() const { return encoded_owner_; }
    const FeatureSpec& owner_of(std::size_t encoded_col) const {
        return features_[encoded_owner_[encoded_col]];
    }

    bool operator==(const FeatureSchema& other) const {
        return features_raw_equal(other);
    }

private:
    bool features_raw_equal(const FeatureSchema& other) const;

    std::vector<FeatureSpec> features_;
    std::vector<std::string> encoded_names_;
    std::vector<std::size_t> encoded_owner_;
    std::size_t encoded_width_ = 0;
};

// The default 25-feature schema (26 encoded columns; enodeb_id is the one
// nominal feature). Category set sized for `n_enodebs` generator ids.
FeatureSchema default_schema(std::size_t n_enodebs = 2);

// Same feature list with an explicit eNodeB id category set (for data whose
// ids did not come from the generator).
FeatureSchema schema_for_enodebs(std::vector<std::string> enodeb_ids);

// The eNodeB identifier used by the generator for index `i`.
std::string enodeb_name(std::size_t i);

struct GeneratorConfig {
    std::size_t n_enodebs = 2;
    std::size_t n_days = 93;
    double anomaly_rate = 524.0 / 4464.0;
    double tnl_anomaly_share = 0.7;
    std::uint64_t seed = 1;
    double drop_rate_anomaly_threshold = 5.0; // percent

    std::size_t total_records() const { return n_enodebs * n_days * 24; }
};

// Deterministic synthetic dataset mirroring hourly E-RAB KPI records.
// Anomalies carry drop-count spikes that push the drop rate above the
// configured threshold; labels are the injected ground truth.
std::vector<KpiRecord> generate(const GeneratorConfig& config);

// Relabels records by the drop-rate threshold (anomaly iff rate > threshold,
// strictly). Records with an undefined rate (zero normal releases) keep their
// existing label; their indices are returned flagged.
std::vector<std::size_t> label_records(std::vector<KpiRecord>& records, double threshold);

// One-hot encodes nominal features and evaluates derived columns.
// Throws EncodingError for a category outside the schema.
struct RawEncoded {
    Matrix features;          // n x encoded_width
    std::vector<int> labels;  // 0 normal, 1 anomaly
};
RawEncoded encode(const std::vector<KpiRecord>& records, const FeatureSchema& schema);

// Per-column min/max fitted on training rows only.
struct ScalerParams {
    std::vector<double> min;
    std::vector<double> max;

    bool operator==(const ScalerParams& other) const = default;
};
ScalerParams fit_scaler(const Matrix& train_matrix);
// (v - min) / (max - min); constant columns map to 0; results clamp to [0,1].
Matrix apply_scaler(const Matrix& matrix, const ScalerParams& scaler);

// Encoded, scaled features ready for the model.
struct EncodedDataset {
    Matrix features;
    std::vector<int> labels;
    FeatureSchema schema;
    ScalerParams scaling;

    std::size_t size() const { return labels.size(); }
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

// Deterministic (seeded) three-way split. Partition sizes follow
// largest-remainder rounding; ties go to the later partition. When
// stratified, the same rule applies per class and every partition must
// receive at least one anomaly.
SplitIndices split(const std::vector<int>& labels, const std::array<double, 3>& ratios,
                   std::uint64_t seed, bool stratified);

std::vector<KpiRecord> select_records(const std::vector<KpiRecord>& records,
                                      const std::vector<std::size_t>& indices);

// CSV persistence. The file holds one column per schema feature (derived
// columns are written as computed values and recomputed on load) plus a
// trailing "label" column; reals carry 17 significant digits so a
// save -> load round trip reproduces the records exactly. load_csv checks
// the header against the schema's feature names and reports malformed cells
// with their row and column.
void save_csv(const std::vector<KpiRecord>& records, const std::filesystem::path& path);
std::vector<KpiRecord> load_csv(const std::filesystem::path& path,
                                const FeatureSchema& schema);

// The CSV column names, in file order (feature names then "label").
const std::vector<std::string>& csv_columns();

} // namespace sonadv::data

#endif
