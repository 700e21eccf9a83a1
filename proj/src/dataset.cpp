#include "sonadv/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "sonadv/errors.hpp"
#include "sonadv/log.hpp"

namespace sonadv::data {

namespace {

constexpr std::array<const char*, kNumDropReasons> kReasonNames = {
    "tnl", "radio", "congestion", "handover", "other"};

// Baseline drop mix for ordinary hours; TNL problems lead, matching how the
// anomaly spikes are biased.
constexpr std::array<double, kNumDropReasons> kReasonShares = {0.38, 0.27, 0.16, 0.12,
                                                               0.07};
constexpr double kBaselineDropRatePct = 2.8;
constexpr std::size_t kCellsPerEnodeb = 3;

// Feature identities in default-schema order.
enum class Field {
    HourOfDay,
    DayIndex,
    EnodebId,
    CellIndex,
    DropsTnl,
    DropsRadio,
    DropsCongestion,
    DropsHandover,
    DropsOther,
    ShareTnl,
    ShareRadio,
    ShareCongestion,
    ShareHandover,
    ShareOther,
    RateTnl,
    RateRadio,
    RateCongestion,
    RateHandover,
    RateOther,
    ErabNormalReleases,
    ErabAbnormalReleases,
    ErabDropRatePct,
    SignalStrengthDbm,
    LatencyMs,
    ActiveUsers,
};

struct FieldInfo {
    const char* name;
    Field field;
    FeatureGroup group;
    FeatureSource source;
    bool integral; // written as an integer in CSV files
};

constexpr std::array<FieldInfo, 25> kFields = {{
    {"hour_of_day", Field::HourOfDay, FeatureGroup::TimeLocation, FeatureSource::Record, true},
    {"day_index", Field::DayIndex, FeatureGroup::TimeLocation, FeatureSource::Record, true},
    {"enodeb_id", Field::EnodebId, FeatureGroup::TimeLocation, FeatureSource::Record, false},
    {"cell_index", Field::CellIndex, FeatureGroup::TimeLocation, FeatureSource::Derived, true},
    {"drops_tnl", Field::DropsTnl, FeatureGroup::Dependent, FeatureSource::Record, true},
    {"drops_radio", Field::DropsRadio, FeatureGroup::Dependent, FeatureSource::Record, true},
    {"drops_congestion", Field::DropsCongestion, FeatureGroup::Dependent, FeatureSource::Record, true},
    {"drops_handover", Field::DropsHandover, FeatureGroup::Dependent, FeatureSource::Record, true},
    {"drops_other", Field::DropsOther, FeatureGroup::Dependent, FeatureSource::Record, true},
    {"share_tnl", Field::ShareTnl, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"share_radio", Field::ShareRadio, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"share_congestion", Field::ShareCongestion, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"share_handover", Field::ShareHandover, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"share_other", Field::ShareOther, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"rate_tnl", Field::RateTnl, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"rate_radio", Field::RateRadio, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"rate_congestion", Field::RateCongestion, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"rate_handover", Field::RateHandover, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"rate_other", Field::RateOther, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"erab_normal_releases", Field::ErabNormalReleases, FeatureGroup::Dependent, FeatureSource::Record, true},
    {"erab_abnormal_releases", Field::ErabAbnormalReleases, FeatureGroup::Dependent, FeatureSource::Record, true},
    {"erab_drop_rate_pct", Field::ErabDropRatePct, FeatureGroup::Dependent, FeatureSource::Derived, false},
    {"signal_strength_dbm", Field::SignalStrengthDbm, FeatureGroup::Independent, FeatureSource::Record, false},
    {"latency_ms", Field::LatencyMs, FeatureGroup::Independent, FeatureSource::Record, false},
    {"active_users", Field::ActiveUsers, FeatureGroup::Independent, FeatureSource::Record, true},
}};

const FieldInfo* find_field(const std::string& name) {
    for (const FieldInfo& f : kFields) {
        if (name == f.name) return &f;
    }
    return nullptr;
}

std::int64_t cell_index_of(const KpiRecord& record) {
    const std::string& id = record.cell_id;
    std::int64_t value = 0;
    if (id.size() >= 2 && id[0] == 'C') {
        auto [ptr, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), value);
        if (ec == std::errc() && ptr == id.data() + id.size() && value >= 0) return value;
    }
    throw EncodingError("cell_id value \"" + id + "\" is not of the form C<index>");
}

double numeric_value(const KpiRecord& r, Field field) {
    const double abnormal = static_cast<double>(r.erab_abnormal_releases);
    const double normal = static_cast<double>(r.erab_normal_releases);
    auto share = [&](DropReason reason) {
        return r.erab_abnormal_releases == 0
                   ? 0.0
                   : static_cast<double>(r.reason_count(reason)) / abnormal;
    };
    auto rate = [&](DropReason reason) {
        return r.erab_normal_releases == 0
                   ? 0.0
                   : 100.0 * static_cast<double>(r.reason_count(reason)) / normal;
    };
    switch (field) {
    case Field::HourOfDay: return static_cast<double>(r.hour_of_day);
    case Field::DayIndex: return static_cast<double>(r.day_index);
    case Field::CellIndex: return static_cast<double>(cell_index_of(r));
    case Field::DropsTnl: return static_cast<double>(r.reason_count(DropReason::Tnl));
    case Field::DropsRadio: return static_cast<double>(r.reason_count(DropReason::Radio));
    case Field::DropsCongestion:
        return static_cast<double>(r.reason_count(DropReason::Congestion));
    case Field::DropsHandover:
        return static_cast<double>(r.reason_count(DropReason::Handover));
    case Field::DropsOther: return static_cast<double>(r.reason_count(DropReason::Other));
    case Field::ShareTnl: return share(DropReason::Tnl);
    case Field::ShareRadio: return share(DropReason::Radio);
    case Field::ShareCongestion: return share(DropReason::Congestion);
    case Field::ShareHandover: return share(DropReason::Handover);
    case Field::ShareOther: return share(DropReason::Other);
    case Field::RateTnl: return rate(DropReason::Tnl);
    case Field::RateRadio: return rate(DropReason::Radio);
    case Field::RateCongestion: return rate(DropReason::Congestion);
    case Field::RateHandover: return rate(DropReason::Handover);
    case Field::RateOther: return rate(DropReason::Other);
    case Field::ErabNormalReleases: return normal;
    case Field::ErabAbnormalReleases: return abnormal;
    case Field::ErabDropRatePct:
        return r.erab_normal_releases == 0 ? 0.0 : 100.0 * abnormal / normal;
    case Field::SignalStrengthDbm: return r.signal_strength_dbm;
    case Field::LatencyMs: return r.latency_ms;
    case Field::ActiveUsers: return static_cast<double>(r.active_users);
    case Field::EnodebId: break;
    }
    throw InternalError("numeric_value called for a nominal field");
}

std::string real_to_csv(double v) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

[[noreturn]] void cell_error(std::size_t row, const std::string& column,
                             const std::string& what) {
    throw ParseError("row " + std::to_string(row) + ", column \"" + column + "\": " + what);
}

std::int64_t parse_int_cell(const std::string& cell, std::size_t row,
                            const std::string& column) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        cell_error(row, column, "\"" + cell + "\" is not an integer");
    }
    return value;
}

double parse_real_cell(const std::string& cell, std::size_t row,
                       const std::string& column) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        cell_error(row, column, "\"" + cell + "\" is not a number");
    }
    return value;
}

void check_csv_string(const std::string& value, const char* what) {
    if (value.empty() || value.find_first_of(",\"\r\n") != std::string::npos) {
        throw DataError(std::string(what) + " \"" + value +
                        "\" cannot be stored in a CSV cell");
    }
}

} // namespace

const char* drop_reason_name(DropReason r) {
    return kReasonNames[static_cast<std::size_t>(r)];
}

const char* label_name(Label l) { return l == Label::Normal ? "normal" : "anomaly"; }

const char* feature_group_name(FeatureGroup g) {
    switch (g) {
    case FeatureGroup::TimeLocation: return "time_location";
    case FeatureGroup::Dependent: return "dependent";
    case FeatureGroup::Independent: return "independent";
    }
    return "unknown";
}

bool KpiRecord::counts_consistent() const {
    std::int64_t sum = 0;
    for (std::int64_t c : drop_reason_counts) {
        if (c < 0) return false;
        sum += c;
    }
    return sum == erab_abnormal_releases;
}

double compute_drop_rate(std::int64_t abnormal_releases, std::int64_t normal_releases) {
    if (normal_releases == 0) {
        throw UndefinedRateError("drop rate undefined: zero normal releases");
    }
    return 100.0 * static_cast<double>(abnormal_releases) /
           static_cast<double>(normal_releases);
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features)
    : features_(std::move(features)) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < features_.size(); ++i) {
        const FeatureSpec& f = features_[i];
        if (f.name.empty()) throw ConfigError("schema feature name must be non-empty");
        if (!seen.insert(f.name).second) {
            throw ConfigError("duplicate schema feature name \"" + f.name + "\"");
        }
        if (f.kind == FeatureKind::Nominal) {
            if (f.categories.empty()) {
                throw ConfigError("nominal feature \"" + f.name + "\" has no categories");
            }
            std::set<std::string> cats(f.categories.begin(), f.categories.end());
            if (cats.size() != f.categories.size()) {
                throw ConfigError("nominal feature \"" + f.name +
                                  "\" has duplicate categories");
            }
            for (const std::string& c : f.categories) {
                encoded_names_.push_back(f.name + "=" + c);
                encoded_owner_.push_back(i);
            }
        } else {
            encoded_names_.push_back(f.name);
            encoded_owner_.push_back(i);
        }
    }
    encoded_width_ = encoded_names_.size();
}

bool FeatureSchema::features_raw_equal(const FeatureSchema& other) const {
    if (features_.size() != other.features_.size()) return false;
    for (std::size_t i = 0; i < features_.size(); ++i) {
        const FeatureSpec& a = features_[i];
        const FeatureSpec& b = other.features_[i];
        if (a.name != b.name || a.kind != b.kind || a.group != b.group ||
            a.source != b.source || a.categories != b.categories) {
            return false;
        }
    }
    return true;
}

std::string enodeb_name(std::size_t i) { return "eNB-" + std::to_string(i); }

FeatureSchema schema_for_enodebs(std::vector<std::string> enodeb_ids) {
    if (enodeb_ids.empty()) throw ConfigError("schema needs at least one eNodeB id");
    std::vector<FeatureSpec> specs;
    specs.reserve(kFields.size());
    for (const FieldInfo& f : kFields) {
        FeatureSpec spec;
        spec.name = f.name;
        spec.group = f.group;
        spec.source = f.source;
        if (f.field == Field::EnodebId) {
            spec.kind = FeatureKind::Nominal;
            spec.categories = enodeb_ids;
        } else {
            spec.kind = FeatureKind::Numeric;
        }
        specs.push_back(std::move(spec));
    }
    return FeatureSchema(std::move(specs));
}

FeatureSchema default_schema(std::size_t n_enodebs) {
    if (n_enodebs == 0) throw ConfigError("schema needs at least one eNodeB id");
    std::vector<std::string> ids;
    ids.reserve(n_enodebs);
    for (std::size_t i = 0; i < n_enodebs; ++i) ids.push_back(enodeb_name(i));
    return schema_for_enodebs(std::move(ids));
}

std::vector<KpiRecord> generate(const GeneratorConfig& config) {
    if (config.n_enodebs == 0) throw ConfigError("generator.n_enodebs must be positive");
    if (config.n_days == 0) throw ConfigError("generator.n_days must be positive");
    if (!(config.anomaly_rate > 0.0 && config.anomaly_rate < 1.0)) {
        throw ConfigError("generator.anomaly_rate must lie in (0,1)");
    }
    if (!(config.tnl_anomaly_share >= 0.0 && config.tnl_anomaly_share <= 1.0)) {
        throw ConfigError("generator.tnl_anomaly_share must lie in [0,1]");
    }
    if (!(config.drop_rate_anomaly_threshold > 0.0)) {
        throw ConfigError("generator.drop_rate_anomaly_threshold must be positive");
    }

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::bernoulli_distribution is_anomaly(config.anomaly_rate);

    std::vector<KpiRecord> records;
    records.reserve(config.total_records());

    for (std::size_t e = 0; e < config.n_enodebs; ++e) {
        const double site_base = 900.0 * (1.0 + 0.1 * static_cast<double>(e));
        for (std::size_t d = 0; d < config.n_days; ++d) {
            for (int h = 0; h < 24; ++h) {
                KpiRecord r;
                r.hour_of_day = h;
                r.day_index = static_cast<int>(d);
                r.enodeb_id = enodeb_name(e);
                r.cell_id = "C" + std::to_string((e * 7 + d * 5 +
                                                  static_cast<std::size_t>(h)) %
                                                 kCellsPerEnodeb);

                // Diurnal load: quiet around 03:00, peak around 15:00.
                const double load =
                    0.3 + 0.35 * (1.0 - std::cos(2.0 * M_PI * (h - 3) / 24.0));
                const double volume_noise =
                    std::clamp(1.0 + 0.06 * gauss(rng), 0.75, 1.25);
                r.erab_normal_releases = std::max<std::int64_t>(
                    1, std::llround(site_base * load * volume_noise));
                r.active_users = std::max<std::int64_t>(
                    1, std::llround(static_cast<double>(r.erab_normal_releases) * 0.15 *
                                    (0.9 + 0.2 * uni(rng))));
                r.signal_strength_dbm = -92.0 - 8.0 * (1.0 - load) + 1.5 * gauss(rng);
                r.latency_ms = (22.0 + 26.0 * load) *
                               std::clamp(1.0 + 0.05 * gauss(rng), 0.8, 1.2);

                // Busy hours drop more; the spread keeps ordinary rates in a
                // continuum below the anomaly threshold.
                const double base_rate_pct =
                    kBaselineDropRatePct * (0.45 + 0.75 * load + 0.25 * uni(rng));
                const double base_total = base_rate_pct / 100.0 *
                                          static_cast<double>(r.erab_normal_releases);
                for (std::size_t reason = 0; reason < kNumDropReasons; ++reason) {
                    const double mean = base_total * kReasonShares[reason];
                    std::int64_t count = 0;
                    if (mean > 0.0) {
                        std::poisson_distribution<std::int64_t> pois(mean);
                        count = pois(rng);
                    }
                    r.drop_reason_counts[reason] = count;
                }

                const double threshold = config.drop_rate_anomaly_threshold;
                if (is_anomaly(rng)) {
                    std::size_t spike_reason = static_cast<std::size_t>(DropReason::Tnl);
                    if (uni(rng) >= config.tnl_anomaly_share) {
                        spike_reason = 1 + static_cast<std::size_t>(
                                               uni(rng) * (kNumDropReasons - 1));
                        spike_reason = std::min(spike_reason, kNumDropReasons - 1);
                    }
                    const double target_rate = threshold * (1.7 + 1.3 * uni(rng));
                    const auto needed = static_cast<std::int64_t>(std::ceil(
                        target_rate / 100.0 *
                        static_cast<double>(r.erab_normal_releases)));
                    std::int64_t current = 0;
                    for (std::int64_t c : r.drop_reason_counts) current += c;
                    if (needed > current) {
                        r.drop_reason_counts[spike_reason] += needed - current;
                    }
                    r.label = Label::Anomaly;
                } else {
                    // Keep ordinary hours at or below the threshold so the
                    // injected labels agree with threshold labeling.
                    const auto cap = static_cast<std::int64_t>(std::floor(
                        threshold / 100.0 *
                        static_cast<double>(r.erab_normal_releases)));
                    std::int64_t total = 0;
                    for (std::int64_t c : r.drop_reason_counts) total += c;
                    while (total > cap) {
                        auto it = std::max_element(r.drop_reason_counts.begin(),
                                                   r.drop_reason_counts.end());
                        --*it;
                        --total;
                    }
                    r.label = Label::Normal;
                }

                std::int64_t total = 0;
                for (std::int64_t c : r.drop_reason_counts) total += c;
                r.erab_abnormal_releases = total;
                records.push_back(std::move(r));
            }
        }
    }
    return records;
}

std::vector<std::size_t> label_records(std::vector<KpiRecord>& records, double threshold) {
    if (!(threshold > 0.0)) throw ConfigError("labeling threshold must be positive");
    std::vector<std::size_t> undefined;
    for (std::size_t i = 0; i < records.size(); ++i) {
        KpiRecord& r = records[i];
        if (r.erab_normal_releases == 0) {
            undefined.push_back(i);
            continue;
        }
        const double rate = compute_drop_rate(r.erab_abnormal_releases,
                                              r.erab_normal_releases);
        r.label = rate > threshold ? Label::Anomaly : Label::Normal;
    }
    if (!undefined.empty()) {
        log::warn(std::to_string(undefined.size()) +
                  " record(s) with zero normal releases kept their existing label");
    }
    return undefined;
}

RawEncoded encode(const std::vector<KpiRecord>& records, const FeatureSchema& schema) {
    RawEncoded out{Matrix(records.size(), schema.encoded_width()), {}};
    out.labels.reserve(records.size());

    // Resolve every schema feature to an extractor up front.
    struct Column {
        const FeatureSpec* spec;
        const FieldInfo* info;
    };
    std::vector<Column> columns;
    columns.reserve(schema.features().size());
    for (const FeatureSpec& spec : schema.features()) {
        const FieldInfo* info = find_field(spec.name);
        if (info == nullptr) {
            throw EncodingError("schema feature \"" + spec.name +
                                "\" has no record mapping");
        }
        columns.push_back({&spec, info});
    }

    for (std::size_t row = 0; row < records.size(); ++row) {
        const KpiRecord& r = records[row];
        std::size_t col = 0;
        for (const Column& c : columns) {
            if (c.spec->kind == FeatureKind::Nominal) {
                const std::string& value = r.enodeb_id;
                const auto& cats = c.spec->categories;
                const auto it = std::find(cats.begin(), cats.end(), value);
                if (it == cats.end()) {
                    throw EncodingError("feature \"" + c.spec->name + "\" value \"" +
                                        value + "\" is not in the schema categories");
                }
                const auto hot = static_cast<std::size_t>(it - cats.begin());
                for (std::size_t k = 0; k < cats.size(); ++k) {
                    out.features.at(row, col + k) = k == hot ? 1.0 : 0.0;
                }
                col += cats.size();
            } else {
                out.features.at(row, col) = numeric_value(r, c.info->field);
                ++col;
            }
        }
        out.labels.push_back(r.label == Label::Anomaly ? 1 : 0);
    }
    return out;
}

ScalerParams fit_scaler(const Matrix& train_matrix) {
    if (train_matrix.rows() == 0 || train_matrix.cols() == 0) {
        throw DataError("cannot fit a scaler on an empty matrix");
    }
    ScalerParams p;
    p.min.assign(train_matrix.cols(), std::numeric_limits<double>::infinity());
    p.max.assign(train_matrix.cols(), -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < train_matrix.rows(); ++r) {
        for (std::size_t c = 0; c < train_matrix.cols(); ++c) {
            const double v = train_matrix.at(r, c);
            p.min[c] = std::min(p.min[c], v);
            p.max[c] = std::max(p.max[c], v);
        }
    }
    return p;
}

Matrix apply_scaler(const Matrix& matrix, const ScalerParams& scaler) {
    if (matrix.cols() != scaler.min.size() || scaler.min.size() != scaler.max.size()) {
        throw ShapeError("scaler width " + std::to_string(scaler.min.size()) +
                         " does not match matrix width " + std::to_string(matrix.cols()));
    }
    Matrix out(matrix.rows(), matrix.cols());
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        for (std::size_t c = 0; c < matrix.cols(); ++c) {
            const double lo = scaler.min[c];
            const double hi = scaler.max[c];
            double v = hi > lo ? (matrix.at(r, c) - lo) / (hi - lo) : 0.0;
            out.at(r, c) = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

namespace {

// Largest-remainder apportionment of n into parts proportional to ratios;
// remainder ties go to the later part.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& ratios) {
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < 3; ++p) {
        const double target = ratios[p] * static_cast<double>(n);
        sizes[p] = static_cast<std::size_t>(std::floor(target));
        frac[p] = target - std::floor(target);
        assigned += sizes[p];
    }
    if (assigned > n) throw InternalError("apportionment exceeded element count");
    std::size_t remainder = n - assigned;
    if (remainder > 3) throw InternalError("apportionment remainder out of range");
    std::array<std::size_t, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        return a > b;
    });
    for (std::size_t k = 0; k < remainder; ++k) sizes[order[k]] += 1;
    return sizes;
}

} // namespace

SplitIndices split(const std::vector<int>& labels, const std::array<double, 3>& ratios,
                   std::uint64_t seed, bool stratified) {
    if (labels.empty()) throw DataError("cannot split an empty dataset");
    double sum = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw ConfigError("split ratios must be nonnegative");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

    std::mt19937_64 rng(seed);
    SplitIndices out;
    auto assign = [&](const std::vector<std::size_t>& pool,
                      const std::array<std::size_t, 3>& sizes) {
        std::size_t pos = 0;
        for (std::size_t p = 0; p < 3; ++p) {
            auto& dst = p == 0 ? out.train : p == 1 ? out.valid : out.test;
            dst.insert(dst.end(), pool.begin() + static_cast<std::ptrdiff_t>(pos),
                       pool.begin() + static_cast<std::ptrdiff_t>(pos + sizes[p]));
            pos += sizes[p];
        }
    };

    if (stratified) {
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
        if (by_class.find(1) == by_class.end()) {
            throw StratificationError("stratified split requires at least one anomaly");
        }
        for (auto& [cls, pool] : by_class) {
            std::shuffle(pool.begin(), pool.end(), rng);
            const auto sizes = apportion(pool.size(), ratios);
            if (cls == 1 && (sizes[0] == 0 || sizes[1] == 0 || sizes[2] == 0)) {
                throw StratificationError(
                    "stratified split would leave a partition without anomalies");
            }
            assign(pool, sizes);
        }
    } else {
        std::vector<std::size_t> pool(labels.size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
        std::shuffle(pool.begin(), pool.end(), rng);
        assign(pool, apportion(pool.size(), ratios));
    }

    std::sort(out.train.begin(), out.train.end());
    std::sort(out.valid.begin(), out.valid.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::vector<KpiRecord> select_records(const std::vector<KpiRecord>& records,
                                      const std::vector<std::size_t>& indices) {
    std::vector<KpiRecord> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= records.size()) {
            throw DataError("record index " + std::to_string(i) + " out of range");
        }
        out.push_back(records[i]);
    }
    return out;
}

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> columns = [] {
        std::vector<std::string> names;
        names.reserve(kFields.size() + 1);
        for (const FieldInfo& f : kFields) names.emplace_back(f.name);
        names.emplace_back("label");
        return names;
    }();
    return columns;
}

void save_csv(const std::vector<KpiRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");

    const auto& columns = csv_columns();
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i > 0) out << ',';
        out << columns[i];
    }
    out << '\n';

    for (const KpiRecord& r : records) {
        check_csv_string(r.enodeb_id, "enodeb_id");
        check_csv_string(r.cell_id, "cell_id");
        for (const FieldInfo& f : kFields) {
            if (f.field != Field::HourOfDay) out << ',';
            if (f.field == Field::EnodebId) {
                out << r.enodeb_id;
            } else if (f.integral) {
                out << static_cast<std::int64_t>(numeric_value(r, f.field));
            } else {
                out << real_to_csv(numeric_value(r, f.field));
            }
        }
        out << ',' << label_name(r.label) << '\n';
    }
    if (!out) throw DataError("failed writing " + path.string());
}

std::vector<KpiRecord> load_csv(const std::filesystem::path& path,
                                const FeatureSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_line(line);

    std::vector<std::string> expected;
    for (const FeatureSpec& f : schema.features()) expected.push_back(f.name);
    expected.emplace_back("label");

    for (const std::string& name : expected) {
        if (std::find(header.begin(), header.end(), name) == header.end()) {
            throw ParseError("missing column \"" + name + "\"");
        }
    }
    if (header != expected) {
        throw ParseError("header columns do not match the schema feature order");
    }

    std::vector<KpiRecord> records;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != expected.size()) {
            throw ParseError("row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(expected.size()));
        }

        KpiRecord r;
        for (std::size_t i = 0; i + 1 < expected.size(); ++i) {
            const std::string& column = expected[i];
            const std::string& cell = cells[i];
            const FieldInfo* info = find_field(column);
            if (info == nullptr) {
                throw ParseError("column \"" + column + "\" has no record mapping");
            }
            switch (info->field) {
            case Field::HourOfDay: {
                const std::int64_t v = parse_int_cell(cell, row, column);
                if (v < 0 || v > 23) cell_error(row, column, "hour outside [0,23]");
                r.hour_of_day = static_cast<int>(v);
                break;
            }
            case Field::DayIndex: {
                const std::int64_t v = parse_int_cell(cell, row, column);
                if (v < 0) cell_error(row, column, "negative day index");
                r.day_index = static_cast<int>(v);
                break;
            }
            case Field::EnodebId:
                if (cell.empty()) cell_error(row, column, "empty eNodeB id");
                r.enodeb_id = cell;
                break;
            case Field::CellIndex: {
                const std::int64_t v = parse_int_cell(cell, row, column);
                if (v < 0) cell_error(row, column, "negative cell index");
                r.cell_id = "C" + std::to_string(v);
                break;
            }
            case Field::DropsTnl:
            case Field::DropsRadio:
            case Field::DropsCongestion:
            case Field::DropsHandover:
            case Field::DropsOther: {
                const std::int64_t v = parse_int_cell(cell, row, column);
                if (v < 0) cell_error(row, column, "negative drop count");
                const auto reason = static_cast<std::size_t>(info->field) -
                                    static_cast<std::size_t>(Field::DropsTnl);
                r.drop_reason_counts[reason] = v;
                break;
            }
            case Field::ErabNormalReleases: {
                const std::int64_t v = parse_int_cell(cell, row, column);
                if (v < 0) cell_error(row, column, "negative release count");
                r.erab_normal_releases = v;
                break;
            }
            case Field::ErabAbnormalReleases: {
                const std::int64_t v = parse_int_cell(cell, row, column);
                if (v < 0) cell_error(row, column, "negative release count");
                r.erab_abnormal_releases = v;
                break;
            }
            case Field::SignalStrengthDbm:
                r.signal_strength_dbm = parse_real_cell(cell, row, column);
                break;
            case Field::LatencyMs: {
                const double v = parse_real_cell(cell, row, column);
                if (v < 0.0) cell_error(row, column, "negative latency");
                r.latency_ms = v;
                break;
            }
            case Field::ActiveUsers: {
                const std::int64_t v = parse_int_cell(cell, row, column);
                if (v < 0) cell_error(row, column, "negative user count");
                r.active_users = v;
                break;
            }
            default:
                // Derived columns: validate the cell, the value is recomputed
                // from the record fields when encoding.
                parse_real_cell(cell, row, column);
                break;
            }
        }

        const std::string& label_cell = cells.back();
        if (label_cell == label_name(Label::Normal)) {
            r.label = Label::Normal;
        } else if (label_cell == label_name(Label::Anomaly)) {
            r.label = Label::Anomaly;
        } else {
            cell_error(row, "label", "bad label token \"" + label_cell + "\"");
        }

        if (!r.counts_consistent()) {
            cell_error(row, "erab_abnormal_releases",
                       "drop reason counts do not sum to the abnormal release count");
        }
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace sonadv::data
