#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sfcnn/matrix.hpp"

namespace sfcnn {

// One parsed log row: what a (date, item, region) triple reported that day.
// indicators[0] is always the sales figure used for forecast targets.
struct LogRecord {
    int day = 0;
    std::string item_id;
    std::string region_id;
    std::vector<double> indicators;
};

struct ItemAttributes {
    std::string item_id;
    std::string brand_id;
    std::string category_id;
    std::string supplier_id;
};

enum class Level { item, brand, category, supplier, region };

const char* level_name(Level level);

/// d x T slice of one aggregation level's daily vectors.
struct IndicatorMatrix {
    Matrix values;
    Level level = Level::item;
    std::string key;
};

/// Parsed, validated, immutable log universe. Missing (day, item, region)
/// combinations are semantically all-zero vectors. finalize() builds dense
/// per-level daily series; call it once, then treat the table as const.
struct LogTable {
    std::vector<LogRecord> records;   // sorted by (region, item, day)
    std::map<std::string, ItemAttributes> attributes;
    std::vector<std::string> indicator_names;
    int first_day = 0;
    int last_day = -1;                // last < first means no records

    std::size_t num_indicators() const { return indicator_names.size(); }
    bool empty() const { return records.empty(); }
    int span_days() const { return last_day - first_day + 1; }

    std::vector<std::string> region_ids() const;   // sorted, from records
    std::vector<std::string> item_ids() const;     // sorted, from attributes

    void finalize();

    /// Full-span daily series (d x span_days) for one level key in a region;
    /// all-zero where nothing was logged. Throws on unknown keys.
    const Matrix& series(Level level, const std::string& region_id,
                         const std::string& key) const;

private:
    std::map<std::string, Matrix> series_;   // "<level>\x1f<region>\x1f<key>"
    std::vector<std::string> regions_;
    std::map<std::string, std::vector<std::string>> brands_, categories_, suppliers_;
    Matrix zero_series_;
    bool finalized_ = false;

    bool key_known(Level level, const std::string& key) const;
};

/// Parses logs.csv and items.csv streams. When `indicator_names` is non-empty
/// the log header's indicator columns must match it exactly; otherwise the
/// names are taken from the header. Throws DataError with line numbers on
/// malformed rows, non-finite values, duplicates, or missing attributes.
LogTable parse_logs(std::istream& log_stream, std::istream& attr_stream,
                    const std::vector<std::string>& indicator_names = {});

/// Element-wise sum of item day-vectors matching `key` at `level` inside
/// region_id, sliced to [t0, t1]. For Level::region the key is the region
/// itself (pass the region id or an empty string).
IndicatorMatrix aggregate(const LogTable& table, Level level, const std::string& region_id,
                          const std::string& key, int t0, int t1);

/// The network input for one (item, region, end_point): a fixed-order stack
/// of item, brand, category, (optional supplier,) region matrices.
struct DataFrame {
    std::vector<IndicatorMatrix> slots;
    std::string item_id;
    std::string region_id;
    int end_point = 0;

    std::size_t num_slots() const { return slots.size(); }
    std::vector<std::string> slot_order() const;
};

DataFrame build_frame(const LogTable& table, const std::string& item_id,
                      const std::string& region_id, int end_point, int T,
                      bool include_supplier = false);

/// Per (slot, indicator row) z-score statistics pooled over a frame set.
struct NormStats {
    std::size_t num_slots = 0;
    std::size_t d = 0;
    std::vector<double> mean;     // num_slots * d, indexed slot * d + row
    std::vector<double> stddev;   // population (1/N) standard deviation

    double mean_at(std::size_t slot, std::size_t row) const { return mean[slot * d + row]; }
    double std_at(std::size_t slot, std::size_t row) const { return stddev[slot * d + row]; }
};

/// Rows whose std is below this floor are mapped to all-zero output by
/// apply_norm instead of dividing by a degenerate scale.
inline constexpr double kStdFloor = 1e-8;

NormStats fit_norm(const std::vector<DataFrame>& frames);

DataFrame apply_norm(const DataFrame& frame, const NormStats& stats);

/// Exponential decay e^(beta * (end_point + horizon - forecast_start)).
/// Requires end_point <= forecast_start - horizon and beta >= 0.
double sample_weight(int end_point, int horizon, int forecast_start, double beta);

/// One training/evaluation unit: normalized frame, raw-sales target summed
/// over (end_point, end_point + horizon], and its decay weight.
struct Sample {
    DataFrame frame;
    double target = 0.0;
    double weight = 1.0;
    int end_point = 0;
    std::string item_id;
    std::string region_id;
};

struct SampleOptions {
    int T = 84;
    int horizon = 7;
    int stride = 1;
    int forecast_start = 0;   // first day of the target interval (sp)
    double beta = 0.02;
    bool include_supplier = false;
};

/// Raw (unnormalized) frames at every admissible end point, for fitting
/// normalization statistics.
std::vector<DataFrame> training_frames(const LogTable& table, const SampleOptions& opts);

/// Streaming equivalent of fit_norm(training_frames(...)) that never holds
/// more than one frame at a time.
NormStats fit_norm_streaming(const LogTable& table, const SampleOptions& opts);

/// One Sample per (item, region, admissible end_point), end points descending
/// from forecast_start - horizon by stride, grouped by region. Deterministic:
/// regions and items sorted, end points descending.
std::map<std::string, std::vector<Sample>> make_samples(const LogTable& table,
                                                        const SampleOptions& opts,
                                                        const NormStats& stats);

}  // namespace sfcnn
