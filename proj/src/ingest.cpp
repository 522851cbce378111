#include "sfcnn/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>

#include "sfcnn/dates.hpp"
#include "sfcnn/errors.hpp"

namespace sfcnn {

namespace {

std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

double parse_value(const std::string& field, const std::string& column, std::size_t line_no) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || field.empty()) {
        throw DataError("logs.csv line " + std::to_string(line_no) + ": column '" + column +
                        "' is not a number ('" + field + "')");
    }
    if (!std::isfinite(value)) {
        throw DataError("logs.csv line " + std::to_string(line_no) + ": column '" + column +
                        "' is not finite ('" + field + "')");
    }
    return value;
}

std::string series_key(Level level, const std::string& region_id, const std::string& key) {
    std::string k = level_name(level);
    k += '\x1f';
    k += region_id;
    k += '\x1f';
    k += key;
    return k;
}

Matrix slice_cols(const Matrix& m, std::size_t c0, std::size_t c1) {
    Matrix out(m.rows, c1 - c0 + 1);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* src = m.row(r).data();
        std::copy(src + c0, src + c1 + 1, out.row(r).data());
    }
    return out;
}

// End points descend from forecast_start - horizon on a fixed stride grid;
// keep those with full T-history and a full target window inside the table.
std::vector<int> admissible_end_points(const LogTable& table, const SampleOptions& opts) {
    if (opts.stride < 1) throw ConfigError("stride must be >= 1");
    if (opts.T < 1) throw ConfigError("T must be >= 1");
    if (opts.horizon < 1) throw ConfigError("horizon must be >= 1");
    if (table.empty()) throw DataError("cannot enumerate samples over an empty log table");
    std::vector<int> eps;
    for (int ep = opts.forecast_start - opts.horizon; ep - opts.T + 1 >= table.first_day;
         ep -= opts.stride) {
        if (ep + opts.horizon <= table.last_day) eps.push_back(ep);
    }
    return eps;
}

}  // namespace

const char* level_name(Level level) {
    switch (level) {
        case Level::item: return "item";
        case Level::brand: return "brand";
        case Level::category: return "category";
        case Level::supplier: return "supplier";
        case Level::region: return "region";
    }
    return "?";
}

std::vector<std::string> LogTable::region_ids() const {
    return regions_;
}

std::vector<std::string> LogTable::item_ids() const {
    std::vector<std::string> ids;
    ids.reserve(attributes.size());
    for (const auto& [id, attr] : attributes) ids.push_back(id);
    return ids;
}

bool LogTable::key_known(Level level, const std::string& key) const {
    switch (level) {
        case Level::item: return attributes.count(key) > 0;
        case Level::brand: return brands_.count(key) > 0;
        case Level::category: return categories_.count(key) > 0;
        case Level::supplier: return suppliers_.count(key) > 0;
        case Level::region:
            return std::binary_search(regions_.begin(), regions_.end(), key);
    }
    return false;
}

void LogTable::finalize() {
    const std::size_t d = num_indicators();
    if (d == 0) throw DataError("log table has no indicator columns");

    brands_.clear();
    categories_.clear();
    suppliers_.clear();
    for (const auto& [id, attr] : attributes) {
        brands_[attr.brand_id].push_back(id);
        categories_[attr.category_id].push_back(id);
        suppliers_[attr.supplier_id].push_back(id);
    }

    series_.clear();
    regions_.clear();
    if (records.empty()) {
        first_day = 0;
        last_day = -1;
        zero_series_ = Matrix();
        finalized_ = true;
        return;
    }

    std::sort(records.begin(), records.end(), [](const LogRecord& a, const LogRecord& b) {
        return std::tie(a.region_id, a.item_id, a.day) < std::tie(b.region_id, b.item_id, b.day);
    });

    first_day = records.front().day;
    last_day = records.front().day;
    std::set<std::string> regions;
    for (const auto& rec : records) {
        first_day = std::min(first_day, rec.day);
        last_day = std::max(last_day, rec.day);
        regions.insert(rec.region_id);
        if (rec.indicators.size() != d) {
            throw DataError("record for item " + rec.item_id + " has " +
                            std::to_string(rec.indicators.size()) + " indicators, expected " +
                            std::to_string(d));
        }
        const auto attr = attributes.find(rec.item_id);
        if (attr == attributes.end()) {
            throw DataError("item " + rec.item_id + " appears in logs but not in items.csv");
        }
    }
    regions_.assign(regions.begin(), regions.end());

    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& a = records[i - 1];
        const auto& b = records[i];
        if (a.region_id == b.region_id && a.item_id == b.item_id && a.day == b.day) {
            throw DataError("duplicate record for (" + format_date(b.day) + ", " + b.item_id +
                            ", " + b.region_id + ")");
        }
    }

    const std::size_t span = static_cast<std::size_t>(span_days());
    zero_series_ = Matrix(d, span, 0.0);

    auto add_into = [&](Level level, const std::string& region, const std::string& key,
                        const LogRecord& rec) {
        auto [it, inserted] = series_.try_emplace(series_key(level, region, key), d, span, 0.0);
        Matrix& m = it->second;
        const std::size_t col = static_cast<std::size_t>(rec.day - first_day);
        for (std::size_t r = 0; r < d; ++r) {
            m(r, col) += rec.indicators[r];
        }
    };

    // records are sorted, so every sum below accumulates in a fixed order
    for (const auto& rec : records) {
        const ItemAttributes& attr = attributes.at(rec.item_id);
        add_into(Level::item, rec.region_id, rec.item_id, rec);
        add_into(Level::brand, rec.region_id, attr.brand_id, rec);
        add_into(Level::category, rec.region_id, attr.category_id, rec);
        add_into(Level::supplier, rec.region_id, attr.supplier_id, rec);
        add_into(Level::region, rec.region_id, rec.region_id, rec);
    }
    finalized_ = true;
}

const Matrix& LogTable::series(Level level, const std::string& region_id,
                               const std::string& key) const {
    if (!finalized_) throw DataError("log table not finalized");
    if (empty()) throw DataError("log table has no records");
    if (!std::binary_search(regions_.begin(), regions_.end(), region_id)) {
        throw DataError("unknown region '" + region_id + "'");
    }
    if (!key_known(level, key)) {
        throw DataError(std::string("unknown ") + level_name(level) + " key '" + key + "'");
    }
    const auto it = series_.find(series_key(level, region_id, key));
    if (it == series_.end()) return zero_series_;   // valid key, zero activity here
    return it->second;
}

LogTable parse_logs(std::istream& log_stream, std::istream& attr_stream,
                    const std::vector<std::string>& indicator_names) {
    LogTable table;
    std::string line;

    // items.csv
    if (!std::getline(attr_stream, line)) throw DataError("items.csv: missing header");
    {
        const auto header = split_csv_line(line);
        const std::vector<std::string> expected = {"item_id", "brand_id", "category_id",
                                                   "supplier_id"};
        if (header != std::vector<std::string>(expected.begin(), expected.end())) {
            throw DataError("items.csv: header must be item_id,brand_id,category_id,supplier_id");
        }
    }
    std::size_t line_no = 1;
    while (std::getline(attr_stream, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw DataError("items.csv line " + std::to_string(line_no) + ": expected 4 fields");
        }
        for (const auto& f : fields) {
            if (f.empty()) {
                throw DataError("items.csv line " + std::to_string(line_no) + ": empty field");
            }
        }
        ItemAttributes attr{fields[0], fields[1], fields[2], fields[3]};
        if (!table.attributes.emplace(attr.item_id, attr).second) {
            throw DataError("items.csv line " + std::to_string(line_no) + ": item '" +
                            attr.item_id + "' listed more than once");
        }
    }

    // logs.csv
    if (!std::getline(log_stream, line)) throw DataError("logs.csv: missing header");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "date" || header[1] != "item_id" ||
        header[2] != "region_id") {
        throw DataError("logs.csv: header must start with date,item_id,region_id and have at "
                        "least one indicator column");
    }
    std::vector<std::string> names(header.begin() + 3, header.end());
    if (!indicator_names.empty() && names != indicator_names) {
        std::string declared;
        for (const auto& n : indicator_names) declared += (declared.empty() ? "" : ",") + n;
        throw DataError("logs.csv: indicator columns do not match the declared list (" +
                        declared + ")");
    }
    if (names[0] != "sales") {
        throw DataError("logs.csv: first indicator column must be 'sales', got '" + names[0] +
                        "'");
    }
    table.indicator_names = names;
    const std::size_t d = names.size();

    line_no = 1;
    while (std::getline(log_stream, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3 + d) {
            throw DataError("logs.csv line " + std::to_string(line_no) + ": expected " +
                            std::to_string(3 + d) + " fields, got " +
                            std::to_string(fields.size()));
        }
        LogRecord rec;
        try {
            rec.day = parse_date(fields[0]);
        } catch (const DataError& e) {
            throw DataError("logs.csv line " + std::to_string(line_no) + ": " + e.what());
        }
        rec.item_id = fields[1];
        rec.region_id = fields[2];
        if (rec.item_id.empty() || rec.region_id.empty()) {
            throw DataError("logs.csv line " + std::to_string(line_no) + ": empty identifier");
        }
        if (table.attributes.find(rec.item_id) == table.attributes.end()) {
            throw DataError("logs.csv line " + std::to_string(line_no) + ": item '" +
                            rec.item_id + "' has no attributes row");
        }
        rec.indicators.reserve(d);
        for (std::size_t i = 0; i < d; ++i) {
            rec.indicators.push_back(parse_value(fields[3 + i], names[i], line_no));
        }
        table.records.push_back(std::move(rec));
    }

    table.finalize();
    return table;
}

IndicatorMatrix aggregate(const LogTable& table, Level level, const std::string& region_id,
                          const std::string& key, int t0, int t1) {
    if (table.empty()) throw DataError("aggregate: log table has no records");
    if (t0 > t1) throw DataError("aggregate: empty window");
    if (t0 < table.first_day || t1 > table.last_day) {
        throw DataError("aggregate: window [" + format_date(t0) + ", " + format_date(t1) +
                        "] extends outside table date range [" + format_date(table.first_day) +
                        ", " + format_date(table.last_day) + "]");
    }
    std::string resolved = key;
    if (level == Level::region) {
        if (resolved.empty()) resolved = region_id;
        if (resolved != region_id) {
            throw DataError("aggregate: region-level key must match region_id");
        }
    }
    const Matrix& full = table.series(level, region_id, resolved);
    IndicatorMatrix out;
    out.values = slice_cols(full, static_cast<std::size_t>(t0 - table.first_day),
                            static_cast<std::size_t>(t1 - table.first_day));
    out.level = level;
    out.key = resolved;
    return out;
}

std::vector<std::string> DataFrame::slot_order() const {
    std::vector<std::string> order;
    order.reserve(slots.size());
    for (const auto& s : slots) order.emplace_back(level_name(s.level));
    return order;
}

DataFrame build_frame(const LogTable& table, const std::string& item_id,
                      const std::string& region_id, int end_point, int T,
                      bool include_supplier) {
    if (T < 1) throw ConfigError("build_frame: T must be >= 1");
    const auto attr_it = table.attributes.find(item_id);
    if (attr_it == table.attributes.end()) {
        throw DataError("build_frame: unknown item '" + item_id + "'");
    }
    const int t0 = end_point - T + 1;
    if (table.empty() || t0 < table.first_day || end_point > table.last_day) {
        throw DataError("build_frame: insufficient history for end point " +
                        format_date(end_point) + " with T=" + std::to_string(T));
    }
    const ItemAttributes& attr = attr_it->second;
    DataFrame frame;
    frame.item_id = item_id;
    frame.region_id = region_id;
    frame.end_point = end_point;
    frame.slots.push_back(aggregate(table, Level::item, region_id, item_id, t0, end_point));
    frame.slots.push_back(aggregate(table, Level::brand, region_id, attr.brand_id, t0, end_point));
    frame.slots.push_back(
        aggregate(table, Level::category, region_id, attr.category_id, t0, end_point));
    if (include_supplier) {
        frame.slots.push_back(
            aggregate(table, Level::supplier, region_id, attr.supplier_id, t0, end_point));
    }
    frame.slots.push_back(aggregate(table, Level::region, region_id, region_id, t0, end_point));
    return frame;
}

namespace {

void check_frame_shape(const DataFrame& frame, std::size_t num_slots, std::size_t d) {
    if (frame.num_slots() != num_slots) {
        throw DataError("frame has " + std::to_string(frame.num_slots()) + " slots, expected " +
                        std::to_string(num_slots));
    }
    for (const auto& slot : frame.slots) {
        if (slot.values.rows != d) {
            throw DataError("frame slot has " + std::to_string(slot.values.rows) +
                            " indicator rows, expected " + std::to_string(d));
        }
    }
}

}  // namespace

NormStats fit_norm(const std::vector<DataFrame>& frames) {
    if (frames.empty()) throw DataError("fit_norm: empty frame collection");
    const std::size_t num_slots = frames.front().num_slots();
    if (num_slots == 0) throw DataError("fit_norm: frames have no slots");
    const std::size_t d = frames.front().slots.front().values.rows;

    NormStats stats;
    stats.num_slots = num_slots;
    stats.d = d;
    stats.mean.assign(num_slots * d, 0.0);
    stats.stddev.assign(num_slots * d, 0.0);

    std::vector<double> sum(num_slots * d, 0.0);
    std::vector<std::size_t> count(num_slots * d, 0);
    for (const auto& frame : frames) {
        check_frame_shape(frame, num_slots, d);
        for (std::size_t s = 0; s < num_slots; ++s) {
            for (std::size_t r = 0; r < d; ++r) {
                for (double v : frame.slots[s].values.row(r)) {
                    sum[s * d + r] += v;
                }
                count[s * d + r] += frame.slots[s].values.cols;
            }
        }
    }
    for (std::size_t i = 0; i < sum.size(); ++i) {
        stats.mean[i] = sum[i] / static_cast<double>(count[i]);
    }
    std::vector<double> sq(num_slots * d, 0.0);
    for (const auto& frame : frames) {
        for (std::size_t s = 0; s < num_slots; ++s) {
            for (std::size_t r = 0; r < d; ++r) {
                const double mu = stats.mean[s * d + r];
                for (double v : frame.slots[s].values.row(r)) {
                    sq[s * d + r] += (v - mu) * (v - mu);
                }
            }
        }
    }
    for (std::size_t i = 0; i < sq.size(); ++i) {
        stats.stddev[i] = std::sqrt(sq[i] / static_cast<double>(count[i]));
    }
    return stats;
}

DataFrame apply_norm(const DataFrame& frame, const NormStats& stats) {
    check_frame_shape(frame, stats.num_slots, stats.d);
    DataFrame out = frame;
    for (std::size_t s = 0; s < stats.num_slots; ++s) {
        Matrix& m = out.slots[s].values;
        for (std::size_t r = 0; r < stats.d; ++r) {
            const double mu = stats.mean_at(s, r);
            const double sd = stats.std_at(s, r);
            auto row = m.row(r);
            if (sd < kStdFloor) {
                std::fill(row.begin(), row.end(), 0.0);
            } else {
                for (double& v : row) v = (v - mu) / sd;
            }
        }
    }
    return out;
}

double sample_weight(int end_point, int horizon, int forecast_start, double beta) {
    if (horizon < 1) throw ConfigError("sample_weight: horizon must be >= 1");
    if (beta < 0.0) throw ConfigError("sample_weight: beta must be >= 0");
    if (end_point > forecast_start - horizon) {
        throw DataError("sample_weight: end point " + std::to_string(end_point) +
                        " overlaps the target interval starting at " +
                        std::to_string(forecast_start));
    }
    return std::exp(beta * static_cast<double>(end_point + horizon - forecast_start));
}

std::vector<DataFrame> training_frames(const LogTable& table, const SampleOptions& opts) {
    const auto eps = admissible_end_points(table, opts);
    std::vector<DataFrame> frames;
    for (const auto& region : table.region_ids()) {
        for (const auto& item : table.item_ids()) {
            for (int ep : eps) {
                frames.push_back(build_frame(table, item, region, ep, opts.T,
                                             opts.include_supplier));
            }
        }
    }
    if (frames.empty()) throw DataError("no admissible end point for any item");
    return frames;
}

NormStats fit_norm_streaming(const LogTable& table, const SampleOptions& opts) {
    const auto eps = admissible_end_points(table, opts);
    if (eps.empty()) throw DataError("no admissible end point for any item");

    const auto regions = table.region_ids();
    const auto items = table.item_ids();

    NormStats stats;
    std::vector<double> sum, sq;
    std::vector<std::size_t> count;
    // pass 1: means; pass 2: centered squares, in the same accumulation order
    // as fit_norm so the two paths agree bit for bit
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& region : regions) {
            for (const auto& item : items) {
                for (int ep : eps) {
                    DataFrame frame =
                        build_frame(table, item, region, ep, opts.T, opts.include_supplier);
                    if (sum.empty()) {
                        stats.num_slots = frame.num_slots();
                        stats.d = frame.slots.front().values.rows;
                        sum.assign(stats.num_slots * stats.d, 0.0);
                        sq.assign(stats.num_slots * stats.d, 0.0);
                        count.assign(stats.num_slots * stats.d, 0);
                    }
                    check_frame_shape(frame, stats.num_slots, stats.d);
                    for (std::size_t s = 0; s < stats.num_slots; ++s) {
                        for (std::size_t r = 0; r < stats.d; ++r) {
                            const std::size_t idx = s * stats.d + r;
                            if (pass == 0) {
                                for (double v : frame.slots[s].values.row(r)) sum[idx] += v;
                                count[idx] += frame.slots[s].values.cols;
                            } else {
                                const double mu = stats.mean[idx];
                                for (double v : frame.slots[s].values.row(r)) {
                                    sq[idx] += (v - mu) * (v - mu);
                                }
                            }
                        }
                    }
                }
            }
        }
        if (pass == 0) {
            stats.mean.resize(sum.size());
            for (std::size_t i = 0; i < sum.size(); ++i) {
                stats.mean[i] = sum[i] / static_cast<double>(count[i]);
            }
        }
    }
    stats.stddev.resize(sq.size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        stats.stddev[i] = std::sqrt(sq[i] / static_cast<double>(count[i]));
    }
    return stats;
}

std::map<std::string, std::vector<Sample>> make_samples(const LogTable& table,
                                                        const SampleOptions& opts,
                                                        const NormStats& stats) {
    const auto eps = admissible_end_points(table, opts);
    if (eps.empty()) throw DataError("no admissible end point for any item");

    std::map<std::string, std::vector<Sample>> by_region;
    for (const auto& region : table.region_ids()) {
        auto& out = by_region[region];
        for (const auto& item : table.item_ids()) {
            const Matrix& item_series = table.series(Level::item, region, item);
            for (int ep : eps) {
                Sample sample;
                sample.frame = apply_norm(
                    build_frame(table, item, region, ep, opts.T, opts.include_supplier), stats);
                sample.end_point = ep;
                sample.item_id = item;
                sample.region_id = region;
                sample.weight = sample_weight(ep, opts.horizon, opts.forecast_start, opts.beta);
                double target = 0.0;
                for (int day = ep + 1; day <= ep + opts.horizon; ++day) {
                    target += item_series(0, static_cast<std::size_t>(day - table.first_day));
                }
                sample.target = target;
                out.push_back(std::move(sample));
            }
        }
    }
    return by_region;
}

}  // namespace sfcnn
