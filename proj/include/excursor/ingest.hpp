#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "excursor/common.hpp"
#include "excursor/parallel.hpp"
#include "excursor/rng.hpp"

namespace excursor {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Aligned daily price grid: one ISO-8601 date column plus one strictly
/// positive price column per market, all of equal length.
struct PriceTable {
    std::vector<std::string> dates;               // strictly increasing
    std::vector<std::string> labels;              // column order preserved
    std::vector<std::vector<double>> columns;     // columns[c].size() == dates.size()

    std::size_t n_rows() const { return dates.size(); }
    std::size_t n_cols() const { return labels.size(); }

    std::size_t column_index(std::string_view label) const {
        for (std::size_t c = 0; c < labels.size(); ++c) {
            if (labels[c] == label) return c;
        }
        throw std::invalid_argument("no such market column: '" + std::string(label) + "'");
    }
};

struct ReturnSeries {
    std::vector<double> values;            // values[k] = ln(P[k+1]/P[k])
    std::string label;
    std::vector<std::string> origin_dates; // end date of each return interval
};

/// Zero-mean, unit-population-variance series. Sole producers are
/// standardize() and the synth generators.
struct StandardizedSeries {
    std::vector<double> values;
    double scale = 1.0;                // the sigma0 that was divided out
    std::string label;
    std::optional<int> window_id;      // set for partition segments

    std::size_t size() const { return values.size(); }
};

struct SegmentSet {
    std::vector<StandardizedSeries> segments;  // contiguous, equal length
    std::size_t discarded_tail = 0;
};

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

struct CsvOptions {
    char delimiter = ',';
    std::string date_column;  // empty: first column is the date column
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, delim)) {
        // trim ASCII whitespace
        std::size_t b = field.find_first_not_of(" \t\r");
        std::size_t e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

inline bool valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    const int y = std::stoi(s.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
    using namespace std::chrono;
    return year_month_day{year{y}, month{m}, day{d}}.ok();
}

inline std::string iso_date_after(const std::string& start, long offset) {
    using namespace std::chrono;
    const int y = std::stoi(start.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(start.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(start.substr(8, 2)));
    sys_days sd{year_month_day{year{y}, month{m}, day{d}}};
    sd += days{offset};
    const year_month_day out{sd};
    char buf[11];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(out.year()),
                  unsigned(out.month()), unsigned(out.day()));
    return std::string(buf);
}

}  // namespace detail

inline PriceTable load_price_table(const std::filesystem::path& path,
                                   const CsvOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path.string());
    const auto header = detail::split_line(line, opts.delimiter);
    if (header.size() < 2) {
        throw std::runtime_error(path.string() + ": need a date column and at least one market column");
    }

    std::size_t date_col = 0;
    if (!opts.date_column.empty()) {
        auto it = std::find(header.begin(), header.end(), opts.date_column);
        if (it == header.end()) {
            throw std::runtime_error(path.string() + ": no date column named '" + opts.date_column + "'");
        }
        date_col = static_cast<std::size_t>(it - header.begin());
    }

    PriceTable table;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != date_col) table.labels.push_back(header[c]);
    }
    table.columns.assign(table.labels.size(), {});

    std::size_t row_no = 1;
    std::vector<std::size_t> order;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        const auto fields = detail::split_line(line, opts.delimiter);
        if (fields.size() != header.size()) {
            throw std::runtime_error(path.string() + ": row " + std::to_string(row_no) +
                                     " has " + std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(header.size()));
        }
        const std::string& date = fields[date_col];
        if (!detail::valid_iso_date(date)) {
            throw std::runtime_error(path.string() + ": row " + std::to_string(row_no) +
                                     ": unparseable date '" + date + "' (expected ISO 8601 YYYY-MM-DD)");
        }
        table.dates.push_back(date);
        std::size_t c = 0;
        for (std::size_t f = 0; f < fields.size(); ++f) {
            if (f == date_col) continue;
            double price;
            try {
                price = parse_double(fields[f]);
            } catch (const std::exception&) {
                throw std::runtime_error(path.string() + ": row " + std::to_string(row_no) +
                                         ": non-numeric price '" + fields[f] + "' for " + table.labels[c]);
            }
            if (!(price > 0.0)) {
                throw std::runtime_error("non-positive price for " + table.labels[c] +
                                         " on " + date);
            }
            table.columns[c].push_back(price);
            ++c;
        }
    }
    if (table.dates.empty()) throw std::runtime_error(path.string() + ": no data rows");

    // Sort rows by date, then require strict increase.
    order.resize(table.dates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return table.dates[a] < table.dates[b]; });
    PriceTable sorted;
    sorted.labels = table.labels;
    sorted.columns.assign(table.labels.size(), {});
    for (std::size_t r : order) {
        sorted.dates.push_back(table.dates[r]);
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            sorted.columns[c].push_back(table.columns[c][r]);
        }
    }
    for (std::size_t r = 1; r < sorted.dates.size(); ++r) {
        if (sorted.dates[r] == sorted.dates[r - 1]) {
            throw std::runtime_error(path.string() + ": duplicate date " + sorted.dates[r]);
        }
    }
    return sorted;
}

inline void write_price_table(const PriceTable& table, std::ostream& out,
                              char delimiter = ',') {
    out << "Date";
    for (const auto& label : table.labels) out << delimiter << label;
    out << "\n";
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        out << table.dates[r];
        for (std::size_t c = 0; c < table.n_cols(); ++c) {
            out << delimiter << format_double(table.columns[c][r]);
        }
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

enum class AlignPolicy { kIntersect, kForwardFill };

inline PriceTable align(const std::vector<PriceTable>& tables,
                        AlignPolicy policy = AlignPolicy::kIntersect) {
    if (tables.empty()) throw std::invalid_argument("align: no tables");
    if (tables.size() == 1 && policy == AlignPolicy::kIntersect) return tables.front();

    std::vector<std::string> grid;
    if (policy == AlignPolicy::kIntersect) {
        grid = tables.front().dates;
        for (std::size_t t = 1; t < tables.size(); ++t) {
            std::vector<std::string> next;
            std::set_intersection(grid.begin(), grid.end(),
                                  tables[t].dates.begin(), tables[t].dates.end(),
                                  std::back_inserter(next));
            grid = std::move(next);
        }
        if (grid.empty()) throw std::runtime_error("align: empty date intersection");
    } else {
        for (const auto& t : tables) {
            std::vector<std::string> next;
            std::set_union(grid.begin(), grid.end(), t.dates.begin(), t.dates.end(),
                           std::back_inserter(next));
            grid = std::move(next);
        }
    }

    PriceTable out;
    out.dates = grid;
    for (const auto& t : tables) {
        for (std::size_t c = 0; c < t.n_cols(); ++c) {
            out.labels.push_back(t.labels[c]);
            std::vector<double> col;
            col.reserve(grid.size());
            std::size_t src = 0;
            double last = 0.0;
            bool seen = false;
            for (const auto& date : grid) {
                while (src < t.dates.size() && t.dates[src] < date) {
                    last = t.columns[c][src];
                    seen = true;
                    ++src;
                }
                if (src < t.dates.size() && t.dates[src] == date) {
                    last = t.columns[c][src];
                    seen = true;
                    ++src;
                    col.push_back(last);
                } else if (policy == AlignPolicy::kForwardFill) {
                    if (!seen) {
                        throw std::runtime_error("align: forward-fill needs an observation for " +
                                                 t.labels[c] + " at or before " + date);
                    }
                    col.push_back(last);
                } else {
                    throw std::logic_error("align: intersect grid contains a missing date");
                }
            }
            out.columns.push_back(std::move(col));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

inline ReturnSeries log_returns(std::span<const double> prices, std::string label = {},
                                std::span<const std::string> dates = {}) {
    if (prices.size() < 2) throw std::invalid_argument("log_returns: need at least 2 prices");
    ReturnSeries out;
    out.label = std::move(label);
    out.values.reserve(prices.size() - 1);
    for (std::size_t k = 0; k + 1 < prices.size(); ++k) {
        if (!(prices[k] > 0.0) || !(prices[k + 1] > 0.0)) {
            throw std::invalid_argument("log_returns: non-positive price in " + out.label);
        }
        out.values.push_back(std::log(prices[k + 1] / prices[k]));
    }
    if (!dates.empty()) {
        if (dates.size() != prices.size()) {
            throw std::invalid_argument("log_returns: dates/prices length mismatch");
        }
        out.origin_dates.assign(dates.begin() + 1, dates.end());
    }
    return out;
}

inline ReturnSeries log_returns(const PriceTable& table, std::string_view label) {
    const std::size_t c = table.column_index(label);
    return log_returns(table.columns[c], std::string(label), table.dates);
}

inline StandardizedSeries standardize(std::span<const double> xs, std::string label = {}) {
    if (xs.size() < 2) throw std::invalid_argument("standardize: need at least 2 values");
    const auto mv = population_mean_var(xs);
    if (!(mv.var > 0.0)) throw std::invalid_argument("standardize: degenerate series (zero variance)");
    const double sigma = std::sqrt(mv.var);
    StandardizedSeries out;
    out.label = std::move(label);
    out.scale = sigma;
    out.values.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out.values[i] = (xs[i] - mv.mean) / sigma;
    return out;
}

inline StandardizedSeries standardize(const ReturnSeries& r) {
    return standardize(r.values, r.label);
}

inline SegmentSet segment(const StandardizedSeries& series, std::size_t window) {
    const std::size_t n = series.size();
    if (window < 10) throw std::invalid_argument("segment: window must be >= 10");
    if (window > n) throw std::invalid_argument("segment: window exceeds series length");
    SegmentSet out;
    const std::size_t count = n / window;
    out.discarded_tail = n - count * window;
    out.segments.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::span<const double> slice(series.values.data() + i * window, window);
        auto seg = standardize(slice, series.label);
        seg.window_id = static_cast<int>(i);
        out.segments.push_back(std::move(seg));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

enum class SynthKind { kWhite, kSmoothed, kFactorModel };

struct SynthSpec {
    SynthKind kind = SynthKind::kWhite;
    std::size_t n = 0;          // series length, >= 100
    std::size_t count = 1;      // number of series
    std::uint64_t seed = 1;
    double kernel_width = 5.0;  // smoothed kind, >= 1
    int groups = 1;             // factor-model kind
    double loading = 0.0;       // factor-model kind, in [0, 1)
};

namespace detail {

inline std::vector<double> gaussian_kernel(double width) {
    const long half = std::lround(std::ceil(4.0 * width));
    std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
    double sum = 0.0;
    for (long j = -half; j <= half; ++j) {
        const double w = std::exp(-static_cast<double>(j * j) / (2.0 * width * width));
        k[static_cast<std::size_t>(j + half)] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

inline std::vector<double> normal_draws(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (double& x : out) x = rng.normal();
    return out;
}

}  // namespace detail

/// Seeded synthetic datasets. Per-series streams are derived from
/// (seed, purpose, index), so generation order and thread schedule do not
/// change the output.
inline std::vector<StandardizedSeries> synth(const SynthSpec& spec) {
    if (spec.n < 100) throw std::invalid_argument("synth: n must be >= 100");
    if (spec.count == 0) throw std::invalid_argument("synth: count must be positive");
    if (spec.kind == SynthKind::kSmoothed && spec.kernel_width < 1.0) {
        throw std::invalid_argument("synth: kernel width must be >= 1");
    }
    if (spec.kind == SynthKind::kFactorModel) {
        if (spec.groups < 1 || static_cast<std::size_t>(spec.groups) > spec.count) {
            throw std::invalid_argument("synth: groups must be in [1, count]");
        }
        if (spec.loading < 0.0 || spec.loading >= 1.0) {
            throw std::invalid_argument("synth: loading must be in [0, 1)");
        }
    }

    std::vector<std::vector<double>> factors;
    if (spec.kind == SynthKind::kFactorModel) {
        factors.resize(static_cast<std::size_t>(spec.groups));
        for (int j = 0; j < spec.groups; ++j) {
            factors[static_cast<std::size_t>(j)] =
                detail::normal_draws(derive(derive(spec.seed, "factor"), static_cast<std::uint64_t>(j)), spec.n);
        }
    }

    std::vector<StandardizedSeries> out(spec.count);
    parallel_for(spec.count, [&](std::size_t i) {
        char label[8];
        std::snprintf(label, sizeof(label), "S%03zu", i);
        std::vector<double> raw;
        switch (spec.kind) {
            case SynthKind::kWhite:
                raw = detail::normal_draws(derive(derive(spec.seed, "white"), i), spec.n);
                break;
            case SynthKind::kSmoothed: {
                const auto kernel = detail::gaussian_kernel(spec.kernel_width);
                const std::size_t half = kernel.size() / 2;
                const auto white =
                    detail::normal_draws(derive(derive(spec.seed, "smooth"), i), spec.n + 2 * half);
                raw.resize(spec.n);
                for (std::size_t t = 0; t < spec.n; ++t) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < kernel.size(); ++j) acc += kernel[j] * white[t + j];
                    raw[t] = acc;
                }
                break;
            }
            case SynthKind::kFactorModel: {
                const std::size_t g = i * static_cast<std::size_t>(spec.groups) / spec.count;
                const auto eps = detail::normal_draws(derive(derive(spec.seed, "eps"), i), spec.n);
                const double a = std::sqrt(spec.loading);
                const double b = std::sqrt(1.0 - spec.loading);
                raw.resize(spec.n);
                for (std::size_t t = 0; t < spec.n; ++t) raw[t] = a * factors[g][t] + b * eps[t];
                break;
            }
        }
        out[i] = standardize(raw, label);
    });
    return out;
}

/// Packs standardized series into the CSV price schema: P(0) = 100 and
/// P(k) = P(k-1) * exp(return_scale * x(k)), with consecutive calendar dates.
/// Re-deriving log-returns and standardizing recovers the series (the affine
/// scale drops out).
inline PriceTable synthetic_price_table(const std::vector<StandardizedSeries>& series,
                                        const std::string& start_date = "1995-01-02",
                                        double return_scale = 0.01) {
    if (series.empty()) throw std::invalid_argument("synthetic_price_table: no series");
    const std::size_t n = series.front().size();
    for (const auto& s : series) {
        if (s.size() != n) throw std::invalid_argument("synthetic_price_table: unequal lengths");
    }
    PriceTable table;
    table.dates.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        table.dates.push_back(detail::iso_date_after(start_date, static_cast<long>(r)));
    }
    for (const auto& s : series) {
        table.labels.push_back(s.label);
        std::vector<double> col(n);
        col[0] = 100.0;
        for (std::size_t k = 1; k < n; ++k) {
            col[k] = col[k - 1] * std::exp(return_scale * s.values[k]);
        }
        table.columns.push_back(std::move(col));
    }
    return table;
}

}  // namespace excursor
