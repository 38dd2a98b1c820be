#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace excursor {

inline constexpr std::string_view kVersion = "0.1.0";

/// Shortest decimal representation that round-trips through from_chars.
/// Used for every numeric field written to disk so reruns are byte-identical.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

/// Neumaier-compensated sum; keeps long-series moment estimates well below
/// the 1e-9 tolerances asserted on variances.
inline double compensated_sum(std::span<const double> xs) {
    double sum = 0.0;
    double comp = 0.0;
    for (double x : xs) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // population convention (divide by N)
};

inline MeanVar population_mean_var(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("empty sequence");
    const double n = static_cast<double>(xs.size());
    const double mean = compensated_sum(xs) / n;
    double sum = 0.0;
    double comp = 0.0;
    for (double x : xs) {
        double d = (x - mean) * (x - mean);
        double t = sum + d;
        if (std::abs(sum) >= std::abs(d)) {
            comp += (sum - t) + d;
        } else {
            comp += (d - t) + sum;
        }
        sum = t;
    }
    return {mean, (sum + comp) / n};
}

}  // namespace excursor
