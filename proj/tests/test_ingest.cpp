#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "excursor/ingest.hpp"

using namespace excursor;
namespace fs = std::filesystem;

namespace {

fs::path write_temp_csv(const std::string& name, const std::string& content) {
    const fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

PriceTable make_table(std::vector<std::string> dates, std::vector<std::string> labels,
                      std::vector<std::vector<double>> columns) {
    PriceTable t;
    t.dates = std::move(dates);
    t.labels = std::move(labels);
    t.columns = std::move(columns);
    return t;
}

}  // namespace

TEST_CASE("load_price_table reads back a small csv", "[ingest]") {
    const auto path = write_temp_csv("excursor_small.csv",
                                     "Date,AA,BB\n"
                                     "2001-01-02,10.5,20\n"
                                     "2001-01-03,10.6,21\n"
                                     "2001-01-04,10.7,19\n");
    const auto table = load_price_table(path);
    REQUIRE(table.n_rows() == 3);
    REQUIRE(table.n_cols() == 2);
    REQUIRE(table.labels == std::vector<std::string>{"AA", "BB"});
    REQUIRE(table.columns[0][1] == 10.6);
    REQUIRE(table.columns[1][2] == 19.0);
}

TEST_CASE("load_price_table rejects bad cells", "[ingest]") {
    const auto zero = write_temp_csv("excursor_zero.csv",
                                     "Date,AA\n2001-01-02,0\n2001-01-03,1\n");
    REQUIRE_THROWS_WITH(load_price_table(zero), Catch::Matchers::ContainsSubstring("non-positive price"));

    const auto bad_date = write_temp_csv("excursor_baddate.csv",
                                         "Date,AA\n2001-13-02,1\n2001-01-03,1\n");
    REQUIRE_THROWS_WITH(load_price_table(bad_date), Catch::Matchers::ContainsSubstring("row 2"));

    const auto bad_num = write_temp_csv("excursor_badnum.csv",
                                        "Date,AA\n2001-01-02,oops\n");
    REQUIRE_THROWS_WITH(load_price_table(bad_num), Catch::Matchers::ContainsSubstring("row 2"));
}

TEST_CASE("load_price_table sorts rows and honours named date column", "[ingest]") {
    const auto path = write_temp_csv("excursor_sort.csv",
                                     "AA,When\n2,2001-01-03\n1,2001-01-02\n");
    CsvOptions opts;
    opts.date_column = "When";
    const auto table = load_price_table(path, opts);
    REQUIRE(table.dates == std::vector<std::string>{"2001-01-02", "2001-01-03"});
    REQUIRE(table.columns[0] == std::vector<double>{1.0, 2.0});
}

TEST_CASE("table with the reference shape loads intact", "[ingest]") {
    // 6511 x 47, the shape of the daily cross-market dataset.
    const auto series = synth({SynthKind::kWhite, 6511, 47, 99});
    const auto table = synthetic_price_table(series);
    const auto path = fs::temp_directory_path() / "excursor_big.csv";
    {
        std::ofstream out(path);
        write_price_table(table, out);
    }
    const auto loaded = load_price_table(path);
    REQUIRE(loaded.n_rows() == 6511);
    REQUIRE(loaded.n_cols() == 47);
    REQUIRE(loaded.dates.front() == "1995-01-02");
}

TEST_CASE("align: identical tables unchanged under intersect", "[ingest]") {
    const auto t = make_table({"2001-01-02", "2001-01-03"}, {"AA"}, {{1.0, 2.0}});
    const auto aligned = align({t});
    REQUIRE(aligned.dates == t.dates);
    REQUIRE(aligned.columns == t.columns);
}

TEST_CASE("align: intersect keeps common dates only", "[ingest]") {
    const auto a = make_table({"2001-01-01", "2001-01-02", "2001-01-03"}, {"AA"}, {{1, 2, 3}});
    const auto b = make_table({"2001-01-02", "2001-01-03", "2001-01-04"}, {"BB"}, {{5, 6, 7}});
    const auto aligned = align({a, b});
    REQUIRE(aligned.dates == std::vector<std::string>{"2001-01-02", "2001-01-03"});
    REQUIRE(aligned.columns[0] == std::vector<double>{2, 3});
    REQUIRE(aligned.columns[1] == std::vector<double>{5, 6});
}

TEST_CASE("align: forward-fill repeats the last known price", "[ingest]") {
    const auto a = make_table({"2001-01-01", "2001-01-02", "2001-01-03"}, {"AA"}, {{1, 2, 3}});
    const auto b = make_table({"2001-01-01", "2001-01-03"}, {"BB"}, {{5, 7}});
    const auto aligned = align({a, b}, AlignPolicy::kForwardFill);
    REQUIRE(aligned.dates.size() == 3);
    REQUIRE(aligned.columns[1] == std::vector<double>{5, 5, 7});
}

TEST_CASE("align error paths", "[ingest]") {
    const auto a = make_table({"2001-01-01"}, {"AA"}, {{1}});
    const auto b = make_table({"2001-01-02"}, {"BB"}, {{5}});
    REQUIRE_THROWS_WITH(align({a, b}), Catch::Matchers::ContainsSubstring("empty date intersection"));
    // b starts after the union grid start: nothing to carry forward.
    REQUIRE_THROWS_WITH(align({a, b}, AlignPolicy::kForwardFill),
                        Catch::Matchers::ContainsSubstring("forward-fill"));
}

TEST_CASE("log_returns basics", "[ingest]") {
    const std::vector<double> constant{3.0, 3.0, 3.0};
    for (double v : log_returns(constant).values) REQUIRE(v == 0.0);

    const double e = std::exp(1.0);
    const auto ramp = log_returns(std::vector<double>{1.0, e, e * e});
    REQUIRE(ramp.values[0] == Catch::Approx(1.0).epsilon(1e-14));
    REQUIRE(ramp.values[1] == Catch::Approx(1.0).epsilon(1e-14));

    const auto pct = log_returns(std::vector<double>{100.0, 110.0});
    REQUIRE(pct.values[0] == Catch::Approx(0.09531017980432486).epsilon(1e-14));

    REQUIRE_THROWS_AS(log_returns(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("log_returns of a geometric ramp is constant", "[ingest]") {
    std::vector<double> prices;
    double p = 2.5;
    for (int i = 0; i < 50; ++i) {
        prices.push_back(p);
        p *= 1.07;
    }
    const auto r = log_returns(prices);
    for (double v : r.values) REQUIRE(v == Catch::Approx(std::log(1.07)).epsilon(1e-12));
}

TEST_CASE("standardize hits exact moments", "[ingest]") {
    const auto s = standardize(std::vector<double>{1.0, 2.0, 3.0});
    REQUIRE(s.values[0] == Catch::Approx(-1.224744871391589).epsilon(1e-12));
    REQUIRE(s.values[1] == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(s.values[2] == Catch::Approx(1.224744871391589).epsilon(1e-12));
    REQUIRE(s.scale == Catch::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));

    const auto mv = population_mean_var(s.values);
    REQUIRE(std::abs(mv.mean) < 1e-12);
    REQUIRE(mv.var == Catch::Approx(1.0).epsilon(1e-9));

    REQUIRE_THROWS_WITH(standardize(std::vector<double>{5.0, 5.0, 5.0}),
                        Catch::Matchers::ContainsSubstring("degenerate"));
}

TEST_CASE("standardize is idempotent", "[ingest]") {
    Rng rng(3);
    std::vector<double> xs(500);
    for (double& x : xs) x = 4.0 + 2.5 * rng.normal();
    const auto once = standardize(xs);
    const auto twice = standardize(once.values);
    REQUIRE(twice.scale == Catch::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        REQUIRE(twice.values[i] == Catch::Approx(once.values[i]).margin(1e-12));
    }
}

TEST_CASE("segment shapes and tail", "[ingest]") {
    const auto series = synth({SynthKind::kWhite, 6511, 1, 5}).front();

    const auto segs = segment(series, 100);
    REQUIRE(segs.segments.size() == 65);
    REQUIRE(segs.discarded_tail == 11);
    for (const auto& seg : segs.segments) {
        REQUIRE(seg.size() == 100);
        const auto mv = population_mean_var(seg.values);
        REQUIRE(std::abs(mv.mean) < 1e-12);
        REQUIRE(mv.var == Catch::Approx(1.0).epsilon(1e-9));
    }
    REQUIRE(segs.segments[3].window_id == 3);

    const auto exact = segment(synth({SynthKind::kWhite, 200, 1, 5}).front(), 100);
    REQUIRE(exact.segments.size() == 2);
    REQUIRE(exact.discarded_tail == 0);

    const auto short_series = synth({SynthKind::kWhite, 100, 1, 5}).front();
    StandardizedSeries s99 = standardize(
        std::vector<double>(short_series.values.begin(), short_series.values.begin() + 99));
    REQUIRE_THROWS_AS(segment(s99, 100), std::invalid_argument);
    REQUIRE_THROWS_AS(segment(short_series, 5), std::invalid_argument);
}

TEST_CASE("segments are re-standardized slices in original order", "[ingest]") {
    const auto series = synth({SynthKind::kWhite, 450, 1, 17}).front();
    const auto segs = segment(series, 100);
    REQUIRE(segs.segments.size() == 4);
    for (std::size_t i = 0; i < segs.segments.size(); ++i) {
        std::span<const double> slice(series.values.data() + i * 100, 100);
        const auto expect = standardize(slice);
        for (std::size_t k = 0; k < 100; ++k) {
            REQUIRE(segs.segments[i].values[k] == expect.values[k]);
        }
    }
}

TEST_CASE("synth is bit-reproducible and order-independent", "[ingest]") {
    const SynthSpec spec{SynthKind::kFactorModel, 256, 6, 31, 5.0, 2, 0.5};
    const auto a = synth(spec);
    const auto b = synth(spec);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].values == b[i].values);
        REQUIRE(a[i].label == b[i].label);
    }
    // Different seed, different draw.
    SynthSpec other = spec;
    other.seed = 32;
    REQUIRE(synth(other).front().values != a.front().values);
}

TEST_CASE("smoothed synth matches the kernel lag-1 autocorrelation", "[ingest]") {
    for (double width : {2.0, 5.0}) {
        const auto s = synth({SynthKind::kSmoothed, 200'000, 1, 7, width}).front();
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < s.size(); ++k) acc += s.values[k] * s.values[k + 1];
        const double rho1 = acc / static_cast<double>(s.size() - 1);
        const double expected = std::exp(-1.0 / (4.0 * width * width));
        REQUIRE(rho1 == Catch::Approx(expected).epsilon(0.05));
    }
}

TEST_CASE("factor model with zero loading gives uncorrelated series", "[ingest]") {
    const std::size_t n = 100'000;
    const auto set = synth({SynthKind::kFactorModel, n, 2, 13, 5.0, 1, 0.0});
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += set[0].values[k] * set[1].values[k];
    REQUIRE(std::abs(acc / static_cast<double>(n)) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("factor model with strong loading correlates groups, not across", "[ingest]") {
    const std::size_t n = 50'000;
    const auto set = synth({SynthKind::kFactorModel, n, 4, 13, 5.0, 2, 0.8});
    auto corr = [&](int a, int b) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            acc += set[static_cast<std::size_t>(a)].values[k] * set[static_cast<std::size_t>(b)].values[k];
        }
        return acc / static_cast<double>(n);
    };
    REQUIRE(corr(0, 1) == Catch::Approx(0.8).margin(0.02));   // same group
    REQUIRE(corr(2, 3) == Catch::Approx(0.8).margin(0.02));   // same group
    REQUIRE(std::abs(corr(0, 2)) < 0.02);                     // across groups
}

TEST_CASE("synth rejects bad parameters", "[ingest]") {
    REQUIRE_THROWS_AS(synth({SynthKind::kWhite, 50, 1, 1}), std::invalid_argument);
    REQUIRE_THROWS_AS(synth({SynthKind::kSmoothed, 200, 1, 1, 0.5}), std::invalid_argument);
    REQUIRE_THROWS_AS(synth({SynthKind::kFactorModel, 200, 2, 1, 5.0, 3, 0.5}), std::invalid_argument);
    REQUIRE_THROWS_AS(synth({SynthKind::kFactorModel, 200, 2, 1, 5.0, 1, 1.0}), std::invalid_argument);
}

TEST_CASE("synthetic price table round-trips through log-returns", "[ingest]") {
    const auto series = synth({SynthKind::kWhite, 500, 2, 21});
    const auto table = synthetic_price_table(series);
    REQUIRE(table.n_rows() == 500);
    const auto recovered = standardize(log_returns(table, "S001"));
    // Affine price mapping drops out under re-standardization.
    for (std::size_t k = 0; k < recovered.size(); ++k) {
        REQUIRE(recovered.values[k] == Catch::Approx(series[1].values[k + 1]).margin(1e-9));
    }
}
