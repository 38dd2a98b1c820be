#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "excursor/rng.hpp"

using namespace excursor;

TEST_CASE("same seed, same stream", "[rng]") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    Rng c(42);
    Rng d(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(c.normal() == d.normal());
    }
}

TEST_CASE("derived streams differ", "[rng]") {
    REQUIRE(derive(1, "rr") != derive(1, "ra"));
    REQUIRE(derive(1, std::uint64_t{0}) != derive(1, std::uint64_t{1}));
    REQUIRE(derive(derive(1, "a"), "b") != derive(derive(1, "b"), "a"));
    Rng a(derive(7, std::uint64_t{0}));
    Rng b(derive(7, std::uint64_t{1}));
    REQUIRE(a.next_u64() != b.next_u64());
}

TEST_CASE("normal stream passes CLT mean bound", "[rng]") {
    const std::size_t n = 1'000'000;
    Rng rng(20240101);
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sum2 / static_cast<double>(n) - mean * mean;
    REQUIRE(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(var == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("uniform_below stays in range and covers it", "[rng]") {
    Rng rng(5);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = rng.uniform_below(7);
        REQUIRE(v < 7);
        ++hits[static_cast<std::size_t>(v)];
    }
    for (int h : hits) REQUIRE(h > 800);
}

TEST_CASE("generator version is pinned", "[rng]") {
    REQUIRE(kRngVersion == std::string_view("splitmix64+mt19937_64+polar/1"));
}
