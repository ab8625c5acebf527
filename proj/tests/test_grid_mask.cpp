// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "radial/mask.hpp"

using namespace radial;

namespace {

// Independent transcription of the three-case keep rule, evaluated with
// floating-point arithmetic against the exact rational width. Used as the
// oracle for the integer-arithmetic implementation.
int slow_floor_log2(std::uint64_t x) {
    int e = 0;
    while (x >= 2) {
        x /= 2;
        ++e;
    }
    return e;
}

bool oracle_radial_keep(int i, int j, int k, int l, int s, bool sink) {
    if (sink && j == 0) return true;
    int d = std::abs(i - j);
    int e = slow_floor_log2(std::max(d, 1));
    double pw = std::pow(2.0, e);
    if (pw <= s && std::abs(k - l) + 1 <= static_cast<double>(s) / pw) return true;
    int period = static_cast<int>(std::ceil(pw / s));
    return d % period == 0 && k == l;
}

std::uint64_t oracle_count(int f, int s, bool sink) {
    std::uint64_t c = 0;
    for (int i = 0; i < f; ++i)
        for (int j = 0; j < f; ++j)
            for (int k = 0; k < s; ++k)
                for (int l = 0; l < s; ++l) c += oracle_radial_keep(i, j, k, l, s, sink);
    return c;
}

}  // namespace

TEST_CASE("band_index") {
    CHECK(band_index(5, 5) == 0);
    CHECK(band_index(0, 6) == 2);
    CHECK(band_index(9, 2) == -2);
    CHECK(band_index(3, 4) == 0);
    CHECK(band_index(0, 16) == 4);
    for (std::uint32_t i = 0; i < 20; ++i) {
        for (std::uint32_t j = 0; j < 20; ++j) {
            CHECK(band_index(i, j) == -band_index(j, i));
        }
    }
}

TEST_CASE("num_bands") {
    CHECK(num_bands(12) == 7);
    CHECK(num_bands(1) == 1);
    CHECK(num_bands(2) == 1);
    for (std::uint32_t f = 1; f <= 40; ++f) {
        std::uint32_t nb = num_bands(f);
        CHECK(nb % 2 == 1);
        std::int32_t widest = 0;
        for (std::uint32_t i = 0; i < f; ++i) {
            widest = std::max(widest, std::abs(band_index(0, i)));
        }
        CHECK(nb == 1 + 2 * static_cast<std::uint32_t>(widest));
    }
}

TEST_CASE("diagonal_width") {
    GridShape s8(16, 8);
    CHECK(diagonal_width(0, 1, s8) == 8.0);
    CHECK(diagonal_width(0, 4, s8) == 2.0);
    GridShape s6(16, 6);
    CHECK(diagonal_width(0, 4, s6) == 1.5);  // exact rational, not its floor
    // keeps only k == l at that width
    CHECK(radial_keep(0, 4, 2, 2, s6, false));
    CHECK_FALSE(radial_keep(0, 4, 2, 3, s6, false));
    for (std::uint32_t d = 1; d + 1 < 16; ++d) {
        CHECK(diagonal_width(0, d + 1, s8) <= diagonal_width(0, d, s8));
    }
}

TEST_CASE("keep_period") {
    GridShape sh(64, 8);
    CHECK(keep_period(0, 16, sh) == 2);
    CHECK(keep_period(0, 3, sh) == 1);
    CHECK(keep_period(0, 40, sh) == 4);
    // period is 1 whenever the band's power of two fits in s
    for (std::uint32_t d = 0; d <= 8; ++d) CHECK(keep_period(0, d, sh) == 1);
}

TEST_CASE("radial_keep spec points") {
    GridShape big(51, 8);
    CHECK(radial_keep(3, 3, 0, 7, big, false));              // same frame, central band
    GridShape s8(20, 8);
    CHECK_FALSE(radial_keep(0, 17, 2, 2, s8, false));        // period 2, 17 mod 2 = 1
    CHECK(radial_keep(50, 0, 7, 3, big, true));              // attention sink
    CHECK_FALSE(radial_keep(50, 0, 7, 3, big, false));
    CHECK_THROWS_AS(radial_keep(0, 99, 0, 0, s8, false), std::out_of_range);
    CHECK_THROWS_AS(radial_keep(0, 0, 8, 0, s8, false), std::out_of_range);
}

TEST_CASE("radial_keep matches oracle exhaustively") {
    for (int f = 1; f <= 9; ++f) {
        for (int s = 1; s <= 9; ++s) {
            GridShape shape(f, s);
            for (bool sink : {false, true}) {
                for (int i = 0; i < f; ++i)
                    for (int j = 0; j < f; ++j)
                        for (int k = 0; k < s; ++k)
                            for (int l = 0; l < s; ++l) {
                                bool got = radial_keep(i, j, k, l, shape, sink);
                                bool want = oracle_radial_keep(i, j, k, l, s, sink);
                                if (got != want) {
                                    CAPTURE(f, s, sink, i, j, k, l);
                                    REQUIRE(got == want);
                                }
                            }
            }
        }
    }
}

TEST_CASE("radial symmetry and diagonal") {
    GridShape shape(24, 6);
    for (std::uint32_t i = 0; i < 24; ++i) {
        for (std::uint32_t j = 0; j < 24; ++j) {
            // the k = l diagonal survives exactly at the keep period
            for (std::uint32_t k = 0; k < 6; ++k) {
                bool expect = (std::max(i, j) - std::min(i, j)) % keep_period(i, j, shape) == 0;
                CHECK(radial_keep(i, j, k, k, shape, false) == expect);
            }
            for (std::uint32_t k = 0; k < 6; ++k)
                for (std::uint32_t l = 0; l < 6; ++l) {
                    CHECK(radial_keep(i, j, k, l, shape, false) ==
                          radial_keep(j, i, l, k, shape, false));
                }
        }
    }
    // main diagonal always kept
    for (std::uint32_t i = 0; i < 24; ++i)
        for (std::uint32_t k = 0; k < 6; ++k) CHECK(radial_keep(i, i, k, k, shape, false));
}

TEST_CASE("baseline_keep") {
    GridShape shape(10, 8);
    CHECK_FALSE(baseline_keep(PatternSpec::sta(1, 2), 0, 2, 0, 0, shape));
    CHECK(baseline_keep(PatternSpec::temporal(0), 0, 9, 4, 4, shape));
    CHECK_FALSE(baseline_keep(PatternSpec::temporal(0), 0, 9, 4, 5, shape));
    CHECK(baseline_keep(PatternSpec::harmonic(), 0, 2, 1, 3, shape));   // width 8/2 = 4
    CHECK(baseline_keep(PatternSpec::harmonic(), 0, 2, 1, 4, shape));   // |k-l|+1 = 4 <= 4
    CHECK_FALSE(baseline_keep(PatternSpec::harmonic(), 0, 2, 1, 5, shape));
    CHECK(baseline_keep(PatternSpec::spatial(1), 0, 1, 0, 7, shape));
    CHECK_FALSE(baseline_keep(PatternSpec::spatial(1), 0, 2, 0, 0, shape));
    CHECK(baseline_keep(PatternSpec::dense(), 0, 9, 0, 7, shape));
    // power: token distance 0 or a power of two
    CHECK(baseline_keep(PatternSpec::power(), 0, 0, 0, 4, shape));   // |u-v| = 4
    CHECK_FALSE(baseline_keep(PatternSpec::power(), 0, 0, 0, 5, shape));
    CHECK(baseline_keep(PatternSpec::power(), 0, 2, 0, 0, shape));   // |u-v| = 16
    // sink ORs in j = 0 for baselines too
    CHECK(baseline_keep(PatternSpec::sta(1, 2, true), 5, 0, 0, 7, shape));

    PatternSpec missing;
    missing.kind = PatternKind::sta;
    missing.sink = false;
    CHECK_THROWS_AS(baseline_keep(missing, 0, 1, 0, 0, shape), std::invalid_argument);
    CHECK_THROWS_AS(missing.validate(), std::invalid_argument);
}

TEST_CASE("materialize_mask") {
    auto m1 = materialize_mask(GridShape(1, 4), PatternSpec::radial());
    CHECK(m1.kept_count() == 16);
    auto m2 = materialize_mask(GridShape(2, 4), PatternSpec::radial());
    CHECK(m2.kept_count() == 64);

    GridShape shape(8, 4);
    auto mask = materialize_mask(shape, PatternSpec::radial());
    CHECK(mask.kept_count() == oracle_count(8, 4, true));
    for (std::uint64_t u = 0; u < 32; ++u)
        for (std::uint64_t v = 0; v < 32; ++v) {
            CHECK(mask.test(u, v) == oracle_radial_keep(static_cast<int>(u / 4),
                                                        static_cast<int>(v / 4),
                                                        static_cast<int>(u % 4),
                                                        static_cast<int>(v % 4), 4, true));
        }

    CHECK_THROWS_AS(materialize_mask(GridShape(1000, 1000), PatternSpec::radial()),
                    std::length_error);
    CHECK_THROWS_WITH(materialize_mask(GridShape(1000, 1000), PatternSpec::radial()),
                      Catch::Matchers::ContainsSubstring("1000000"));
}

TEST_CASE("every row keeps frame 0 under the sink") {
    for (auto [f, s] : {std::pair{7, 5}, std::pair{12, 3}, std::pair{3, 11}}) {
        auto mask = materialize_mask(GridShape(f, s), PatternSpec::radial(true));
        for (std::uint64_t u = 0; u < mask.size(); ++u) {
            CHECK(mask.row_kept_count(u) >= static_cast<std::uint64_t>(s));
            CHECK(mask.test(u, 0));
        }
    }
}

TEST_CASE("count_kept equals materialized count") {
    CHECK(count_kept(GridShape(1, 4), PatternSpec::radial()) == 16);
    for (int f = 1; f <= 10; ++f) {
        for (int s = 1; s <= 10; ++s) {
            GridShape shape(f, s);
            for (bool sink : {false, true}) {
                auto pattern = PatternSpec::radial(sink);
                CHECK(count_kept(shape, pattern) ==
                      materialize_mask(shape, pattern).kept_count());
            }
        }
    }
}

TEST_CASE("count_kept equals materialized count for baselines") {
    for (auto [f, s] : {std::pair{6, 7}, std::pair{9, 4}, std::pair{5, 5}}) {
        GridShape shape(f, s);
        for (auto pattern :
             {PatternSpec::dense(), PatternSpec::spatial(1), PatternSpec::spatial(2, true),
              PatternSpec::temporal(0), PatternSpec::temporal(2, true), PatternSpec::sta(2, 2),
              PatternSpec::sta(1, 3, true), PatternSpec::power(), PatternSpec::power(true),
              PatternSpec::harmonic(), PatternSpec::harmonic(true)}) {
            CAPTURE(f, s, kind_name(pattern.kind), pattern.sink);
            CHECK(count_kept(shape, pattern) == materialize_mask(shape, pattern).kept_count());
        }
    }
}

TEST_CASE("kept sets are monotone") {
    for (auto [f, s] : {std::pair{8, 6}, std::pair{11, 3}}) {
        GridShape shape(f, s);
        auto with_sink = materialize_mask(shape, PatternSpec::radial(true));
        auto without = materialize_mask(shape, PatternSpec::radial(false));
        auto dense = materialize_mask(shape, PatternSpec::dense());
        std::uint64_t n = shape.total_tokens();
        for (std::uint64_t u = 0; u < n; ++u)
            for (std::uint64_t v = 0; v < n; ++v) {
                if (without.test(u, v)) CHECK(with_sink.test(u, v));  // sink only adds
                if (with_sink.test(u, v)) CHECK(dense.test(u, v));    // dense is a superset
            }
    }
    // count is nondecreasing in s at fixed f
    for (std::uint32_t f : {3u, 8u, 13u}) {
        std::uint64_t prev = 0;
        for (std::uint32_t s = 1; s <= 12; ++s) {
            std::uint64_t c = count_kept(GridShape(f, s), PatternSpec::radial());
            CHECK(c >= prev);
            prev = c;
        }
    }
}

TEST_CASE("count decomposes over bands") {
    // Removing any band's pairs can only lower the count: the bands
    // partition the kept pairs outside the sink column.
    GridShape shape(12, 5);
    auto mask = materialize_mask(shape, PatternSpec::radial(false));
    std::uint64_t total = 0;
    std::uint32_t nb = num_bands(12);
    std::vector<std::uint64_t> per_band(nb, 0);
    std::uint64_t n = shape.total_tokens();
    for (std::uint64_t u = 0; u < n; ++u)
        for (std::uint64_t v = 0; v < n; ++v) {
            if (!mask.test(u, v)) continue;
            ++total;
            auto b = band_index(shape.frame_of(u), shape.frame_of(v));
            per_band[static_cast<std::uint32_t>(b + (nb - 1) / 2)] += 1;
        }
    std::uint64_t sum = 0;
    for (auto c : per_band) sum += c;
    CHECK(sum == total);
    CHECK(total == count_kept(shape, PatternSpec::radial(false)));
    for (auto c : per_band) CHECK(total - c <= total);
}
