// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one self-contained check per shipped claim, each printed
// as a single PASS/FAIL line with its measured numbers. Checks 2, 3, 6 and 7
// pin documented bounds that the exact mask arithmetic does not actually
// meet everywhere (see the comments at each check); they are kept as stated
// and report honestly rather than being loosened to pass.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "radial/radial.hpp"

using namespace radial;
namespace {

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int idx, const char* label, bool pass, const std::string& detail, double secs) {
    std::printf("[%s] %2d %-28s %s (%.1fs)\n", pass ? "PASS" : "FAIL", idx, label,
                detail.c_str(), secs);
    if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Independent brute force of the three-case mask rule (float evaluation of
// the exact rational width), kept deliberately separate from the library.
bool brute_keep(int i, int j, int k, int l, int s, bool sink) {
    if (sink && j == 0) return true;
    int d = std::abs(i - j);
    int e = 0;
    for (int x = std::max(d, 1); x >= 2; x /= 2) ++e;
    double pw = std::pow(2.0, e);
    if (pw <= s && std::abs(k - l) + 1 <= s / pw) return true;
    int period = static_cast<int>(std::ceil(pw / s));
    return d % period == 0 && k == l;
}

// 1. Exhaustive three-way mask equivalence on f, s in [1,12], sink on/off.
void criterion_1() {
    Timer t;
    std::uint64_t checked = 0, bad = 0;
    for (std::uint32_t f = 1; f <= 12; ++f) {
        for (std::uint32_t s = 1; s <= 12; ++s) {
            GridShape shape(f, s);
            for (bool sink : {false, true}) {
                auto pattern = PatternSpec::radial(sink);
                auto mask = materialize_mask(shape, pattern);
                std::uint64_t brute = 0;
                bool bits_ok = true;
                std::uint64_t n = shape.total_tokens();
                for (std::uint64_t u = 0; u < n; ++u) {
                    for (std::uint64_t v = 0; v < n; ++v) {
                        bool want = brute_keep(static_cast<int>(u / s), static_cast<int>(v / s),
                                               static_cast<int>(u % s), static_cast<int>(v % s),
                                               static_cast<int>(s), sink);
                        brute += want;
                        bits_ok = bits_ok && mask.test(u, v) == want;
                    }
                }
                bad += !(bits_ok && brute == mask.kept_count() &&
                         brute == count_kept(shape, pattern));
                ++checked;
            }
        }
    }
    report(1, "mask oracle equivalence", bad == 0 && t.seconds() < 30,
           fmt("%llu shapes, %llu disagreements", (unsigned long long)checked,
               (unsigned long long)bad),
           t.seconds());
}

// 2. Region and headline count bounds plus the <= 2.3 doubling factor. The
// doubling clause holds only from f = 256 up (n log n growth gives
// 2*(1 + 1/log2 f) per doubling, which is 3.3 at f = 8); it is asserted as
// stated and reported with the worst measured factor.
void criterion_2() {
    Timer t;
    bool region_ok = true, headline_ok = true;
    double worst_factor = 0;
    for (std::uint32_t s : {4u, 16u, 64u}) {
        std::uint64_t prev = 0;
        for (std::uint32_t f = 4; f <= 1024; f *= 2) {
            auto rep = verify_complexity(GridShape(f, s));
            region_ok = region_ok && rep.actual_zeros <= rep.bounds.total;
            if (f >= 2 * s) headline_ok = headline_ok && rep.pass_headline;
            if (prev > 0) {
                worst_factor =
                    std::max(worst_factor, static_cast<double>(rep.actual_zeros) /
                                               static_cast<double>(prev));
            }
            prev = rep.actual_zeros;
        }
    }
    bool doubling_ok = worst_factor <= 2.3;
    report(2, "complexity bounds", region_ok && headline_ok && doubling_ok && t.seconds() < 60,
           fmt("region %s, headline %s, worst doubling factor %.3f (<= 2.3 %s)",
               region_ok ? "ok" : "VIOLATED", headline_ok ? "ok" : "VIOLATED", worst_factor,
               doubling_ok ? "ok" : "VIOLATED"),
           t.seconds());
}

// 3. 1000 decay-envelope trials against the closed-form l1 bound, plus the
// 1e-10 agreement of the two l1 routes. The bound itself is falsifiable on
// this parameter range (its derivation assumes w(dt) >= s/2 for dt <= s,
// which the mask's widths do not satisfy), so violations are expected and
// reported with the worst offending rates.
void criterion_3() {
    Timer t;
    ErrorBoundTrialConfig cfg;
    cfg.shape = GridShape(64, 16);
    cfg.trials = 1000;
    cfg.seed = 7;
    auto rep = verify_error_bound(cfg);
    bool agree = rep.max_l1_mismatch <= 1e-10;
    bool within = rep.all_within_bound();
    report(3, "error bound trials", agree && within && t.seconds() < 60,
           fmt("l1 agreement %.1e (<= 1e-10 %s); %u/%u worst-case and %u/%u random rows over "
               "the bound, max ratio %.1f at alpha=%.2f beta=%.2f",
               rep.max_l1_mismatch, agree ? "ok" : "VIOLATED", rep.violations_worst, rep.trials,
               rep.violations_random, rep.trials, rep.max_ratio_worst, rep.worst_alpha,
               rep.worst_beta),
           t.seconds());
}

// 4. Point value of the bound.
void criterion_4() {
    Timer t;
    double v = error_bound(DecayParams(1.0, 1.0, 1.0), 8);
    report(4, "bound point value", std::abs(v - 0.1366) <= 1e-3,
           fmt("error_bound(1,1,8,1) = %.6f vs 0.1366", v), t.seconds());
}

// 5. Dense-pattern masked attention equals dense attention to 1e-12 on 20
// random instances with n up to 4096.
void criterion_5() {
    Timer t;
    std::mt19937_64 rng(2026);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::uint32_t f, s;
        if (trial < 2) {
            f = 64;
            s = 64;  // pin n = 4096 at least twice
        } else {
            f = 1 + static_cast<std::uint32_t>(rng() % 64);
            s = 1 + static_cast<std::uint32_t>(rng() % (4096 / f));
        }
        std::uint32_t d = 4 + static_cast<std::uint32_t>(rng() % 28);
        auto inst = random_instance(GridShape(f, s), d, rng());
        auto a = dense_attention(inst);
        auto b = masked_attention(inst, PatternSpec::dense());
        for (std::size_t idx = 0; idx < a.data.size(); ++idx) {
            worst = std::max(worst, std::abs(a.data[idx] - b.data[idx]));
        }
    }
    report(5, "dense-mask identity", worst <= 1e-12 && t.seconds() < 30,
           fmt("20 instances, max |diff| = %.2e", worst), t.seconds());
}

// 6. Block-level FLOPs reduction of the 4x-length 720p config. The printed
// mask formula yields about 4.5x here (the deployed masks behind the 9x
// headline are one band narrower than the formula); asserted as stated.
void criterion_6() {
    Timer t;
    auto preset = *find_preset("hunyuan-509");
    auto layout = blockify(preset.shape(), PatternSpec::radial(true), preset.block_size);
    double r = attention_flops(layout, 128, 1).reduction;
    report(6, "flops reduction (509f)", r >= 7.0 && r <= 11.0 && t.seconds() < 120,
           fmt("reduction %.2fx vs [7, 11]", r), t.seconds());
}

// 7. Preset sparsities within 5 points of the published 73.6 / 80.8 / 88.3
// and strictly increasing with n. The formula's sparsities are about 11-14
// points lower (see criterion 6); the trend clause does hold.
void criterion_7() {
    Timer t;
    const char* names[3] = {"wan-161", "hunyuan-253", "hunyuan-509"};
    double targets[3] = {0.736, 0.808, 0.883};
    double got[3];
    for (int idx = 0; idx < 3; ++idx) {
        auto preset = *find_preset(names[idx]);
        got[idx] = sparsity(blockify(preset.shape(), PatternSpec::radial(true),
                                     preset.block_size));
    }
    bool within = true;
    for (int idx = 0; idx < 3; ++idx) within = within && std::abs(got[idx] - targets[idx]) <= 0.05;
    bool increasing = got[0] < got[1] && got[1] < got[2];
    report(7, "sparsity trend", within && increasing,
           fmt("%.1f/%.1f/%.1f%% vs 73.6/80.8/88.3%% (+-5 %s), increasing %s", 100 * got[0],
               100 * got[1], 100 * got[2], within ? "ok" : "VIOLATED",
               increasing ? "ok" : "VIOLATED"),
           t.seconds());
}

// 8. Exponential regression: exact recovery on noiseless data, and
// r2 >= 0.985 on the decay curves of a worst-case envelope instance.
void criterion_8() {
    Timer t;
    std::vector<double> x, y;
    for (int idx = 0; idx < 20; ++idx) {
        x.push_back(idx);
        y.push_back(std::exp(-0.5 * idx + 1.0));
    }
    auto exact = fit_exponential(x, y);
    bool exact_ok = std::abs(exact.a - 0.5) < 1e-9 && std::abs(exact.b - 1.0) < 1e-9 &&
                    std::abs(exact.r2 - 1.0) < 1e-12;

    auto inst = synth_decay_instance(GridShape(16, 16), 0.4, 0.6, 1.0, 4,
                                     SynthMode::worst_case, 21);
    auto curves = decay_curves(inst);
    std::vector<double> xt(curves.temporal.size()), xs(curves.spatial.size());
    for (std::size_t idx = 0; idx < xt.size(); ++idx) xt[idx] = static_cast<double>(idx);
    for (std::size_t idx = 0; idx < xs.size(); ++idx) xs[idx] = static_cast<double>(idx);
    double r2_t = fit_exponential(xt, curves.temporal).r2;
    double r2_s = fit_exponential(xs, curves.spatial).r2;
    bool curves_ok = r2_t >= 0.985 && r2_s >= 0.985;
    report(8, "regression quality", exact_ok && curves_ok,
           fmt("exact recovery %s; curve r2 = %.4f / %.4f (>= 0.985)",
               exact_ok ? "ok" : "VIOLATED", r2_t, r2_s),
           t.seconds());
}

// 9. Budget-matched error direction: radial vs STA at equal kept counts
// (token granularity; at block sizes near s the radial mask occupies every
// block and the comparison degenerates), slow temporal decay.
void criterion_9() {
    Timer t;
    GridShape shape(32, 16);
    auto reference = count_kept(shape, PatternSpec::radial(true));
    auto sta = budget_match(PatternSpec::sta(0, 0), reference, shape, 1).spec;
    int radial_wins = 0;
    double min_margin = 2.0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        auto inst = synth_decay_instance(shape, 0.05, 1.0, 1.0, 2, SynthMode::random,
                                         1000 + trial);
        double mean_radial = l1_stats(inst, PatternSpec::radial(true)).mean;
        double mean_sta = l1_stats(inst, sta).mean;
        radial_wins += mean_radial < mean_sta;
        min_margin = std::min(min_margin, mean_sta - mean_radial);
    }
    report(9, "radial vs STA direction", radial_wins == 100,
           fmt("radial mean l1 lower in %d/100 trials (min margin %.3f, sta window %u)",
               radial_wins, min_margin, sta.require_temporal_window()),
           t.seconds());
}

// 10. Serialization round trips and structured header errors.
void criterion_10() {
    Timer t;
    std::mt19937_64 rng(501);
    int bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::uint32_t f = 1 + rng() % 20;
        std::uint32_t s = 1 + rng() % 20;
        std::uint32_t B = 1 + rng() % 12;
        PatternSpec pattern;
        switch (rng() % 7) {
            case 0: pattern = PatternSpec::radial(rng() % 2 == 0); break;
            case 1: pattern = PatternSpec::dense(); break;
            case 2: pattern = PatternSpec::spatial(rng() % 5, rng() % 2 == 0); break;
            case 3: pattern = PatternSpec::temporal(rng() % 5); break;
            case 4: pattern = PatternSpec::sta(rng() % 5, rng() % 5); break;
            case 5: pattern = PatternSpec::power(rng() % 2 == 0); break;
            default: pattern = PatternSpec::harmonic(); break;
        }
        auto lay = blockify(GridShape(f, s), pattern, B);
        auto bytes = serialize(lay);
        if (!(deserialize(bytes) == lay)) ++bad;

        // corrupt one header byte; must throw ParseError, never crash
        auto corrupt = bytes;
        corrupt[rng() % 21] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        try {
            auto parsed = deserialize(corrupt);
            // a flipped bit may still parse when it lands in a don't-care
            // position; accept either outcome, crash-free is the contract
            (void)parsed;
        } catch (const ParseError&) {
        } catch (...) {
            ++bad;
        }
        auto truncated = bytes;
        truncated.resize(truncated.size() / 2);
        try {
            deserialize(truncated);
            ++bad;
        } catch (const ParseError&) {
        } catch (...) {
            ++bad;
        }
    }
    report(10, "serialization", bad == 0, fmt("200 layouts, %d failures", bad), t.seconds());
}

}  // namespace

int main() {
    std::printf("acceptance suite (radial attention masks)\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
