// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "radial/attention.hpp"
#include "radial/block.hpp"
#include "radial/grid.hpp"
#include "radial/mask.hpp"

namespace radial {

/// Decay-model constants: temporal rate alpha, spatial rate beta, relative
/// constant c_rel, all strictly positive.
struct DecayParams {
    double alpha = 1.0;
    double beta = 1.0;
    double c_rel = 1.0;

    DecayParams() = default;
    DecayParams(double a, double b, double c) : alpha(a), beta(b), c_rel(c) {
        if (!(a > 0.0) || !(b > 0.0)) {
            throw std::invalid_argument("DecayParams: rates must be positive");
        }
        if (!(c > 0.0)) throw std::invalid_argument("DecayParams: c_rel must be positive");
    }
};

// ---------------------------------------------------------------------------
// Complexity region bounds
// ---------------------------------------------------------------------------

/// Closed-form upper bounds on the kept entries of the radial mask, per
/// region: central band plus sink (4 s^2 f), bands with diagonal width >= 1
/// (4 s^2 f floor(log2 s)), and subsampled narrow bands
/// ((floor(log2 f) - floor(log2 s)) * 4 s^2 f, clamped at 0). The headline
/// is the aggregate form 4 s n (log2 n - log2 s).
struct RegionBounds {
    std::uint64_t central_and_sink = 0;
    std::uint64_t wide_bands = 0;
    std::uint64_t narrow_bands = 0;
    std::uint64_t total = 0;
    double headline = 0;
};

inline RegionBounds region_zero_bounds(const GridShape& shape) {
    const std::uint64_t f = shape.frames;
    const std::uint64_t s = shape.tokens_per_frame;
    const std::uint64_t unit = 4 * s * s * f;
    const std::uint64_t log_s = detail::floor_log2(s);
    const std::uint64_t log_f = detail::floor_log2(f);
    RegionBounds r;
    r.central_and_sink = unit;
    r.wide_bands = unit * log_s;
    r.narrow_bands = log_f > log_s ? unit * (log_f - log_s) : 0;
    r.total = r.central_and_sink + r.wide_bands + r.narrow_bands;
    const double n = static_cast<double>(shape.total_tokens());
    r.headline = 4.0 * static_cast<double>(s) * n *
                 (std::log2(n) - std::log2(static_cast<double>(s)));
    return r;
}

/// Check the radial mask's exact kept count against the region bounds, and
/// against the integer headline 4 s^2 f floor(log2 f) in the asymptotic
/// regime f >= 2s where that aggregate form applies.
struct ComplexityReport {
    GridShape shape;
    std::uint64_t actual_zeros = 0;
    RegionBounds bounds;
    std::uint64_t headline_floor = 0;
    bool pass_region = false;
    bool headline_applicable = false;
    bool pass_headline = true;  // vacuously true when not applicable
};

inline ComplexityReport verify_complexity(const GridShape& shape,
                                          const PatternSpec& pattern = PatternSpec::radial()) {
    ComplexityReport rep;
    rep.shape = shape;
    rep.actual_zeros = count_kept(shape, pattern);
    rep.bounds = region_zero_bounds(shape);
    const std::uint64_t f = shape.frames;
    const std::uint64_t s = shape.tokens_per_frame;
    // slack term: the sink column is bounded jointly with the central band
    rep.pass_region = rep.actual_zeros <= rep.bounds.total + 4 * s * s * f;
    rep.headline_applicable = f >= 2 * static_cast<std::uint64_t>(shape.tokens_per_frame);
    if (rep.headline_applicable) {
        rep.headline_floor = 4 * s * s * f * detail::floor_log2(f);
        rep.pass_headline = rep.actual_zeros <= rep.headline_floor;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Error bound
// ---------------------------------------------------------------------------

/// The closed-form l1 bound
///   c_rel * [ 8 e^{-beta(s/2+1)} / ((1-e^{-alpha})(1-e^{-beta}))
///           + 4 (1+e^{-beta})/(1-e^{-beta}) * e^{-alpha(s+1)}/(1-e^{-alpha}) ].
/// Strictly decreasing in alpha, beta, and s; linear in c_rel.
inline double error_bound(const DecayParams& params, std::uint32_t s) {
    if (s < 1) throw std::invalid_argument("error_bound: s must be >= 1");
    const double ea = std::exp(-params.alpha);
    const double eb = std::exp(-params.beta);
    const double spatial_tail =
        8.0 * std::exp(-params.beta * (s / 2.0 + 1.0)) / ((1.0 - ea) * (1.0 - eb));
    const double skipped_frames =
        4.0 * (1.0 + eb) / (1.0 - eb) * std::exp(-params.alpha * (s + 1.0)) / (1.0 - ea);
    return params.c_rel * (spatial_tail + skipped_frames);
}

/// Empirical trial harness for the bound: decay-envelope rows (worst-case
/// and noise-scaled) are masked with the radial pattern, their measured l1
/// is compared against error_bound, and the two l1 routes are cross-checked.
struct ErrorBoundTrialConfig {
    GridShape shape{64, 16};
    double alpha_min = 0.1;
    double alpha_max = 2.0;
    double beta_min = 0.1;
    double beta_max = 2.0;
    double c_rel = 1.0;
    std::uint32_t trials = 1000;
    std::uint64_t seed = 0;
    PatternSpec pattern = PatternSpec::radial();
};

struct ErrorBoundReport {
    std::uint32_t trials = 0;
    std::uint32_t violations_worst = 0;
    std::uint32_t violations_random = 0;
    double max_ratio_worst = 0;   // measured / bound over worst-case rows
    double max_ratio_random = 0;  // measured / bound over noise-scaled rows
    double max_l1_mismatch = 0;   // |direct - 2 Z_out/Z|
    double worst_alpha = 0;       // parameters of the worst offending trial
    double worst_beta = 0;

    bool all_within_bound() const { return violations_worst + violations_random == 0; }
};

namespace detail {

// splitmix64: decorrelates per-trial seeds from the master seed
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t idx) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (idx + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

inline ErrorBoundReport verify_error_bound(const ErrorBoundTrialConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("verify_error_bound: trials must be >= 1");
    ErrorBoundReport rep;
    rep.trials = cfg.trials;
    struct Trial {
        double ratio_worst, ratio_random, mismatch, alpha, beta;
    };
    std::vector<Trial> results(cfg.trials);
    parallel_for(cfg.trials, [&](std::uint64_t t) {
        std::mt19937_64 rng(detail::mix_seed(cfg.seed, t));
        std::uniform_real_distribution<double> ua(cfg.alpha_min, cfg.alpha_max);
        std::uniform_real_distribution<double> ub(cfg.beta_min, cfg.beta_max);
        double alpha = ua(rng);
        double beta = ub(rng);
        auto i0 = static_cast<std::uint32_t>(rng() % cfg.shape.frames);
        auto k0 = static_cast<std::uint32_t>(rng() % cfg.shape.tokens_per_frame);
        double bound = error_bound(DecayParams(alpha, beta, cfg.c_rel),
                                   cfg.shape.tokens_per_frame);
        Trial out{0, 0, 0, alpha, beta};
        for (SynthMode mode : {SynthMode::worst_case, SynthMode::random}) {
            ScoreRow row = synth_decay_row(cfg.shape, i0, k0, alpha, beta, cfg.c_rel, mode,
                                           detail::mix_seed(cfg.seed, 2 * t + 1));
            RowL1 l1 = row_l1_error(row, cfg.pattern);
            out.mismatch = std::max(out.mismatch, std::abs(l1.direct - l1.algebraic));
            double ratio = l1.direct / bound;
            (mode == SynthMode::worst_case ? out.ratio_worst : out.ratio_random) = ratio;
        }
        results[t] = out;
    });
    for (const Trial& t : results) {
        rep.max_l1_mismatch = std::max(rep.max_l1_mismatch, t.mismatch);
        if (t.ratio_worst > 1.0) ++rep.violations_worst;
        if (t.ratio_random > 1.0) ++rep.violations_random;
        if (t.ratio_worst > rep.max_ratio_worst) {
            rep.max_ratio_worst = t.ratio_worst;
            rep.worst_alpha = t.alpha;
            rep.worst_beta = t.beta;
        }
        rep.max_ratio_random = std::max(rep.max_ratio_random, t.ratio_random);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Exponential regression
// ---------------------------------------------------------------------------

/// Least-squares fit of y = exp(-a x + b) on (x, ln y). r2 is the log-space
/// coefficient of determination (where the problem is solved); r2_linear
/// evaluates the same fit on the original scale. Zero residual with zero
/// variance counts as r2 = 1.
struct DecayFit {
    double a = 0;
    double b = 0;
    double r2 = 0;
    double r2_linear = 0;
};

inline DecayFit fit_exponential(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_exponential: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("fit_exponential: need at least 2 points");
    for (std::size_t idx = 0; idx < y.size(); ++idx) {
        if (!(y[idx] > 0.0)) {
            throw std::invalid_argument("fit_exponential: nonpositive y at point " +
                                        std::to_string(idx));
        }
    }
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    std::vector<double> ly(y.size());
    for (std::size_t idx = 0; idx < x.size(); ++idx) {
        ly[idx] = std::log(y[idx]);
        sx += x[idx];
        sy += ly[idx];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t idx = 0; idx < x.size(); ++idx) {
        sxx += (x[idx] - mx) * (x[idx] - mx);
        sxy += (x[idx] - mx) * (ly[idx] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_exponential: degenerate x values");
    const double slope = sxy / sxx;
    DecayFit fit;
    fit.a = -slope;
    fit.b = my - slope * mx;

    auto r2_of = [](double ss_res, double ss_tot) {
        if (ss_tot > 0.0) return 1.0 - ss_res / ss_tot;
        return ss_res == 0.0 ? 1.0 : 0.0;
    };
    double res_log = 0, tot_log = 0, res_lin = 0, tot_lin = 0, mean_y = 0;
    for (double v : y) mean_y += v;
    mean_y /= n;
    for (std::size_t idx = 0; idx < x.size(); ++idx) {
        double pred_log = -fit.a * x[idx] + fit.b;
        res_log += (ly[idx] - pred_log) * (ly[idx] - pred_log);
        tot_log += (ly[idx] - my) * (ly[idx] - my);
        double pred = std::exp(pred_log);
        res_lin += (y[idx] - pred) * (y[idx] - pred);
        tot_lin += (y[idx] - mean_y) * (y[idx] - mean_y);
    }
    fit.r2 = r2_of(res_log, tot_log);
    fit.r2_linear = r2_of(res_lin, tot_lin);
    return fit;
}

// ---------------------------------------------------------------------------
// Decay curves
// ---------------------------------------------------------------------------

/// Mean attention score by distance: temporal[dt] averages p(u,v) over
/// same-position pairs |i-j| = dt; spatial[dx] averages within-frame pairs
/// |k-l| = dx.
struct DecayCurves {
    std::vector<double> temporal;
    std::vector<double> spatial;
};

namespace detail {

struct CurveAccum {
    std::vector<double> t_sum, s_sum;
    std::vector<std::uint64_t> t_cnt, s_cnt;

    CurveAccum(std::uint32_t f, std::uint32_t s)
        : t_sum(f, 0.0), s_sum(s, 0.0), t_cnt(f, 0), s_cnt(s, 0) {}

    void add_row(const GridShape& shape, std::uint64_t u, const double* p) {
        const std::uint32_t s = shape.tokens_per_frame;
        const std::uint32_t i = shape.frame_of(u);
        const std::uint32_t k = shape.pos_of(u);
        for (std::uint32_t j = 0; j < shape.frames; ++j) {
            std::uint32_t dt = j > i ? j - i : i - j;
            t_sum[dt] += p[static_cast<std::uint64_t>(j) * s + k];
            t_cnt[dt] += 1;
        }
        const std::uint64_t base = static_cast<std::uint64_t>(i) * s;
        for (std::uint32_t l = 0; l < s; ++l) {
            std::uint32_t dx = l > k ? l - k : k - l;
            s_sum[dx] += p[base + l];
            s_cnt[dx] += 1;
        }
    }

    void merge(const CurveAccum& other) {
        for (std::size_t idx = 0; idx < t_sum.size(); ++idx) {
            t_sum[idx] += other.t_sum[idx];
            t_cnt[idx] += other.t_cnt[idx];
        }
        for (std::size_t idx = 0; idx < s_sum.size(); ++idx) {
            s_sum[idx] += other.s_sum[idx];
            s_cnt[idx] += other.s_cnt[idx];
        }
    }

    DecayCurves finish() const {
        DecayCurves c;
        c.temporal.resize(t_sum.size());
        c.spatial.resize(s_sum.size());
        for (std::size_t idx = 0; idx < t_sum.size(); ++idx) {
            c.temporal[idx] = t_sum[idx] / static_cast<double>(t_cnt[idx]);
        }
        for (std::size_t idx = 0; idx < s_sum.size(); ++idx) {
            c.spatial[idx] = s_sum[idx] / static_cast<double>(s_cnt[idx]);
        }
        return c;
    }
};

}  // namespace detail

/// Curves from an explicit row-stochastic matrix.
inline DecayCurves decay_curves(const Matrix& probs, const GridShape& shape) {
    const std::uint64_t n = shape.total_tokens();
    if (probs.rows != n || probs.cols != n) {
        throw std::invalid_argument("decay_curves: matrix must be n x n");
    }
    detail::CurveAccum acc(shape.frames, shape.tokens_per_frame);
    for (std::uint64_t u = 0; u < n; ++u) acc.add_row(shape, u, probs.row(u));
    return acc.finish();
}

/// Curves from an instance; softmax rows are streamed, never stored whole.
/// The row chunking is fixed so results do not depend on the thread count.
inline DecayCurves decay_curves(const AttentionInstance& inst) {
    inst.validate();
    const GridShape& shape = inst.shape;
    const std::uint64_t n = shape.total_tokens();
    const std::uint64_t chunks = std::min<std::uint64_t>(n, 256);
    std::vector<detail::CurveAccum> partial(
        chunks, detail::CurveAccum(shape.frames, shape.tokens_per_frame));
    const std::uint64_t per_chunk = (n + chunks - 1) / chunks;
    parallel_for(chunks, [&](std::uint64_t c) {
        std::vector<double> p;
        for (std::uint64_t u = c * per_chunk; u < std::min(n, (c + 1) * per_chunk); ++u) {
            p = dense_probability_row(inst, u);
            partial[c].add_row(shape, u, p.data());
        }
    });
    for (std::uint64_t c = 1; c < chunks; ++c) partial[0].merge(partial[c]);
    return partial[0].finish();
}

// ---------------------------------------------------------------------------
// Budget matching
// ---------------------------------------------------------------------------

/// Window selection that equalizes compute budgets across mask families:
/// the largest window whose kept-block count at the given block size stays
/// within the reference count (smallest window on count ties). When even
/// the smallest window exceeds the reference, it is returned flagged
/// under_budget.
struct BudgetMatchResult {
    PatternSpec spec;
    std::uint64_t kept_blocks = 0;
    bool under_budget = false;
};

inline BudgetMatchResult budget_match(const PatternSpec& target, std::uint64_t reference_blocks,
                                      const GridShape& shape, std::uint32_t block_size) {
    const std::uint32_t f = shape.frames;
    const std::uint32_t s = shape.tokens_per_frame;
    std::uint32_t max_window = 0;
    switch (target.kind) {
        case PatternKind::spatial: max_window = f - 1; break;
        case PatternKind::temporal: max_window = s - 1; break;
        case PatternKind::sta: max_window = std::max(f, s) - 1; break;
        default:
            throw std::invalid_argument(std::string("budget_match: ") +
                                        std::string(kind_name(target.kind)) +
                                        " has no tunable window");
    }
    auto with_window = [&](std::uint32_t w) {
        PatternSpec p = target;
        if (p.kind == PatternKind::spatial || p.kind == PatternKind::sta) p.temporal_window = w;
        if (p.kind == PatternKind::temporal || p.kind == PatternKind::sta) p.spatial_window = w;
        return p;
    };
    auto count_at = [&](std::uint32_t w) {
        // B = 1 degenerates to the exact token count; skip the layout build
        if (block_size == 1) return count_kept(shape, with_window(w));
        return blockify(shape, with_window(w), block_size).kept_blocks();
    };

    BudgetMatchResult best;
    best.spec = with_window(0);
    best.kept_blocks = count_at(0);
    if (best.kept_blocks > reference_blocks) {
        best.under_budget = true;
        return best;
    }
    for (std::uint32_t w = 1; w <= max_window; ++w) {
        std::uint64_t c = count_at(w);
        if (c > reference_blocks) break;
        if (c > best.kept_blocks) {  // ties keep the smaller window
            best.kept_blocks = c;
            best.spec = with_window(w);
        }
    }
    return best;
}

}  // namespace radial
