// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "radial/block.hpp"
#include "radial/grid.hpp"
#include "radial/mask.hpp"
#include "radial/parallel.hpp"

namespace radial {

/// Row-major double matrix. Small on purpose; this library only needs
/// storage plus indexed access.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    bool empty() const { return data.empty(); }

    bool all_finite() const {
        for (double v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

/// One attention problem: Q, K, V of shape n x d over a token grid.
///
/// Synthetic decay instances store the attention logits explicitly instead
/// (an n x d factorization cannot represent the decay envelope); for those,
/// Q and K are empty, `logits` is n x n, and the attention ops use it
/// directly without the 1/sqrt(d) scaling.
struct AttentionInstance {
    GridShape shape;
    std::uint32_t head_dim = 1;
    Matrix query;
    Matrix key;
    Matrix value;
    Matrix logits;  // empty unless the instance carries explicit logits

    bool has_explicit_logits() const { return !logits.empty(); }

    void validate() const {
        const std::size_t n = shape.total_tokens();
        if (value.rows != n || value.cols != head_dim) {
            throw std::invalid_argument("AttentionInstance: V must be n x head_dim");
        }
        if (has_explicit_logits()) {
            if (logits.rows != n || logits.cols != n) {
                throw std::invalid_argument("AttentionInstance: explicit logits must be n x n");
            }
            if (!logits.all_finite()) {
                throw std::invalid_argument("AttentionInstance: non-finite logit");
            }
        } else {
            if (query.rows != n || query.cols != head_dim || key.rows != n ||
                key.cols != head_dim) {
                throw std::invalid_argument("AttentionInstance: Q and K must be n x head_dim");
            }
            if (!query.all_finite() || !key.all_finite()) {
                throw std::invalid_argument("AttentionInstance: non-finite Q/K entry");
            }
        }
        if (!value.all_finite()) {
            throw std::invalid_argument("AttentionInstance: non-finite V entry");
        }
    }
};

/// Q, K, V drawn i.i.d. standard normal from the given seed.
inline AttentionInstance random_instance(const GridShape& shape, std::uint32_t head_dim,
                                         std::uint64_t seed) {
    const std::size_t n = shape.total_tokens();
    AttentionInstance inst;
    inst.shape = shape;
    inst.head_dim = head_dim;
    inst.query = Matrix(n, head_dim);
    inst.key = Matrix(n, head_dim);
    inst.value = Matrix(n, head_dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : inst.query.data) v = normal(rng);
    for (double& v : inst.key.data) v = normal(rng);
    for (double& v : inst.value.data) v = normal(rng);
    return inst;
}

namespace detail {

// Fills `out` (size n) with the logit row for query u: QK^T/sqrt(d), or the
// stored row verbatim for explicit-logit instances.
inline void logit_row(const AttentionInstance& inst, std::uint64_t u, double* out) {
    const std::size_t n = inst.shape.total_tokens();
    if (inst.has_explicit_logits()) {
        const double* src = inst.logits.row(u);
        for (std::size_t v = 0; v < n; ++v) out[v] = src[v];
        return;
    }
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(inst.head_dim));
    const double* q = inst.query.row(u);
    const std::size_t d = inst.head_dim;
    for (std::size_t v = 0; v < n; ++v) {
        const double* k = inst.key.row(v);
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += q[c] * k[c];
        out[v] = dot * inv_sqrt_d;
    }
}

inline double logit_at(const AttentionInstance& inst, std::uint64_t u, std::uint64_t v) {
    if (inst.has_explicit_logits()) return inst.logits(u, v);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(inst.head_dim));
    const double* q = inst.query.row(u);
    const double* k = inst.key.row(v);
    double dot = 0.0;
    for (std::size_t c = 0; c < inst.head_dim; ++c) dot += q[c] * k[c];
    return dot * inv_sqrt_d;
}

}  // namespace detail

/// softmax(QK^T/sqrt(d)) V with per-row max subtraction.
inline Matrix dense_attention(const AttentionInstance& inst) {
    inst.validate();
    const std::size_t n = inst.shape.total_tokens();
    const std::size_t d = inst.head_dim;
    Matrix out(n, d);
    parallel_for(n, [&](std::uint64_t u) {
        thread_local std::vector<double> logits;
        logits.resize(n);
        detail::logit_row(inst, u, logits.data());
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < n; ++v) m = std::max(m, logits[v]);
        double denom = 0.0;
        double* o = out.row(u);
        for (std::size_t v = 0; v < n; ++v) {
            double w = std::exp(logits[v] - m);
            denom += w;
            const double* vr = inst.value.row(v);
            for (std::size_t c = 0; c < d; ++c) o[c] += w * vr[c];
        }
        for (std::size_t c = 0; c < d; ++c) o[c] /= denom;
    });
    return out;
}

/// Debug path: the full softmax row for query u (sums to 1 up to rounding).
inline std::vector<double> dense_probability_row(const AttentionInstance& inst, std::uint64_t u) {
    const std::size_t n = inst.shape.total_tokens();
    std::vector<double> p(n);
    detail::logit_row(inst, u, p.data());
    double m = -std::numeric_limits<double>::infinity();
    for (double v : p) m = std::max(m, v);
    double denom = 0.0;
    for (double& v : p) {
        v = std::exp(v - m);
        denom += v;
    }
    for (double& v : p) v /= denom;
    return p;
}

/// Masked softmax attention: the softmax runs over kept keys only, which is
/// exactly softmax(logits + M) with -inf dropped entries. Cost is
/// proportional to the kept set, not n^2.
inline Matrix masked_attention(const AttentionInstance& inst, const PatternSpec& pattern) {
    inst.validate();
    pattern.validate();
    const GridShape& shape = inst.shape;
    const std::size_t n = shape.total_tokens();
    const std::size_t d = inst.head_dim;
    const std::uint32_t s = shape.tokens_per_frame;
    Matrix out(n, d);
    parallel_for(n, [&](std::uint64_t u) {
        thread_local std::vector<std::uint64_t> cols;
        thread_local std::vector<double> logits;
        cols.clear();
        logits.clear();
        auto i = static_cast<std::uint32_t>(u / s);
        auto k = static_cast<std::uint32_t>(u % s);
        double m = -std::numeric_limits<double>::infinity();
        for_each_kept_interval(pattern, shape, i, k,
                               [&](std::uint32_t j, std::uint32_t lo, std::uint32_t hi) {
                                   std::uint64_t base = static_cast<std::uint64_t>(j) * s;
                                   for (std::uint64_t v = base + lo; v <= base + hi; ++v) {
                                       double lg = detail::logit_at(inst, u, v);
                                       cols.push_back(v);
                                       logits.push_back(lg);
                                       m = std::max(m, lg);
                                   }
                               });
        if (cols.empty()) {
            throw std::runtime_error("masked_attention: query row " + std::to_string(u) +
                                     " keeps no keys");
        }
        double denom = 0.0;
        double* o = out.row(u);
        for (std::size_t idx = 0; idx < cols.size(); ++idx) {
            double w = std::exp(logits[idx] - m);
            denom += w;
            const double* vr = inst.value.row(cols[idx]);
            for (std::size_t c = 0; c < d; ++c) o[c] += w * vr[c];
        }
        for (std::size_t c = 0; c < d; ++c) o[c] /= denom;
    });
    return out;
}

/// Block-granular masked attention: every key inside a kept B x B block
/// participates (the layout over-approximates its token mask).
inline Matrix masked_attention(const AttentionInstance& inst, const BlockLayout& layout) {
    inst.validate();
    if (layout.shape != inst.shape) {
        throw std::invalid_argument("masked_attention: layout shape mismatch");
    }
    const std::size_t n = inst.shape.total_tokens();
    const std::size_t d = inst.head_dim;
    const std::uint64_t B = layout.block_size;
    Matrix out(n, d);
    parallel_for(n, [&](std::uint64_t u) {
        thread_local std::vector<std::uint64_t> cols;
        thread_local std::vector<double> logits;
        cols.clear();
        logits.clear();
        std::uint32_t I = static_cast<std::uint32_t>(u / B);
        double m = -std::numeric_limits<double>::infinity();
        for (std::uint64_t idx = layout.row_ptr[I]; idx < layout.row_ptr[I + 1]; ++idx) {
            std::uint64_t J = layout.col_idx[idx];
            std::uint64_t v_hi = std::min<std::uint64_t>(n, (J + 1) * B);
            for (std::uint64_t v = J * B; v < v_hi; ++v) {
                double lg = detail::logit_at(inst, u, v);
                cols.push_back(v);
                logits.push_back(lg);
                m = std::max(m, lg);
            }
        }
        if (cols.empty()) {
            throw std::runtime_error("masked_attention: query row " + std::to_string(u) +
                                     " keeps no keys");
        }
        double denom = 0.0;
        double* o = out.row(u);
        for (std::size_t idx = 0; idx < cols.size(); ++idx) {
            double w = std::exp(logits[idx] - m);
            denom += w;
            const double* vr = inst.value.row(cols[idx]);
            for (std::size_t c = 0; c < d; ++c) o[c] += w * vr[c];
        }
        for (std::size_t c = 0; c < d; ++c) o[c] /= denom;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Error metrics
// ---------------------------------------------------------------------------

/// ||p_masked - p||_1 computed two independent ways; they agree to ~1e-10
/// (the algebraic identity ||p_masked - p||_1 = 2 Z_out / Z).
struct RowL1 {
    double direct = 0;
    double algebraic = 0;
    double value() const { return direct; }
};

namespace detail {

inline RowL1 l1_from_scores(const std::vector<double>& a, const std::vector<char>& kept) {
    double total = 0.0, kept_sum = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) {
        total += a[v];
        if (kept[v]) kept_sum += a[v];
    }
    if (kept_sum <= 0.0) {
        throw std::runtime_error("row_l1_error: query row keeps no mass");
    }
    RowL1 r;
    r.algebraic = 2.0 * (total - kept_sum) / total;
    double acc = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) {
        double p = a[v] / total;
        double pm = kept[v] ? a[v] / kept_sum : 0.0;
        acc += std::abs(pm - p);
    }
    r.direct = acc;
    return r;
}

inline std::vector<char> kept_flags(const PatternSpec& pattern, const GridShape& shape,
                                    std::uint32_t i, std::uint32_t k) {
    std::vector<char> kept(shape.total_tokens(), 0);
    const std::uint32_t s = shape.tokens_per_frame;
    for_each_kept_interval(pattern, shape, i, k,
                           [&](std::uint32_t j, std::uint32_t lo, std::uint32_t hi) {
                               std::uint64_t base = static_cast<std::uint64_t>(j) * s;
                               for (std::uint64_t v = base + lo; v <= base + hi; ++v) kept[v] = 1;
                           });
    return kept;
}

}  // namespace detail

/// l1 distance between the exact and masked softmax rows of query u.
inline RowL1 row_l1_error(const AttentionInstance& inst, const PatternSpec& pattern,
                          std::uint64_t u) {
    inst.validate();
    pattern.validate();
    const std::size_t n = inst.shape.total_tokens();
    if (u >= n) throw std::out_of_range("row_l1_error: query row out of range");
    std::vector<double> a(n);
    detail::logit_row(inst, u, a.data());
    double m = -std::numeric_limits<double>::infinity();
    for (double v : a) m = std::max(m, v);
    for (double& v : a) v = std::exp(v - m);
    auto i = inst.shape.frame_of(u);
    auto k = inst.shape.pos_of(u);
    return detail::l1_from_scores(a, detail::kept_flags(pattern, inst.shape, i, k));
}

/// Mean and max of row_l1_error over every query row.
struct L1Stats {
    double mean = 0;
    double max = 0;
};

inline L1Stats l1_stats(const AttentionInstance& inst, const PatternSpec& pattern) {
    const std::uint64_t n = inst.shape.total_tokens();
    std::vector<double> rows(n);
    parallel_for(n, [&](std::uint64_t u) { rows[u] = row_l1_error(inst, pattern, u).direct; });
    L1Stats out;
    for (double v : rows) {
        out.mean += v;
        out.max = std::max(out.max, v);
    }
    out.mean /= static_cast<double>(n);
    return out;
}

/// Mean squared difference over all entries.
inline double output_mse(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw std::invalid_argument("output_mse: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t idx = 0; idx < a.data.size(); ++idx) {
        double diff = a.data[idx] - b.data[idx];
        acc += diff * diff;
    }
    return acc / static_cast<double>(a.data.size());
}

// ---------------------------------------------------------------------------
// Synthetic decay rows and instances
// ---------------------------------------------------------------------------

enum class SynthMode {
    worst_case,  // scores equal the decay envelope exactly
    random,      // envelope times independent uniform (0, 1] factors
};

/// One unnormalized attention row obeying the relative-exponential-decay
/// envelope: a[j*s+l] <= c_rel * exp(-alpha |j-i0| - beta |l-k0|) * a0, with
/// the anchor a0 stored as 1. Scores are already exponentiated; no
/// 1/sqrt(d) scaling applies on this path.
struct ScoreRow {
    GridShape shape;
    std::uint32_t query_frame = 0;
    std::uint32_t query_pos = 0;
    std::vector<double> scores;

    double anchor() const {
        return scores[static_cast<std::size_t>(query_frame) * shape.tokens_per_frame + query_pos];
    }
};

inline ScoreRow synth_decay_row(const GridShape& shape, std::uint32_t i0, std::uint32_t k0,
                                double alpha, double beta, double c_rel, SynthMode mode,
                                std::uint64_t seed) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw std::invalid_argument("synth_decay_row: decay rates must be positive");
    }
    if (!(c_rel > 0.0)) throw std::invalid_argument("synth_decay_row: c_rel must be positive");
    if (i0 >= shape.frames || k0 >= shape.tokens_per_frame) {
        throw std::out_of_range("synth_decay_row: anchor out of range");
    }
    ScoreRow row;
    row.shape = shape;
    row.query_frame = i0;
    row.query_pos = k0;
    row.scores.resize(shape.total_tokens());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::uint32_t s = shape.tokens_per_frame;
    for (std::uint32_t j = 0; j < shape.frames; ++j) {
        double dt = j > i0 ? j - i0 : i0 - j;
        for (std::uint32_t l = 0; l < s; ++l) {
            double dx = l > k0 ? l - k0 : k0 - l;
            double env = c_rel * std::exp(-alpha * dt - beta * dx);
            if (mode == SynthMode::random) env *= 1.0 - unit(rng);  // uniform (0, 1]
            row.scores[static_cast<std::size_t>(j) * s + l] = env;
        }
    }
    row.scores[static_cast<std::size_t>(i0) * s + k0] = 1.0;  // the anchor defines itself
    return row;
}

/// Z = sum of all scores, split into the kept and dropped parts.
struct NormalizerSplit {
    double total = 0;
    double kept = 0;
    double dropped = 0;
};

inline NormalizerSplit split_normalizers(const ScoreRow& row, const PatternSpec& pattern) {
    pattern.validate();
    auto kept = detail::kept_flags(pattern, row.shape, row.query_frame, row.query_pos);
    NormalizerSplit out;
    for (std::size_t v = 0; v < row.scores.size(); ++v) {
        out.total += row.scores[v];
        if (kept[v]) out.kept += row.scores[v];
    }
    out.dropped = out.total - out.kept;
    return out;
}

inline RowL1 row_l1_error(const ScoreRow& row, const PatternSpec& pattern) {
    pattern.validate();
    auto kept = detail::kept_flags(pattern, row.shape, row.query_frame, row.query_pos);
    return detail::l1_from_scores(row.scores, kept);
}

/// Largest n for which synthetic instances allocate their explicit n x n
/// logit matrix (128 MB of doubles at the cap).
inline constexpr std::uint64_t kSynthInstanceCap = 4096;

/// Lifts decay rows to a full instance so masked_attention / output_mse can
/// run end to end. Logits are written directly (log of the envelope, plus
/// log-noise in random mode); every post-softmax row then satisfies the
/// decay envelope exactly. V is seeded standard normal.
inline AttentionInstance synth_decay_instance(const GridShape& shape, double alpha, double beta,
                                              double c_rel, std::uint32_t head_dim,
                                              SynthMode mode, std::uint64_t seed) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw std::invalid_argument("synth_decay_instance: decay rates must be positive");
    }
    if (!(c_rel > 0.0)) {
        throw std::invalid_argument("synth_decay_instance: c_rel must be positive");
    }
    const std::uint64_t n = shape.total_tokens();
    if (n > kSynthInstanceCap) {
        throw std::length_error("synth_decay_instance: " + std::to_string(n) +
                                " tokens exceeds explicit-logit cap " +
                                std::to_string(kSynthInstanceCap));
    }
    AttentionInstance inst;
    inst.shape = shape;
    inst.head_dim = head_dim;
    inst.logits = Matrix(n, n);
    inst.value = Matrix(n, head_dim);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double log_c = std::log(c_rel);
    for (std::uint64_t u = 0; u < n; ++u) {
        double i = shape.frame_of(u), k = shape.pos_of(u);
        for (std::uint64_t v = 0; v < n; ++v) {
            double j = shape.frame_of(v), l = shape.pos_of(v);
            double lg = log_c - alpha * std::abs(i - j) - beta * std::abs(k - l);
            if (mode == SynthMode::random) lg += std::log(1.0 - unit(rng));
            inst.logits(u, v) = lg;
        }
        inst.logits(u, u) = 0.0;  // anchor score 1
    }
    for (double& v : inst.value.data) v = normal(rng);
    return inst;
}

}  // namespace radial
