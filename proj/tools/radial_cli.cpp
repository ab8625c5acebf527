// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: mask generation and rendering, sparsity/FLOPs
// statistics, verification runs, budget-matched pattern comparison, decay
// fitting, and desk-scale benchmarking. Machine-readable output first:
// single-line JSON objects on stdout, CSV with a header row for tabular
// results. Exit codes: 0 success, 1 verification failure, 2 usage error.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "radial/radial.hpp"

using json = nlohmann::ordered_json;

namespace {

struct ShapeArgs {
    std::uint32_t frames = 0;
    std::uint32_t tokens = 0;
    std::uint32_t block = 128;
    std::string pattern = "radial";
    std::optional<bool> sink;
    std::optional<std::uint32_t> temporal_window;
    std::optional<std::uint32_t> spatial_window;
    std::string preset;
};

void add_shape_options(CLI::App* cmd, ShapeArgs& args, bool want_preset) {
    cmd->add_option("--frames", args.frames, "latent frames f");
    cmd->add_option("--tokens", args.tokens, "tokens per frame s");
    cmd->add_option("--block", args.block, "block size B")->capture_default_str();
    cmd->add_option("--pattern", args.pattern,
                    "mask family: radial|dense|spatial|temporal|sta|power|harmonic")
        ->capture_default_str();
    cmd->add_flag("--sink,!--no-sink",
                  [&args](std::int64_t count) { args.sink = count > 0; },
                  "attend to all frame-0 keys (default: on for radial)");
    cmd->add_option("--temporal-window", args.temporal_window,
                    "frame window (spatial/sta patterns)");
    cmd->add_option("--spatial-window", args.spatial_window,
                    "position window (temporal/sta patterns)");
    if (want_preset) {
        cmd->add_option("--preset", args.preset,
                        "model preset (" + radial::preset_names() + ")");
    }
}

radial::GridShape shape_from(const ShapeArgs& args) {
    if (!args.preset.empty()) {
        auto p = radial::find_preset(args.preset);
        if (!p) throw CLI::ValidationError("--preset", "unknown preset '" + args.preset + "'");
        return p->shape();
    }
    if (args.frames == 0 || args.tokens == 0) {
        throw CLI::ValidationError("--frames/--tokens", "shape required (or use --preset)");
    }
    return {args.frames, args.tokens};
}

std::uint32_t block_from(const ShapeArgs& args) {
    if (!args.preset.empty()) {
        return radial::find_preset(args.preset)->block_size;
    }
    return args.block;
}

radial::PatternSpec pattern_from(const ShapeArgs& args) {
    auto kind = radial::parse_kind(args.pattern);
    if (!kind) throw CLI::ValidationError("--pattern", "unknown pattern '" + args.pattern + "'");
    radial::PatternSpec spec;
    spec.kind = *kind;
    spec.sink = args.sink.value_or(*kind == radial::PatternKind::radial);
    spec.temporal_window = args.temporal_window;
    spec.spatial_window = args.spatial_window;
    if (spec.reads_temporal_window() && !spec.temporal_window) {
        throw CLI::ValidationError("--temporal-window",
                                   "required for pattern '" + args.pattern + "'");
    }
    if (spec.reads_spatial_window() && !spec.spatial_window) {
        throw CLI::ValidationError("--spatial-window",
                                   "required for pattern '" + args.pattern + "'");
    }
    return spec;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

bool g_pretty = false;

void emit(const json& j) { std::cout << (g_pretty ? j.dump(2) : j.dump()) << "\n"; }

json stats_json(const radial::BlockLayout& layout, std::uint32_t head_dim,
                std::uint32_t heads) {
    auto flops = radial::attention_flops(layout, head_dim, heads);
    return json{{"f", layout.shape.frames},
                {"s", layout.shape.tokens_per_frame},
                {"B", layout.block_size},
                {"kept_blocks", layout.kept_blocks()},
                {"sparsity", radial::sparsity(layout)},
                {"dense_flops", flops.dense_flops},
                {"sparse_flops", flops.sparse_flops},
                {"reduction", flops.reduction}};
}

// --- mask -------------------------------------------------------------

struct MaskArgs {
    ShapeArgs shape;
    std::string out;
    std::string pgm;
};

int run_mask(const MaskArgs& args) {
    auto shape = shape_from(args.shape);
    auto pattern = pattern_from(args.shape);
    auto layout = radial::blockify(shape, pattern, block_from(args.shape));
    write_file(args.out, radial::serialize(layout));
    if (!args.pgm.empty()) write_file(args.pgm, radial::render_pgm(layout));
    emit(json{{"kept_blocks", layout.kept_blocks()}, {"sparsity", radial::sparsity(layout)}});
    return 0;
}

// --- stats ------------------------------------------------------------

struct StatsArgs {
    ShapeArgs shape;
    std::string in;
    std::uint32_t head_dim = 64;
    std::uint32_t heads = 1;
};

int run_stats(const StatsArgs& args) {
    radial::BlockLayout layout;
    if (!args.in.empty()) {
        layout = radial::deserialize(read_file(args.in));
    } else {
        layout = radial::blockify(shape_from(args.shape), pattern_from(args.shape),
                                  block_from(args.shape));
    }
    emit(stats_json(layout, args.head_dim, args.heads));
    return 0;
}

// --- verify -----------------------------------------------------------

struct VerifyArgs {
    bool oracle = false;
    bool complexity = false;
    bool error_bound = false;
    std::uint32_t max_frames = 12;
    std::uint32_t max_tokens = 12;
    std::uint32_t frames = 512;
    std::uint32_t tokens = 64;
    std::uint32_t trials = 1000;
    std::uint64_t seed = 0;
    double alpha_min = 0.1, alpha_max = 2.0, beta_min = 0.1, beta_max = 2.0;
    double c_rel = 1.0;
    std::uint32_t eb_frames = 64;
    std::uint32_t eb_tokens = 16;
};

int run_verify(const VerifyArgs& args) {
    if (!args.oracle && !args.complexity && !args.error_bound) {
        throw CLI::ValidationError("verify",
                                   "select at least one of --oracle/--complexity/--error-bound");
    }
    json report;
    bool ok = true;

    if (args.oracle) {
        std::uint64_t shapes = 0, mismatches = 0;
        for (std::uint32_t f = 1; f <= args.max_frames; ++f) {
            for (std::uint32_t s = 1; s <= args.max_tokens; ++s) {
                for (bool sink : {false, true}) {
                    radial::GridShape shape(f, s);
                    auto pattern = radial::PatternSpec::radial(sink);
                    auto mask = radial::materialize_mask(shape, pattern);
                    bool bad = mask.kept_count() != radial::count_kept(shape, pattern);
                    // cross-check the painted bits against the raw predicate
                    std::uint64_t n = shape.total_tokens();
                    for (std::uint64_t u = 0; u < n && !bad; ++u) {
                        for (std::uint64_t v = 0; v < n; ++v) {
                            if (mask.test(u, v) != radial::pattern_keep(pattern, u, v, shape)) {
                                bad = true;
                                break;
                            }
                        }
                    }
                    mismatches += bad;
                    ++shapes;
                }
            }
        }
        report["oracle"] = {{"shapes", shapes}, {"mismatches", mismatches},
                            {"pass", mismatches == 0}};
        ok = ok && mismatches == 0;
    }

    if (args.complexity) {
        auto rep = radial::verify_complexity(radial::GridShape(args.frames, args.tokens));
        bool pass = rep.pass_region && rep.pass_headline;
        report["complexity"] = {{"f", args.frames},
                                {"s", args.tokens},
                                {"actual_zeros", rep.actual_zeros},
                                {"region_total", rep.bounds.total},
                                {"headline_bound", rep.bounds.headline},
                                {"pass_region", rep.pass_region},
                                {"headline_applicable", rep.headline_applicable},
                                {"pass_headline", rep.pass_headline},
                                {"pass", pass}};
        ok = ok && pass;
    }

    if (args.error_bound) {
        radial::ErrorBoundTrialConfig cfg;
        cfg.shape = radial::GridShape(args.eb_frames, args.eb_tokens);
        cfg.alpha_min = args.alpha_min;
        cfg.alpha_max = args.alpha_max;
        cfg.beta_min = args.beta_min;
        cfg.beta_max = args.beta_max;
        cfg.c_rel = args.c_rel;
        cfg.trials = args.trials;
        cfg.seed = args.seed;
        auto rep = radial::verify_error_bound(cfg);
        bool pass = rep.all_within_bound() && rep.max_l1_mismatch <= 1e-10;
        report["error_bound"] = {{"trials", rep.trials},
                                 {"violations_worst", rep.violations_worst},
                                 {"violations_random", rep.violations_random},
                                 {"max_ratio_worst", rep.max_ratio_worst},
                                 {"max_ratio_random", rep.max_ratio_random},
                                 {"max_l1_mismatch", rep.max_l1_mismatch},
                                 {"worst_alpha", rep.worst_alpha},
                                 {"worst_beta", rep.worst_beta},
                                 {"pass", pass}};
        ok = ok && pass;
    }

    report["pass"] = ok;
    emit(report);
    return ok ? 0 : 1;
}

// --- compare ----------------------------------------------------------

struct CompareArgs {
    ShapeArgs shape;
    std::vector<std::string> patterns{"radial", "sta", "temporal", "spatial"};
    double alpha = 0.5, beta = 0.5, c_rel = 1.0;
    std::uint32_t head_dim = 8;
    std::uint64_t seed = 0;
    std::string out;
};

int run_compare(const CompareArgs& args) {
    auto shape = shape_from(args.shape);
    std::uint32_t B = args.shape.block;
    auto radial_spec = radial::PatternSpec::radial(args.shape.sink.value_or(true));
    std::uint64_t reference = radial::blockify(shape, radial_spec, B).kept_blocks();

    auto inst = radial::synth_decay_instance(shape, args.alpha, args.beta, args.c_rel,
                                             args.head_dim, radial::SynthMode::random,
                                             args.seed);
    auto dense_out = radial::dense_attention(inst);

    std::ostringstream csv;
    csv << "pattern,kept_blocks,sparsity,mean_l1,max_l1,output_mse\n";
    for (const auto& name : args.patterns) {
        auto kind = radial::parse_kind(name);
        if (!kind) throw CLI::ValidationError("--patterns", "unknown pattern '" + name + "'");
        radial::PatternSpec spec;
        if (*kind == radial::PatternKind::radial) {
            spec = radial_spec;
        } else if (*kind == radial::PatternKind::spatial ||
                   *kind == radial::PatternKind::temporal || *kind == radial::PatternKind::sta) {
            radial::PatternSpec proto;
            proto.kind = *kind;
            proto.sink = args.shape.sink.value_or(false);
            auto match = radial::budget_match(proto, reference, shape, B);
            spec = match.spec;
            if (match.under_budget) {
                std::cerr << "note: " << name << " cannot reach the radial budget; "
                          << "using its minimal window\n";
            }
        } else {
            spec.kind = *kind;
            spec.sink = args.shape.sink.value_or(false);
            std::cerr << "note: " << name << " has no tunable window; run as-is\n";
        }
        auto layout = radial::blockify(shape, spec, B);
        auto stats = radial::l1_stats(inst, spec);
        double mse = radial::output_mse(radial::masked_attention(inst, spec), dense_out);
        csv << name << "," << layout.kept_blocks() << "," << fmt(radial::sparsity(layout)) << ","
            << fmt(stats.mean) << "," << fmt(stats.max) << "," << fmt(mse) << "\n";
    }
    if (args.out.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream f(args.out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open '" + args.out + "'");
        f << csv.str();
    }
    return 0;
}

// --- fit --------------------------------------------------------------

struct FitArgs {
    std::string in;
};

int run_fit(const FitArgs& args) {
    std::istream* src = &std::cin;
    std::ifstream file;
    if (args.in != "-") {
        file.open(args.in);
        if (!file) throw std::runtime_error("cannot open '" + args.in + "'");
        src = &file;
    }
    std::vector<double> xs, ys;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(*src, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string xs_str, ys_str;
        if (!std::getline(ss, xs_str, ',') || !std::getline(ss, ys_str)) {
            throw std::runtime_error("row " + std::to_string(lineno) + ": expected 'x,y'");
        }
        char* endp = nullptr;
        double x = std::strtod(xs_str.c_str(), &endp);
        if (endp == xs_str.c_str()) {
            if (lineno == 1) continue;  // header row
            throw std::runtime_error("row " + std::to_string(lineno) + ": bad x value");
        }
        double y = std::strtod(ys_str.c_str(), &endp);
        if (endp == ys_str.c_str()) {
            throw std::runtime_error("row " + std::to_string(lineno) + ": bad y value");
        }
        if (!(y > 0.0)) {
            throw std::runtime_error("row " + std::to_string(lineno) +
                                     ": y must be positive for an exponential fit");
        }
        xs.push_back(x);
        ys.push_back(y);
    }
    auto fit = radial::fit_exponential(xs, ys);
    emit(json{{"a", fit.a}, {"b", fit.b}, {"r2", fit.r2}, {"r2_linear", fit.r2_linear}});
    return 0;
}

// --- bench ------------------------------------------------------------

struct BenchArgs {
    ShapeArgs shape;
    std::uint32_t head_dim = 32;
    std::uint64_t seed = 0;
};

int run_bench(const BenchArgs& args) {
    auto shape = shape_from(args.shape);
    if (shape.total_tokens() > radial::kDefaultMaterializeCap) {
        throw std::runtime_error("bench: shape exceeds the dense-reference cap of " +
                                 std::to_string(radial::kDefaultMaterializeCap) + " tokens");
    }
    auto pattern = pattern_from(args.shape);
    auto inst = radial::random_instance(shape, args.head_dim, args.seed);
    using clock = std::chrono::steady_clock;

    auto t0 = clock::now();
    auto dense_out = radial::dense_attention(inst);
    auto t1 = clock::now();
    auto masked_out = radial::masked_attention(inst, pattern);
    auto t2 = clock::now();

    double dense_s = std::chrono::duration<double>(t1 - t0).count();
    double masked_s = std::chrono::duration<double>(t2 - t1).count();
    auto flops = radial::attention_flops(
        radial::blockify(shape, pattern, block_from(args.shape)), args.head_dim, 1);
    // keep the outputs alive so neither computation can be elided
    volatile double sink_value = dense_out.data[0] + masked_out.data[0];
    (void)sink_value;
    emit(json{{"dense_seconds", dense_s},
              {"masked_seconds", masked_s},
              {"speedup", dense_s / masked_s},
              {"flops_reduction", flops.reduction}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial sparse attention masks: construction, statistics, and verification"};
    app.require_subcommand(1);
    app.add_flag("--pretty", g_pretty, "indent JSON output for humans");

    MaskArgs mask_args;
    auto* mask = app.add_subcommand("mask", "build a block-sparse mask and write it as .ramk");
    add_shape_options(mask, mask_args.shape, /*want_preset=*/true);
    mask->add_option("--out", mask_args.out, "output .ramk path")->required();
    mask->add_option("--pgm", mask_args.pgm, "also render the block grid as a P5 image");

    StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "sparsity and FLOPs accounting");
    add_shape_options(stats, stats_args.shape, /*want_preset=*/true);
    stats->add_option("--in", stats_args.in, "read an existing .ramk instead of flags");
    stats->add_option("--head-dim", stats_args.head_dim, "head dimension for FLOPs")
        ->capture_default_str();
    stats->add_option("--heads", stats_args.heads, "number of heads")->capture_default_str();

    VerifyArgs verify_args;
    auto* verify = app.add_subcommand("verify", "run verification checks; exit 0 iff all pass");
    verify->add_flag("--oracle", verify_args.oracle, "exhaustive small-grid mask equivalence");
    verify->add_flag("--complexity", verify_args.complexity, "region/headline count bounds");
    verify->add_flag("--error-bound", verify_args.error_bound, "decay-row l1 bound trials");
    verify->add_option("--max-frames", verify_args.max_frames)->capture_default_str();
    verify->add_option("--max-tokens", verify_args.max_tokens)->capture_default_str();
    verify->add_option("--frames", verify_args.frames)->capture_default_str();
    verify->add_option("--tokens", verify_args.tokens)->capture_default_str();
    verify->add_option("--trials", verify_args.trials)->capture_default_str();
    verify->add_option("--seed", verify_args.seed)->capture_default_str();
    verify->add_option("--alpha-min", verify_args.alpha_min)->capture_default_str();
    verify->add_option("--alpha-max", verify_args.alpha_max)->capture_default_str();
    verify->add_option("--beta-min", verify_args.beta_min)->capture_default_str();
    verify->add_option("--beta-max", verify_args.beta_max)->capture_default_str();
    verify->add_option("--c-rel", verify_args.c_rel)->capture_default_str();
    verify->add_option("--eb-frames", verify_args.eb_frames, "trial-row frames")
        ->capture_default_str();
    verify->add_option("--eb-tokens", verify_args.eb_tokens, "trial-row tokens per frame")
        ->capture_default_str();

    CompareArgs compare_args;
    compare_args.shape.block = 1;  // budgets are matched at token granularity by default
    auto* compare =
        app.add_subcommand("compare", "budget-matched pattern comparison on a decay instance");
    add_shape_options(compare, compare_args.shape, /*want_preset=*/false);
    compare->add_option("--patterns", compare_args.patterns, "patterns to compare")
        ->delimiter(',')
        ->capture_default_str();
    compare->add_option("--alpha", compare_args.alpha)->capture_default_str();
    compare->add_option("--beta", compare_args.beta)->capture_default_str();
    compare->add_option("--c-rel", compare_args.c_rel)->capture_default_str();
    compare->add_option("--head-dim", compare_args.head_dim)->capture_default_str();
    compare->add_option("--seed", compare_args.seed)->capture_default_str();
    compare->add_option("--out", compare_args.out, "write CSV here instead of stdout");

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "fit y = exp(-a x + b) to CSV points");
    fit->add_option("--in", fit_args.in, "CSV of x,y points ('-' for stdin)")->required();

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "time dense vs masked attention");
    add_shape_options(bench, bench_args.shape, /*want_preset=*/false);
    bench->add_option("--head-dim", bench_args.head_dim)->capture_default_str();
    bench->add_option("--seed", bench_args.seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help exits 0; any parse problem is a usage error
    }

    try {
        if (mask->parsed()) return run_mask(mask_args);
        if (stats->parsed()) return run_stats(stats_args);
        if (verify->parsed()) return run_verify(verify_args);
        if (compare->parsed()) return run_compare(compare_args);
        if (fit->parsed()) return run_fit(fit_args);
        if (bench->parsed()) return run_bench(bench_args);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const radial::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
