// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

// stattn command line tool: batch experiments over the sparse spatio-temporal
// attention engine. Subcommands: run | masks | bench | classify. Exit codes:
// 0 success, 2 configuration error, 3 invariant violation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <stattn/attention.hpp>
#include <stattn/pgm.hpp>
#include <stattn/pipeline.hpp>
#include <stattn/presets.hpp>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_invariant = 3;

struct Options {
    std::string preset = "hunyuan-mini";
    std::size_t text_len = 0;
    std::size_t num_frames = 0;
    std::size_t tokens_per_frame = 0;
    std::size_t head_dim = 0;
    std::size_t heads = 0;
    std::size_t steps = 8;
    std::size_t spatial_frames = 0;
    std::size_t temporal_budget = 0;
    std::size_t block_size = 64;
    double sample_fraction = 0.01;
    std::size_t min_samples = 32;
    double warmup = 0.25;
    bool fp8 = false;
    std::uint64_t seed = 0;
    int precision = 32;
    unsigned threads = 1;
    double alpha = 8.0;
    std::string planted = "mixed";
    long long flip_step = -1;
    bool no_compare = false;
    bool no_text_sink = false;
    bool no_first_frame_sink = false;
    std::string out_dir = ".";
    std::string report_path;
    std::string dump_path;
    std::size_t max_kernel_seq = 4096;

    // Which layout/shape flags the user set explicitly (preset overrides the
    // rest).
    bool set_text = false, set_frames = false, set_tokens = false;
    bool set_head_dim = false, set_heads = false, set_cs = false, set_ct = false;
};

void add_common_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--preset", o.preset,
                    "Named parameter preset (cogvideox-v1.5, hunyuanvideo, "
                    "cogvideo-mini, hunyuan-mini)");
    cmd->add_option("--text-len", o.text_len, "Text prefix length")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--num-frames", o.num_frames, "Video frame count");
    cmd->add_option("--tokens-per-frame", o.tokens_per_frame, "Tokens per frame");
    cmd->add_option("--head-dim", o.head_dim, "Attention head dimension");
    cmd->add_option("--heads", o.heads, "Number of attention heads");
    cmd->add_option("--steps", o.steps, "Number of denoising steps");
    cmd->add_option("--spatial-frames", o.spatial_frames,
                    "Attended frame window per query (spatial pattern)");
    cmd->add_option("--temporal-budget", o.temporal_budget,
                    "Attended keys per query across frames (temporal pattern)");
    cmd->add_option("--block-size", o.block_size, "Sparse kernel block size");
    cmd->add_option("--sample-fraction", o.sample_fraction,
                    "Profiled fraction of query rows, (0, 1]");
    cmd->add_option("--min-samples", o.min_samples, "Sample count floor");
    cmd->add_option("--warmup", o.warmup, "Fraction of leading dense steps");
    cmd->add_flag("--fp8", o.fp8, "Quantize q/k tiles to e4m3 in the sparse kernels");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--precision", o.precision, "Float width: 32 or 64")
        ->check(CLI::IsMember({32, 64}));
    cmd->add_option("--threads", o.threads, "Worker threads (never changes results)");
    cmd->add_option("--alpha", o.alpha, "Planted signal strength");
    cmd->add_option("--planted", o.planted, "Planted head types: mixed|spatial|temporal")
        ->check(CLI::IsMember({"mixed", "spatial", "temporal"}));
    cmd->add_option("--flip-step", o.flip_step,
                    "Step at which the last head flips its planted type (-1 = never)");
    cmd->add_flag("--no-compare", o.no_compare, "Skip the dense oracle comparison");
    cmd->add_flag("--no-text-sink", o.no_text_sink, "Drop text columns from the masks");
    cmd->add_flag("--no-first-frame-sink", o.no_first_frame_sink,
                  "Drop first-frame columns from the masks");
    cmd->add_option("--out-dir", o.out_dir, "Output directory")
        ->envname("STATTN_OUT_DIR");
    cmd->add_option("--max-kernel-seq", o.max_kernel_seq,
                    "Longest sequence bench runs kernels on (larger: masks/flops only)");
}

void capture_set_flags(const CLI::App* cmd, Options& o) {
    o.set_text = cmd->count("--text-len") > 0;
    o.set_frames = cmd->count("--num-frames") > 0;
    o.set_tokens = cmd->count("--tokens-per-frame") > 0;
    o.set_head_dim = cmd->count("--head-dim") > 0;
    o.set_heads = cmd->count("--heads") > 0;
    o.set_cs = cmd->count("--spatial-frames") > 0;
    o.set_ct = cmd->count("--temporal-budget") > 0;
}

struct ResolvedConfig {
    stattn::MaskSpec mask;
    std::size_t head_dim = 0;
    std::size_t heads = 0;
};

/// Folds the preset and explicit flags into one validated configuration; all
/// problems are reported together.
ResolvedConfig resolve(const Options& o) {
    std::vector<std::string> errors;
    stattn::EnginePreset preset;
    if (const auto p = stattn::find_preset(o.preset)) {
        preset = *p;
    } else {
        errors.push_back("unknown preset: " + o.preset);
    }
    ResolvedConfig rc;
    rc.mask.layout = preset.layout;
    rc.mask.spatial_frames = preset.spatial_frames;
    rc.mask.temporal_budget = preset.temporal_budget;
    rc.head_dim = preset.head_dim;
    rc.heads = preset.num_heads;
    if (o.set_text) rc.mask.layout.text_len = o.text_len;
    if (o.set_frames) rc.mask.layout.num_frames = o.num_frames;
    if (o.set_tokens) rc.mask.layout.tokens_per_frame = o.tokens_per_frame;
    if (o.set_head_dim) rc.head_dim = o.head_dim;
    if (o.set_heads) rc.heads = o.heads;
    if (o.set_cs) rc.mask.spatial_frames = o.spatial_frames;
    if (o.set_ct) rc.mask.temporal_budget = o.temporal_budget;
    rc.mask.include_text = !o.no_text_sink;
    rc.mask.include_first_frame = !o.no_first_frame_sink;

    try {
        rc.mask.validate();
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    if (rc.head_dim < 1) errors.push_back("head-dim must be >= 1");
    if (rc.heads < 1) errors.push_back("heads must be >= 1");
    if (o.steps < 1) errors.push_back("steps must be >= 1");
    if (!(o.sample_fraction > 0.0) || o.sample_fraction > 1.0) {
        errors.push_back("sample-fraction must be in (0, 1]");
    }
    if (o.warmup < 0.0 || o.warmup > 1.0) errors.push_back("warmup must be in [0, 1]");
    if (o.block_size < 1) errors.push_back("block-size must be >= 1");
    if (o.threads < 1) errors.push_back("threads must be >= 1");
    if (o.alpha < 0.0) errors.push_back("alpha must be >= 0");
    if (!errors.empty()) {
        std::string all = "invalid configuration:";
        for (const auto& e : errors) {
            all += "\n  - " + e;
        }
        throw CLI::ValidationError(all);
    }
    return rc;
}

stattn::WorkloadSpec make_workload_spec(const Options& o, const ResolvedConfig& rc) {
    stattn::WorkloadSpec wl;
    wl.layout = rc.mask.layout;
    wl.head_dim = rc.head_dim;
    wl.num_heads = rc.heads;
    wl.num_steps = o.steps;
    wl.alpha = o.alpha;
    wl.seed = o.seed;
    wl.planted.resize(rc.heads);
    for (std::size_t h = 0; h < rc.heads; ++h) {
        if (o.planted == "spatial") {
            wl.planted[h].type = stattn::HeadClass::spatial;
        } else if (o.planted == "temporal") {
            wl.planted[h].type = stattn::HeadClass::temporal;
        } else {
            wl.planted[h].type =
                h % 2 == 0 ? stattn::HeadClass::spatial : stattn::HeadClass::temporal;
        }
    }
    if (o.flip_step >= 0 && rc.heads > 0) {
        wl.planted[rc.heads - 1].flip_step = static_cast<std::size_t>(o.flip_step);
    }
    return wl;
}

stattn::PipelineConfig make_pipeline_config(const Options& o, const ResolvedConfig& rc) {
    stattn::PipelineConfig cfg;
    cfg.mask = rc.mask;
    cfg.profile.sample_fraction = o.sample_fraction;
    cfg.profile.min_samples = o.min_samples;
    cfg.profile.seed = o.seed;
    cfg.warmup_fraction = o.warmup;
    cfg.block_size = o.block_size;
    cfg.fp8 = o.fp8;
    cfg.compare_outputs = !o.no_compare;
    cfg.threads = o.threads;
    return cfg;
}

template <typename T>
stattn::PipelineReport run_typed(const Options& o, const ResolvedConfig& rc) {
    const stattn::Workload<T> workload(make_workload_spec(o, rc), rc.mask);
    return stattn::run_pipeline(workload, make_pipeline_config(o, rc));
}

void write_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CLI::ValidationError("cannot open for writing: " + path);
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

int cmd_run(const Options& o) {
    const ResolvedConfig rc = resolve(o);
    const stattn::PipelineReport report =
        o.precision == 64 ? run_typed<double>(o, rc) : run_typed<float>(o, rc);

    const std::string path =
        o.report_path.empty() ? join_path(o.out_dir, "report.json") : o.report_path;
    write_file(path, stattn::report_to_json(report));

    const auto& t = report.totals;
    std::printf("report: %s\n", path.c_str());
    std::printf("layout: T=%zu N=%zu L=%zu S=%zu  heads=%zu  steps=%zu  precision=%d-bit\n",
                report.layout.text_len, report.layout.num_frames,
                report.layout.tokens_per_frame, report.layout.seq_len(), report.num_heads,
                report.num_steps, report.precision_bits);
    std::printf("classes: spatial=%zu temporal=%zu dense=%zu\n", t.spatial_heads,
                t.temporal_heads, t.dense_heads);
    if (report.compare_outputs) {
        std::printf("mean psnr vs dense oracle: %.3f dB\n", t.mean_psnr_db);
    }
    std::printf("attention flops reduction: %.4fx (rho_mix %.4f, profiling %.4f of dense)\n",
                t.reduction_ratio,
                t.rho_mix,
                static_cast<double>(t.profiling_flops) / static_cast<double>(t.dense_flops));
    if (t.planted_agreement) {
        std::printf("agreement with planted classes: %.4f\n", *t.planted_agreement);
    }
    return exit_ok;
}

int cmd_masks(const Options& o) {
    const ResolvedConfig rc = resolve(o);
    const stattn::MaskSpec& spec = rc.mask;
    const std::size_t s = spec.layout.seq_len();

    const auto spatial =
        stattn::build_block_mask(s, o.block_size, stattn::spatial_span_fn(spec));
    const auto temporal =
        stattn::build_block_mask(s, o.block_size, stattn::temporal_span_fn(spec));
    const auto frame_major =
        stattn::build_block_mask(s, o.block_size, stattn::temporal_span_fn_frame_major(spec));
    const auto band = stattn::temporal_band_block_mask(spec, o.block_size);

    std::filesystem::create_directories(o.out_dir);

    stattn::write_pgm(join_path(o.out_dir, "spatial_token_major.pgm"), spatial);
    stattn::write_pgm(join_path(o.out_dir, "temporal_token_major.pgm"), temporal);
    stattn::write_pgm(join_path(o.out_dir, "temporal_frame_major.pgm"), frame_major);
    stattn::write_pgm(join_path(o.out_dir, "temporal_frame_major_band.pgm"), band);

    const auto full_check = stattn::verify_frame_major_band(frame_major, spec);
    const auto band_check = stattn::verify_frame_major_band(band, spec, false);
    if (!full_check.ok || !band_check.ok) {
        std::fprintf(stderr, "band check failed: %s%s\n", full_check.detail.c_str(),
                     band_check.detail.c_str());
        throw stattn::invariant_error("frame-major mask is not banded");
    }

    // Element-level popcount is conserved by the conjugation.
    const auto tok_fn = stattn::temporal_span_fn(spec);
    const auto fm_fn = stattn::temporal_span_fn_frame_major(spec);
    std::uint64_t tok_count = 0, fm_count = 0;
    for (std::size_t q = 0; q < s; ++q) {
        tok_count += stattn::spans_active_count(tok_fn(q));
        fm_count += stattn::spans_active_count(fm_fn(q));
    }
    if (tok_count != fm_count) {
        throw stattn::invariant_error("conjugation changed the mask popcount");
    }

    std::printf("wrote 4 pgm images to %s (grid %zux%zu, block %zu)\n", o.out_dir.c_str(),
                spatial.grid_dim(), spatial.grid_dim(), o.block_size);
    std::printf("block density: spatial %.4f  temporal %.4f  frame-major %.4f  band %.4f\n",
                spatial.block_density(), temporal.block_density(),
                frame_major.block_density(), band.block_density());
    std::printf("element popcount (temporal, token-major == frame-major): %llu\n",
                static_cast<unsigned long long>(tok_count));
    std::printf("band check: ok\n");
    return exit_ok;
}

int cmd_bench(const Options& o) {
    const ResolvedConfig rc = resolve(o);
    const stattn::MaskSpec& spec = rc.mask;
    const std::size_t s = spec.layout.seq_len();
    const std::size_t d = rc.head_dim;

    const auto sp_counts = stattn::spatial_video_counts(spec);
    const auto tm_counts = stattn::temporal_video_counts(spec);
    const double cs_over_n = static_cast<double>(spec.spatial_frames) /
                             static_cast<double>(spec.layout.num_frames);
    const double ct_over_l = static_cast<double>(spec.temporal_budget) /
                             static_cast<double>(spec.layout.tokens_per_frame);
    const double slash_agg =
        static_cast<double>(tm_counts.interior_row_keys) /
        static_cast<double>(spec.layout.tokens_per_frame);

    std::printf("layout: T=%zu N=%zu L=%zu S=%zu  head_dim=%zu  block=%zu\n",
                spec.layout.text_len, spec.layout.num_frames, spec.layout.tokens_per_frame,
                s, d, o.block_size);
    std::printf("video-region density (sink-free, counted):\n");
    std::printf("  spatial: %.6f  (target spatial_frames/num_frames = %.6f)\n",
                sp_counts.density(), cs_over_n);
    std::printf("  temporal slash, per-frame width: %zu of %zu offsets (%.6f)\n",
                static_cast<std::size_t>(2 * spec.slash_half_width() + 1),
                spec.layout.tokens_per_frame,
                static_cast<double>(2 * spec.slash_half_width() + 1) /
                    static_cast<double>(spec.layout.tokens_per_frame));
    std::printf("  temporal aggregate keys/frame-len: %.6f  (target budget/tokens = %.6f)\n",
                slash_agg, ct_over_l);
    const std::uint64_t dense_cf = stattn::flops_closed_form(spec, d, stattn::HeadClass::dense);
    const std::uint64_t sp_cf = stattn::flops_closed_form(spec, d, stattn::HeadClass::spatial);
    const std::uint64_t tm_cf = stattn::flops_closed_form(spec, d, stattn::HeadClass::temporal);
    std::printf("closed-form flops/head: dense %llu  spatial %llu (%.4f)  temporal %llu (%.4f)\n",
                static_cast<unsigned long long>(dense_cf),
                static_cast<unsigned long long>(sp_cf),
                static_cast<double>(sp_cf) / static_cast<double>(dense_cf),
                static_cast<unsigned long long>(tm_cf),
                static_cast<double>(tm_cf) / static_cast<double>(dense_cf));

    const auto spatial_block =
        stattn::build_block_mask(s, o.block_size, stattn::spatial_span_fn(spec));
    const auto band = stattn::temporal_band_block_mask(spec, o.block_size);
    const auto perm = stattn::frame_major_permutation(spec.layout);
    const std::uint64_t sp_pairs = spatial_block.pair_count();
    const std::uint64_t tm_pairs = stattn::temporal_frame_major_pair_count(spec, perm, band);
    std::printf("block-expanded pair fraction: spatial %.4f  temporal(band+sinks) %.4f\n",
                static_cast<double>(sp_pairs) / (static_cast<double>(s) * s),
                static_cast<double>(tm_pairs) / (static_cast<double>(s) * s));

    if (s > o.max_kernel_seq) {
        std::printf("sequence length %zu > %zu: masks and flops only, kernels skipped\n", s,
                    o.max_kernel_seq);
        return exit_ok;
    }

    const auto q = stattn::gaussian_matrix<float>(s, d, o.seed);
    const auto k = stattn::gaussian_matrix<float>(s, d, o.seed + 1);
    const auto v = stattn::gaussian_matrix<float>(s, d, o.seed + 2);
    using clock = std::chrono::steady_clock;

    const auto t0 = clock::now();
    const auto dense = stattn::attention_dense(q, k, v);
    const auto t1 = clock::now();
    const auto sparse = stattn::attention_block_sparse(q, k, v, spatial_block);
    const auto t2 = clock::now();
    const auto temporal = stattn::attention_temporal_frame_major(q, k, v, spec, perm, band);
    const auto t3 = clock::now();

    const auto ms = [](auto a, auto b) {
        return std::chrono::duration<double, std::milli>(b - a).count();
    };
    std::printf("counted flops: dense %llu  spatial %llu (%.4f of dense)  temporal %llu (%.4f)\n",
                static_cast<unsigned long long>(dense.flops),
                static_cast<unsigned long long>(sparse.flops),
                static_cast<double>(sparse.flops) / static_cast<double>(dense.flops),
                static_cast<unsigned long long>(temporal.flops),
                static_cast<double>(temporal.flops) / static_cast<double>(dense.flops));
    std::printf("wall clock (informational): dense %.2f ms  spatial %.2f ms  temporal %.2f ms\n",
                ms(t0, t1), ms(t1, t2), ms(t2, t3));
    return exit_ok;
}

int cmd_classify(const Options& o) {
    const ResolvedConfig rc = resolve(o);
    Options quiet = o;
    quiet.no_compare = true;
    const stattn::PipelineReport report =
        o.precision == 64 ? run_typed<double>(quiet, rc) : run_typed<float>(quiet, rc);
    const std::string path =
        o.dump_path.empty() ? join_path(o.out_dir, "classification.json") : o.dump_path;
    write_file(path, stattn::classification_to_json(report));
    std::printf("classification dump: %s\n", path.c_str());
    std::printf("classes: spatial=%zu temporal=%zu dense=%zu\n", report.totals.spatial_heads,
                report.totals.temporal_heads, report.totals.dense_heads);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse spatio-temporal attention engine"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI-style config file");

    Options o;
    CLI::App* run = app.add_subcommand("run", "Run the profiled sparse pipeline");
    add_common_options(run, o);
    run->add_option("--report", o.report_path, "Report JSON path");
    CLI::App* masks = app.add_subcommand("masks", "Write block-mask images");
    add_common_options(masks, o);
    CLI::App* bench = app.add_subcommand("bench", "Density and flops accounting");
    add_common_options(bench, o);
    CLI::App* classify = app.add_subcommand("classify", "Dump per-step head classes");
    add_common_options(classify, o);
    classify->add_option("--dump", o.dump_path, "Classification JSON path");

    try {
        app.parse(argc, argv);
        CLI::App* active = app.get_subcommands().front();
        capture_set_flags(active, o);
        if (active == run) return cmd_run(o);
        if (active == masks) return cmd_masks(o);
        if (active == bench) return cmd_bench(o);
        return cmd_classify(o);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return exit_config;
    } catch (const stattn::invariant_error& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return exit_invariant;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_invariant;
    }
}
