// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <stattn/attention.hpp>
#include <stattn/presets.hpp>

namespace {

stattn::MaskSpec mini_spec() {
    return stattn::find_preset("cogvideo-mini")->mask_spec();
}

template <typename T>
void BM_attention_dense(benchmark::State& state) {
    const auto spec = mini_spec();
    const std::size_t s = spec.layout.seq_len();
    const std::size_t d = static_cast<std::size_t>(state.range(0));
    const auto q = stattn::gaussian_matrix<T>(s, d, 1);
    const auto k = stattn::gaussian_matrix<T>(s, d, 2);
    const auto v = stattn::gaussian_matrix<T>(s, d, 3);
    std::uint64_t flops = 0;
    for (auto _ : state) {
        auto res = stattn::attention_dense(q, k, v);
        flops = res.flops;
        benchmark::DoNotOptimize(res.out.data.data());
    }
    state.counters["flops"] = static_cast<double>(flops);
    state.counters["flops/s"] = benchmark::Counter(
        static_cast<double>(flops) * static_cast<double>(state.iterations()),
        benchmark::Counter::kIsRate);
}
BENCHMARK_TEMPLATE(BM_attention_dense, float)->Arg(64);
BENCHMARK_TEMPLATE(BM_attention_dense, double)->Arg(64);

template <typename T>
void BM_attention_block_sparse_spatial(benchmark::State& state) {
    const auto spec = mini_spec();
    const std::size_t s = spec.layout.seq_len();
    const std::size_t d = 64;
    const auto mask =
        stattn::build_block_mask(s, static_cast<std::size_t>(state.range(0)),
                                 stattn::spatial_span_fn(spec));
    const auto q = stattn::gaussian_matrix<T>(s, d, 1);
    const auto k = stattn::gaussian_matrix<T>(s, d, 2);
    const auto v = stattn::gaussian_matrix<T>(s, d, 3);
    std::uint64_t flops = 0;
    for (auto _ : state) {
        auto res = stattn::attention_block_sparse(q, k, v, mask);
        flops = res.flops;
        benchmark::DoNotOptimize(res.out.data.data());
    }
    state.counters["flops"] = static_cast<double>(flops);
    state.counters["pair_fraction"] = mask.covered_pair_fraction();
}
BENCHMARK_TEMPLATE(BM_attention_block_sparse_spatial, float)->Arg(32)->Arg(64)->Arg(128);

template <typename T>
void BM_attention_temporal_frame_major(benchmark::State& state) {
    const auto spec = mini_spec();
    const std::size_t s = spec.layout.seq_len();
    const std::size_t d = 64;
    const std::size_t b = static_cast<std::size_t>(state.range(0));
    const auto perm = stattn::frame_major_permutation(spec.layout);
    const auto band = stattn::temporal_band_block_mask(spec, b);
    const auto q = stattn::gaussian_matrix<T>(s, d, 1);
    const auto k = stattn::gaussian_matrix<T>(s, d, 2);
    const auto v = stattn::gaussian_matrix<T>(s, d, 3);
    for (auto _ : state) {
        auto res = stattn::attention_temporal_frame_major(q, k, v, spec, perm, band);
        benchmark::DoNotOptimize(res.out.data.data());
    }
}
BENCHMARK_TEMPLATE(BM_attention_temporal_frame_major, float)->Arg(32)->Arg(64);

void BM_qk_norm(benchmark::State& state) {
    const auto x = stattn::gaussian_matrix<float>(4096, 64, 5);
    for (auto _ : state) {
        auto out = stattn::qk_norm(x);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_qk_norm);

void BM_rope(benchmark::State& state) {
    const auto x = stattn::gaussian_matrix<float>(4096, 64, 7);
    std::vector<double> pos(4096);
    for (std::size_t i = 0; i < pos.size(); ++i) {
        pos[i] = static_cast<double>(i);
    }
    for (auto _ : state) {
        auto out = stattn::rope(x, pos);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_rope);

}  // namespace

BENCHMARK_MAIN();
