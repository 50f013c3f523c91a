// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <stattn/masks.hpp>
#include <stattn/presets.hpp>

namespace {

void BM_build_spatial_block_mask(benchmark::State& state) {
    const auto spec = stattn::find_preset("hunyuanvideo")->mask_spec();
    const std::size_t s = spec.layout.seq_len();
    for (auto _ : state) {
        auto mask = stattn::build_block_mask(s, 64, stattn::spatial_span_fn(spec));
        benchmark::DoNotOptimize(mask.active_block_count());
    }
}
BENCHMARK(BM_build_spatial_block_mask);

void BM_build_temporal_band(benchmark::State& state) {
    const auto spec = stattn::find_preset("hunyuanvideo")->mask_spec();
    for (auto _ : state) {
        auto band = stattn::temporal_band_block_mask(spec, 64);
        benchmark::DoNotOptimize(band.active_block_count());
    }
}
BENCHMARK(BM_build_temporal_band);

void BM_video_region_counts(benchmark::State& state) {
    const auto spec = stattn::find_preset("hunyuanvideo")->mask_spec();
    for (auto _ : state) {
        auto sp = stattn::spatial_video_counts(spec);
        auto tm = stattn::temporal_video_counts(spec);
        benchmark::DoNotOptimize(sp.active_pairs + tm.active_pairs);
    }
}
BENCHMARK(BM_video_region_counts);

}  // namespace

BENCHMARK_MAIN();
