// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <stattn/fp8.hpp>
#include <stattn/matrix.hpp>

namespace {

void BM_quantize_dequantize_rows(benchmark::State& state) {
    const auto m = stattn::gaussian_matrix<float>(4096, 64, 11);
    for (auto _ : state) {
        auto out = stattn::quantize_dequantize_rows_e4m3(m, 64);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.data.size()));
}
BENCHMARK(BM_quantize_dequantize_rows);

}  // namespace

BENCHMARK_MAIN();
