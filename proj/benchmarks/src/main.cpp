// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include <benchmark/benchmark.h>

BENCHMARK_MAIN();
