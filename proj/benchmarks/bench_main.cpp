#include <benchmark/benchmark.h>

// the packaged benchmark_main archive is LTO bytecode from another compiler
BENCHMARK_MAIN();
