#pragma once

#include <cstddef>
#include <span>

// Dense matrix kernels.
//
// `gemm` splits the rows of C across OpenMP threads. Every element of C is
// accumulated by one thread in a fixed order, so the result is bit-identical
// for any thread count. `reference::gemm` is the naive triple loop kept as the
// oracle for tests and the baseline for bench/kernel_bench.
namespace loadfc::kernels {

enum class Trans { No, Yes };

// C[m×n] = op(A)·op(B) (or += when accumulate). op(A) is m×k, op(B) is k×n.
// A is stored m×k (k×m when transposed), B is stored k×n (n×k when transposed).
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate = false);

// Work (m·n·k) above which gemm forks a parallel region. Zero forces
// parallel execution for every call; useful for testing.
std::size_t parallel_threshold();
void set_parallel_threshold(std::size_t flops);

namespace reference {
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate = false);
}  // namespace reference

}  // namespace loadfc::kernels
