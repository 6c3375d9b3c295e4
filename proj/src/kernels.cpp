#include "loadfc/kernels.hpp"

#include <atomic>
#include <string>

#include <omp.h>

#include "loadfc/error.hpp"

namespace loadfc::kernels {

namespace {

std::atomic<std::size_t> g_threshold{1u << 18};

void check_extents(Trans ta, Trans tb, std::size_t m, std::size_t n,
                   std::size_t k, std::size_t a, std::size_t b,
                   std::size_t c) {
  (void)ta;
  (void)tb;
  if (a < m * k || b < k * n || c < m * n) {
    throw DimensionError("gemm: buffers too small for " + std::to_string(m) +
                         "x" + std::to_string(k) + " * " + std::to_string(k) +
                         "x" + std::to_string(n));
  }
}

}  // namespace

std::size_t parallel_threshold() { return g_threshold.load(); }
void set_parallel_threshold(std::size_t flops) { g_threshold.store(flops); }

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
  check_extents(ta, tb, m, n, k, a.size(), b.size(), c.size());
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  const bool fork = m > 1 && !omp_in_parallel() &&
                    m * n * k >= g_threshold.load(std::memory_order_relaxed);
  const auto rows = static_cast<std::ptrdiff_t>(m);

  if (tb == Trans::No) {
    // i-p-j order: the inner loop streams a row of B into a row of C.
#pragma omp parallel for schedule(static) if (fork)
    for (std::ptrdiff_t si = 0; si < rows; ++si) {
      const auto i = static_cast<std::size_t>(si);
      double* ci = C + i * n;
      if (!accumulate)
        for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = ta == Trans::No ? A[i * k + p] : A[p * m + i];
        if (aip == 0.0) continue;
        const double* bp = B + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
      }
    }
    return;
  }

  // B transposed: each C element is a dot product of two contiguous rows.
#pragma omp parallel for schedule(static) if (fork)
  for (std::ptrdiff_t si = 0; si < rows; ++si) {
    const auto i = static_cast<std::size_t>(si);
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = B + j * k;
      double acc = 0.0;
      if (ta == Trans::No) {
        const double* ai = A + i * k;
        for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      } else {
        for (std::size_t p = 0; p < k; ++p) acc += A[p * m + i] * bj[p];
      }
      C[i * n + j] = accumulate ? C[i * n + j] + acc : acc;
    }
  }
}

namespace reference {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
  check_extents(ta, tb, m, n, k, a.size(), b.size(), c.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double x = ta == Trans::No ? a[i * k + p] : a[p * m + i];
        const double y = tb == Trans::No ? b[p * n + j] : b[j * k + p];
        acc += x * y;
      }
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
  }
}

}  // namespace reference

}  // namespace loadfc::kernels
