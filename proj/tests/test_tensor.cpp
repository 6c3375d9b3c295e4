#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <set>
#include <string>

#include "loadfc/error.hpp"
#include "loadfc/kernels.hpp"
#include "loadfc/rng.hpp"
#include "loadfc/tensor.hpp"

using namespace loadfc;

namespace {

Tensor random_tensor(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = rng.uniform(-2.0, 2.0);
  return t;
}

}  // namespace

TEST_CASE("tensor construction checks extents") {
  CHECK_THROWS_AS(Tensor({2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor::matrix({{1, 2}, {3}}), DimensionError);
  const Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK_FALSE(t.has_grad());
}

TEST_CASE("grad buffer has the data length") {
  Tensor t({3, 2});
  auto g = t.ensure_grad();
  CHECK(g.size() == t.size());
  g[4] = 2.0;
  t.zero_grad();
  CHECK(t.grad()[4] == 0.0);
  t.drop_grad();
  CHECK_FALSE(t.has_grad());
}

TEST_CASE("matmul examples") {
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(matmul(Tensor::identity(2), m) == m);
  const Tensor r = matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}));
  CHECK(r.shape() == Shape{1, 1});
  CHECK(r[0] == 11.0);
  Rng rng(3);
  const Tensor z = matmul(Tensor::zeros({3, 4}), random_tensor(rng, {4, 2}));
  CHECK(z == Tensor::zeros({3, 2}));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(e.kind() == "dimension");
  }
}

TEST_CASE("matmul is associative on random 4x4 inputs") {
  Rng rng(11);
  for (int it = 0; it < 200; ++it) {
    const Tensor a = random_tensor(rng, {4, 4}), b = random_tensor(rng, {4, 4}),
                 c = random_tensor(rng, {4, 4});
    const Tensor l = matmul(matmul(a, b), c), r = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < l.size(); ++i) REQUIRE(std::fabs(l[i] - r[i]) <= 1e-9);
  }
}

TEST_CASE("softmax examples") {
  const Tensor a = softmax(Tensor::vector({0, 0}), 0);
  CHECK(a[0] == 0.5);
  CHECK(a[1] == 0.5);
  const Tensor b = softmax(Tensor::vector({1000, 1000}), -1);
  CHECK(b[0] == 0.5);
  CHECK(b[1] == 0.5);
  const Tensor c = softmax(Tensor::vector({0, std::log(3.0)}), 0);
  CHECK(c[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(c[1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK_THROWS_AS(softmax(Tensor::vector({1, 2}), 1), DimensionError);
  CHECK_THROWS_AS(softmax(Tensor::vector({1, 2}), -2), DimensionError);
}

TEST_CASE("softmax slices sum to one and ignore shifts") {
  Rng rng(5);
  for (int it = 0; it < 200; ++it) {
    const Tensor x = random_tensor(rng, {3, 5});
    for (int axis : {0, 1}) {
      const Tensor y = softmax(x, axis);
      Tensor shifted = x;
      for (double& v : shifted.data()) v += 37.25;
      const Tensor ys = softmax(shifted, axis);
      for (std::size_t i = 0; i < y.size(); ++i) {
        REQUIRE(y[i] > 0.0);
        REQUIRE(y[i] <= 1.0);
        REQUIRE(std::fabs(y[i] - ys[i]) <= 1e-12);
      }
      if (axis == 1) {
        for (std::size_t r = 0; r < 3; ++r) {
          double s = 0;
          for (std::size_t c = 0; c < 5; ++c) s += y.at(r, c);
          REQUIRE(std::fabs(s - 1.0) <= 1e-12);
        }
      } else {
        for (std::size_t c = 0; c < 5; ++c) {
          double s = 0;
          for (std::size_t r = 0; r < 3; ++r) s += y.at(r, c);
          REQUIRE(std::fabs(s - 1.0) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("layer_norm examples") {
  const Tensor ones = Tensor::ones({4}), zeros = Tensor::zeros({4});
  const Tensor a = layer_norm(Tensor::matrix({{5, 5, 5, 5}}), ones, zeros, 1e-5);
  for (double v : a.data()) CHECK(v == 0.0);

  const Tensor b = layer_norm(Tensor::matrix({{1, 3}}), Tensor::ones({2}),
                              Tensor::zeros({2}), 1e-300);
  CHECK(b[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(2);
  const Tensor c = layer_norm(random_tensor(rng, {3, 4}), zeros, Tensor({4}, 7.0), 1e-5);
  for (double v : c.data()) CHECK(v == 7.0);

  CHECK_THROWS_AS(layer_norm(Tensor::zeros({2, 3}), ones, zeros, 1e-5), DimensionError);
  CHECK_THROWS_AS(layer_norm(Tensor::zeros({2, 4}), ones, zeros, 0.0), DomainError);
}

TEST_CASE("layer_norm output has zero mean and unit variance") {
  Rng rng(8);
  for (int it = 0; it < 100; ++it) {
    const Tensor x = random_tensor(rng, {2, 16});
    const Tensor y = layer_norm(x, Tensor::ones({16}), Tensor::zeros({16}), 1e-5);
    for (std::size_t r = 0; r < 2; ++r) {
      double mean = 0, var = 0;
      for (std::size_t c = 0; c < 16; ++c) mean += y.at(r, c);
      mean /= 16;
      for (std::size_t c = 0; c < 16; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
      var /= 16;
      REQUIRE(std::fabs(mean) <= 1e-10);
      REQUIRE(std::fabs(var - 1.0) <= 1e-4);
    }
  }
}

TEST_CASE("parallel gemm matches the reference") {
  using kernels::Trans;
  Rng rng(21);
  const auto saved = kernels::parallel_threshold();
  kernels::set_parallel_threshold(0);
  for (Trans ta : {Trans::No, Trans::Yes}) {
    for (Trans tb : {Trans::No, Trans::Yes}) {
      const std::size_t m = 37, n = 23, k = 19;
      std::vector<double> a(m * k), b(k * n);
      for (double& x : a) x = rng.uniform(-1, 1);
      for (double& x : b) x = rng.uniform(-1, 1);
      for (bool acc : {false, true}) {
        std::vector<double> expect(m * n, 0.5);
        kernels::reference::gemm(ta, tb, m, n, k, a, b, expect, acc);
        for (int threads : {1, 2, 3}) {
          std::vector<double> c(m * n, 0.5);
          omp_set_num_threads(threads);
          kernels::gemm(ta, tb, m, n, k, a, b, c, acc);
          for (std::size_t i = 0; i < c.size(); ++i)
            REQUIRE(std::fabs(c[i] - expect[i]) <= 1e-12);
        }
      }
    }
  }
  omp_set_num_threads(1);
  kernels::set_parallel_threshold(saved);
}

TEST_CASE("gemm result does not depend on thread count") {
  using kernels::Trans;
  Rng rng(4);
  const std::size_t m = 64, n = 48, k = 40;
  std::vector<double> a(m * k), b(k * n);
  for (double& x : a) x = rng.uniform(-1, 1);
  for (double& x : b) x = rng.uniform(-1, 1);
  const auto saved = kernels::parallel_threshold();
  kernels::set_parallel_threshold(0);
  std::vector<double> base(m * n);
  omp_set_num_threads(1);
  kernels::gemm(Trans::No, Trans::No, m, n, k, a, b, base);
  for (int threads : {2, 4}) {
    std::vector<double> c(m * n);
    omp_set_num_threads(threads);
    kernels::gemm(Trans::No, Trans::No, m, n, k, a, b, c);
    CHECK(c == base);
  }
  omp_set_num_threads(1);
  kernels::set_parallel_threshold(saved);
}

TEST_CASE("rng is the standard mt19937_64 stream") {
  Rng rng(5489);
  CHECK(rng.next_u64() == 14514284786278117030ULL);
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto v = c.below(7);
    REQUIRE(v < 7);
    seen.insert(v);
    const double u = c.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("seed mixing is order sensitive") {
  CHECK(combine_seed(1, 2) != combine_seed(2, 1));
  CHECK(hash_string("MAC000002") != hash_string("MAC000033"));
  // FNV-1a of the empty string is the offset basis.
  CHECK(hash_string("") == 0xcbf29ce484222325ULL);
  CHECK(hash_string("a") == 0xaf63dc4c8601ec8cULL);
}
