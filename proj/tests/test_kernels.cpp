#include <omp.h>

#include <cstring>
#include <random>

#include "doctest.h"
#include "rawnet/kernels.hpp"
#include "rawnet/signal.hpp"

using namespace rawnet;

namespace {

std::vector<Real> rand_v(std::size_t n, Rng& rng) {
  std::vector<Real> v(n);
  std::normal_distribution<Real> d(0, 1);
  for (auto& x : v) x = d(rng);
  return v;
}

bool bit_equal(const std::vector<Real>& a, const std::vector<Real>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(Real)) == 0;
}

struct Threads {
  int saved = omp_get_max_threads();
  explicit Threads(int n) { omp_set_num_threads(n); }
  ~Threads() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("gemv against a naive reference") {
  Rng rng(1);
  const std::size_t m = 7, n = 13;
  auto W = rand_v(m * n, rng), x = rand_v(n, rng), b = rand_v(m, rng);
  std::vector<Real> y(m);
  kernels::gemv(W, m, n, x, b, y);
  for (std::size_t i = 0; i < m; ++i) {
    long double acc = b[i];
    for (std::size_t j = 0; j < n; ++j) acc += static_cast<long double>(W[i * n + j]) * x[j];
    CHECK(y[i] == doctest::Approx(static_cast<Real>(acc)).epsilon(1e-13));
  }
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  Threads threads(4);
  Rng rng(2);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{3, 5}, {64, 64}, {192, 128}, {256, 257}, {768, 256}}) {
    auto W = rand_v(m * n, rng), x = rand_v(n, rng), b = rand_v(m, rng), dy = rand_v(m, rng);
    std::vector<Real> ys(m), yp(m);
    kernels::serial::gemv(W, m, n, x, b, ys);
    kernels::parallel::gemv(W, m, n, x, b, yp);
    CHECK(bit_equal(ys, yp));

    auto dxs = rand_v(n, rng);
    auto dxp = dxs;
    kernels::serial::gemv_t_acc(W, m, n, dy, dxs);
    kernels::parallel::gemv_t_acc(W, m, n, dy, dxp);
    CHECK(bit_equal(dxs, dxp));

    auto dWs = rand_v(m * n, rng);
    auto dWp = dWs;
    kernels::serial::outer_acc(dy, x, dWs);
    kernels::parallel::outer_acc(dy, x, dWp);
    CHECK(bit_equal(dWs, dWp));
  }
  for (auto d : {kernels::Conv1dDims{1, 16, 9, 2, 3417}, kernels::Conv1dDims{16, 32, 9, 2, 1705},
                 kernels::Conv1dDims{64, 128, 9, 4, 209}, kernels::Conv1dDims{3, 2, 4, 3, 20}}) {
    auto x = rand_v(d.in_channels * d.in_length, rng);
    auto w = rand_v(d.out_channels * d.in_channels * d.kernel, rng);
    auto b = rand_v(d.out_channels, rng);
    std::vector<Real> ys(d.out_channels * d.out_length()), yp(ys.size());
    kernels::serial::conv1d_forward(d, x, w, b, ys);
    kernels::parallel::conv1d_forward(d, x, w, b, yp);
    CHECK(bit_equal(ys, yp));

    auto dy = rand_v(ys.size(), rng);
    std::vector<Real> dxs(x.size()), dws(w.size()), dbs(b.size());
    auto dxp = dxs, dwp = dws, dbp = dbs;
    kernels::serial::conv1d_backward(d, x, w, dy, dxs, dws, dbs);
    kernels::parallel::conv1d_backward(d, x, w, dy, dxp, dwp, dbp);
    CHECK(bit_equal(dxs, dxp));
    CHECK(bit_equal(dws, dwp));
    CHECK(bit_equal(dbs, dbp));
  }
}

TEST_CASE("conv1d kernel against a direct definition") {
  Rng rng(3);
  const kernels::Conv1dDims d{2, 3, 4, 3, 17};
  auto x = rand_v(d.in_channels * d.in_length, rng);
  auto w = rand_v(d.out_channels * d.in_channels * d.kernel, rng);
  auto b = rand_v(d.out_channels, rng);
  std::vector<Real> y(d.out_channels * d.out_length());
  kernels::conv1d_forward(d, x, w, b, y);
  for (std::size_t c = 0; c < d.out_channels; ++c)
    for (std::size_t t = 0; t < d.out_length(); ++t) {
      Real acc = b[c];
      for (std::size_t i = 0; i < d.in_channels; ++i)
        for (std::size_t j = 0; j < d.kernel; ++j)
          acc += w[(c * d.in_channels + i) * d.kernel + j] * x[i * d.in_length + t * d.stride + j];
      CHECK(y[c * d.out_length() + t] == doctest::Approx(acc).epsilon(1e-13));
    }
}

}  // TEST_SUITE
