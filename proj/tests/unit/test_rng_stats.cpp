#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "mplab/parallel.hpp"
#include "mplab/rng.hpp"
#include "mplab/stats.hpp"

using namespace mplab;

TEST_CASE("splitmix64 matches the published reference outputs") {
  // Reference stream for seed 1234567 from the original splitmix64.c.
  std::uint64_t state = 1234567;
  Rng rng(state);
  CHECK(rng.next() == 6457827717110365317ULL);
  CHECK(rng.next() == 3203168211198807973ULL);
  CHECK(rng.next() == 9817491932198370423ULL);
}

TEST_CASE("seed path keys follow the documented chain") {
  const SeedPath p{42, 3, 7};
  std::uint64_t h = splitmix64(42);
  h = splitmix64(h ^ 3);
  h = splitmix64(h ^ 7);
  CHECK(p.key(StreamTag::kNoise) == splitmix64(h ^ 2));
  CHECK(substream_key(5, 9) == splitmix64(splitmix64(5) ^ 9));
  CHECK(p.key(StreamTag::kNoise) != p.key(StreamTag::kSigns));
  CHECK(SeedPath{42, 3, 8}.key(StreamTag::kNoise) != p.key(StreamTag::kNoise));
}

TEST_CASE("uniform and normal variates have the right moments") {
  Rng rng(99);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sn4 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double g = rng.normal();
    sn += g;
    sn2 += g * g;
    sn4 += g * g * g * g;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 4.0 / std::sqrt(n));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sn4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("gamma variates have mean and variance equal to the shape") {
  for (double shape : {0.5, 1.0, 3.5}) {
    Rng rng(17);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.gamma(shape);
      s += x;
      s2 += x * x;
    }
    const double mean = s / n;
    CHECK(mean == doctest::Approx(shape).epsilon(0.02));
    CHECK(s2 / n - mean * mean == doctest::Approx(shape).epsilon(0.05));
  }
}

TEST_CASE("below and shuffle stay in range and permute") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[static_cast<std::size_t>(rng.below(7))];
  for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.05));
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("for_each_block covers every index once with fixed boundaries") {
  std::vector<int> hits(1000, 0);
  std::vector<std::size_t> starts(16, 0);
  for_each_block(1000, 64, ExecPolicy::kParallel, [&](std::size_t b, std::size_t begin, std::size_t end) {
    starts[b] = begin;
    for (std::size_t i = begin; i < end; ++i) ++hits[i];
  });
  for (int h : hits) CHECK(h == 1);
  for (std::size_t b = 0; b < 16; ++b) CHECK(starts[b] == 64 * b);
}

TEST_CASE("pairwise sum is exact on integers and close to compensated sums") {
  std::vector<double> v(10001);
  std::iota(v.begin(), v.end(), 0.0);
  CHECK(stats::pairwise_sum(v) == 50005000.0);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  std::vector<double> w(100000);
  for (auto& x : w) x = nd(gen);
  long double ref = 0;
  for (double x : w) ref += x;
  CHECK(std::abs(stats::pairwise_sum(w) - static_cast<double>(ref)) < 1e-10);
}

TEST_CASE("mean, standard error and quantiles") {
  const std::vector<double> v = {1, 2, 3, 4};
  const auto ms = stats::mean_se(v);
  CHECK(ms.mean == 2.5);
  CHECK(ms.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(ms.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(stats::mean_se(std::vector<double>{7.0}).std_error == 0.0);
  CHECK(stats::median(v) == 2.5);
  // Type-7 quantile: h = (n - 1) p.
  CHECK(stats::quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(stats::quantile(v, 1.0) == 4.0);
  CHECK(stats::quantile(v, 0.0) == 1.0);
}

TEST_CASE("two-sample KS statistic and critical value") {
  CHECK(stats::ks_statistic({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(stats::ks_statistic({1, 2}, {3, 4}) == 1.0);
  CHECK(stats::ks_statistic({1, 3}, {2, 4}) == doctest::Approx(0.5));
  // c(0.01) = 1.6276 for the asymptotic Kolmogorov distribution.
  CHECK(stats::ks_critical_value(1000, 1000, 0.01) ==
        doctest::Approx(1.6276 * std::sqrt(2.0 / 1000)).epsilon(1e-3));
}

TEST_CASE("least squares line on a three-point table") {
  // Hand computation: x = (0, 1, 2), y = (1, 2, 4). xbar = 1, ybar = 7/3,
  // Sxx = 2, Sxy = 3, slope = 1.5, intercept = 7/3 - 1.5 = 5/6.
  // Residuals (1/6, -1/3, 1/6), RSS = 1/6, sigma^2 = RSS / 1, se = sqrt(1/12).
  const std::vector<double> x = {0, 1, 2}, y = {1, 2, 4};
  const auto fit = stats::least_squares_line(x, y);
  CHECK(fit.slope == doctest::Approx(1.5));
  CHECK(fit.intercept == doctest::Approx(5.0 / 6.0));
  CHECK(fit.slope_se == doctest::Approx(std::sqrt(1.0 / 12.0)));
  // t_{0.975, 1} = 12.7062
  CHECK(fit.ci_hi - fit.slope == doctest::Approx(12.7062 * std::sqrt(1.0 / 12.0)).epsilon(1e-4));
  CHECK(fit.slope - fit.ci_lo == doctest::Approx(fit.ci_hi - fit.slope));
}
