#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mplab/error.hpp"
#include "mplab/process.hpp"
#include "mplab/stats.hpp"

using namespace mplab;

namespace {

SampleBatch hand_batch(RowMatrix x, Eigen::VectorXd xi, Eigen::VectorXd eps, NoiseSpec noise) {
  SampleBatch b;
  b.x = std::move(x);
  b.xi = std::move(xi);
  b.eps = std::move(eps);
  b.noise = noise;
  b.dist = DistributionSpec::make(CoordinateFamily::kGaussian, 0, static_cast<int>(b.x.cols()));
  return b;
}

}  // namespace

TEST_CASE("single observation: sup_symmetrized = 2") {
  RowMatrix x = RowMatrix::Zero(1, 3);
  x(0, 0) = 1.0;
  Eigen::VectorXd xi(1), eps(1);
  xi << 2.0;
  eps << -1.0;
  const auto b = hand_batch(x, xi, eps, NoiseSpec::make(NoiseFamily::kGaussian, 3, 1));
  const auto s = multiplier_stats(b, IndexSetSpec::l1_ball(3), default_u_grid());
  CHECK(s.sup_symmetrized == 2.0);
  CHECK(s.z(0) == -2.0);
  CHECK(s.z_sorted == std::vector<double>{2.0, 0.0, 0.0});
  CHECK(s.centring == Centring::kZeroBySymmetry);
}

TEST_CASE("constant multiplier, Rademacher X: the definition unwinds") {
  const auto dist = DistributionSpec::make(CoordinateFamily::kRademacher, 0, 12);
  const auto noise = NoiseSpec::make(NoiseFamily::kConstant, 3.0, 1.0);
  const auto b = sample_batch(dist, noise, 40, {1, 2, 3});
  const auto s = multiplier_stats(b, IndexSetSpec::l1_ball(12), default_u_grid());
  double expect = 0.0;
  for (int j = 0; j < 12; ++j) {
    double col = 0.0;
    for (int i = 0; i < 40; ++i) col += b.eps(i) * b.x(i, j);
    expect = std::max(expect, std::abs(col) / std::sqrt(40.0));
  }
  CHECK(s.sup_symmetrized == doctest::Approx(expect).epsilon(1e-14));
  CHECK(s.centring == Centring::kHoldout);
}

TEST_CASE("sup_symmetrized is exactly the support function of Z") {
  std::vector<double> w(30);
  for (int j = 0; j < 30; ++j) w[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(j + 1.0);
  const auto dist = DistributionSpec::make(CoordinateFamily::kStudentT, 5, 30);
  const auto noise = NoiseSpec::make(NoiseFamily::kSymmetricPareto, 3, 1);
  for (const auto& set : {IndexSetSpec::l1_ball(30), IndexSetSpec::sparse_cap(30, 5),
                          IndexSetSpec::l1_cap_l2(30, 1, 0.3), IndexSetSpec::permutation_polytope(w)}) {
    const auto b = sample_batch(dist, noise, 64, {2, 0, 0});
    const auto s = multiplier_stats(b, set, default_u_grid());
    CHECK(s.sup_symmetrized == support(set, s.z));
    // Z_sorted is the non-increasing rearrangement of |Z|
    auto abs_z = decreasing_abs(std::span<const double>(s.z.data(), 30));
    CHECK(s.z_sorted == abs_z);
    CHECK(s.u_grid == default_u_grid());
    CHECK(s.a_u_holds.size() == 3);
  }
}

TEST_CASE("scaling xi scales Z and the suprema") {
  const auto dist = DistributionSpec::make(CoordinateFamily::kGaussian, 0, 20);
  const auto set = IndexSetSpec::l1_cap_l2(20, 1.0, 0.5);
  const auto b = sample_batch(dist, NoiseSpec::make(NoiseFamily::kStudentT, 3, 1), 50, {3, 0, 0});
  const auto base = multiplier_stats(b, set, default_u_grid());
  const WidthEstimate width{2.0, 0.1, 100, std::nullopt, 1.0, 4.0};
  for (double c : {4.0, 0.25, 3.0}) {
    SampleBatch scaled = b;
    scaled.xi *= c;
    scaled.noise = NoiseSpec::make(NoiseFamily::kStudentT, 3, c);
    const auto s = multiplier_stats(scaled, set, default_u_grid());
    if (c == 4.0 || c == 0.25) {
      CHECK(s.z == base.z * c);
      CHECK(s.sup_symmetrized == c * base.sup_symmetrized);
    } else {
      CHECK((s.z - base.z * c).norm() <= 1e-13 * s.z.norm());
      CHECK(s.sup_symmetrized == doctest::Approx(c * base.sup_symmetrized).epsilon(1e-13));
    }
    CHECK(ratio_statistic(s, width, scaled.noise) ==
          doctest::Approx(ratio_statistic(base, width, b.noise)).epsilon(1e-13));
    CHECK(s.a_u_holds == base.a_u_holds);
  }
}

TEST_CASE("A_u event") {
  CHECK(check_a_u(std::vector<double>(10, 0.0), 3.0, 1.0, 2.0));
  // 2 e^{1/3} = 2.79 < 10
  CHECK_FALSE(check_a_u(std::vector<double>{10.0}, 3.0, 1.0, 2.0));
  CHECK(check_a_u(std::vector<double>{2.7}, 3.0, 1.0, 2.0));
  CHECK_FALSE(check_a_u(std::vector<double>{2.8}, 3.0, 1.0, 2.0));
  CHECK_THROWS_AS(check_a_u(std::vector<double>{1.0}, 3.0, 1.0, 1.5), UsageError);
  CHECK_THROWS_AS(check_a_u(std::vector<double>{1.0}, 2.0, 1.0, 2.0), UsageError);
}

TEST_CASE("A_u complement frequency under Pareto noise, u = 4, N = 1e4") {
  const auto noise = NoiseSpec::make(NoiseFamily::kSymmetricPareto, 3.0, 1.0);
  const int trials = 400, big_n = 10000;
  int misses = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(SeedPath{5, 0, static_cast<std::uint64_t>(t)}.key(StreamTag::kNoise));
    std::vector<double> xi(big_n);
    for (auto& x : xi) x = noise.draw(rng);
    misses += check_a_u(xi, 3.0, 1.0, 4.0) ? 0 : 1;
  }
  const double p = static_cast<double>(misses) / trials;
  CHECK(p <= 2.0 / 64.0 + 3.0 * std::sqrt(p * (1 - p) / trials));
}

TEST_CASE("order statistic envelope") {
  const int n = 50;
  std::vector<double> z0(n);
  for (int j = 0; j < n; ++j) z0[static_cast<std::size_t>(j)] = std::sqrt(std::log(std::numbers::e * n / (j + 1)));
  CHECK(order_stat_envelope(z0, n).c_hat == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(order_stat_envelope(std::vector<double>(n, 0.0), n).c_hat == 0.0);
  CHECK_THROWS_AS(order_stat_envelope(std::vector<double>{1.0, 2.0}, 2), UsageError);
  CHECK_THROWS_AS(order_stat_envelope(z0, n + 1), UsageError);

  // iid Gaussian Z, n = 1024, 200 trials: 95th percentile of C_hat below 3.
  std::mt19937_64 gen(12);
  std::normal_distribution<double> nd;
  std::vector<double> c;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> z(1024);
    for (auto& x : z) x = nd(gen);
    c.push_back(order_stat_envelope(decreasing_abs(z), 1024).c_hat);
  }
  CHECK(stats::quantile(c, 0.95) <= 3.0);
}

TEST_CASE("ratio statistic arithmetic and guards") {
  ProcessStats s;
  s.sup_centred = 2.0;
  const auto noise = NoiseSpec::make(NoiseFamily::kGaussian, 3, 1);
  WidthEstimate w;
  w.mean = 4.0;
  CHECK(ratio_statistic(s, w, noise) == 0.5);
  s.sup_centred = 0.0;
  CHECK(ratio_statistic(s, w, noise) == 0.0);
  w.mean = 0.0;
  try {
    ratio_statistic(s, w, noise);
    FAIL("expected an error");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("degenerate index set") != std::string::npos);
  }
}

TEST_CASE("dimension mismatch is a usage error") {
  const auto b = sample_batch(DistributionSpec::make(CoordinateFamily::kGaussian, 0, 5), NoiseSpec(), 4,
                              {1, 0, 0});
  CHECK_THROWS_AS(multiplier_stats(b, IndexSetSpec::l1_ball(6), default_u_grid()), UsageError);
}

TEST_CASE("symmetrization: mean centred sup at most twice the symmetrized one") {
  const auto dist = DistributionSpec::make(CoordinateFamily::kStudentT, 6, 64);
  const auto noise = NoiseSpec::make(NoiseFamily::kStudentT, 3, 1);
  const auto set = IndexSetSpec::l1_ball(64);
  std::vector<double> centred, sym;
  for (int t = 0; t < 200; ++t) {
    const auto b = sample_batch(dist, noise, 64, {8, 0, static_cast<std::uint64_t>(t)});
    const auto s = multiplier_stats(b, set, default_u_grid());
    centred.push_back(s.sup_centred);
    sym.push_back(s.sup_symmetrized);
  }
  const auto c = stats::mean_se(centred), y = stats::mean_se(sym);
  CHECK(c.mean <= 2.0 * y.mean + 3.0 * std::hypot(c.std_error, 2.0 * y.std_error));
}

TEST_CASE("hold-out centring for non-symmetric noise is deterministic") {
  const auto dist = DistributionSpec::make(CoordinateFamily::kGaussian, 0, 16);
  const auto noise = NoiseSpec::make(NoiseFamily::kConstant, 3.0, 1.0);
  const auto b = sample_batch(dist, noise, 100, {9, 0, 0});
  const auto a = multiplier_stats(b, IndexSetSpec::l1_ball(16), default_u_grid(), ExecPolicy::kSerial);
  const auto c = multiplier_stats(b, IndexSetSpec::l1_ball(16), default_u_grid(), ExecPolicy::kParallel);
  CHECK(a.sup_centred == c.sup_centred);
  CHECK(a.centring == Centring::kHoldout);
  // With xi == 1 the hold-out difference is a difference of two independent
  // N(0, I) vectors, so it is not the in-sample value.
  CHECK(a.sup_centred != support(IndexSetSpec::l1_ball(16), weighted_column_sums(b.x, b.xi)));
}

TEST_CASE("Gaussian X, constant multiplier: E sup_symmetrized matches the B_1 width") {
  const int n = 256;
  const auto dist = DistributionSpec::make(CoordinateFamily::kGaussian, 0, n);
  const auto noise = NoiseSpec::make(NoiseFamily::kConstant, 3.0, 1.0);
  const auto set = IndexSetSpec::l1_ball(n);
  std::vector<double> sups;
  for (int t = 0; t < 300; ++t) {
    const auto b = sample_batch(dist, noise, n, {10, 0, static_cast<std::uint64_t>(t)});
    sups.push_back(support(set, weighted_column_sums(b.x, b.eps.cwiseProduct(b.xi))));
  }
  const auto ms = stats::mean_se(sups);
  const auto w = gaussian_mean_width(set, 300, std::nullopt, {10, 1, 0});
  CHECK(std::abs(ms.mean - w.mean) < 3.0 * std::hypot(ms.std_error, w.std_error));
}
