#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include "mplab/distributions.hpp"
#include "mplab/error.hpp"

using namespace mplab;

namespace {

double column_variance(const RowMatrix& x, int j) {
  double s = 0, s2 = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    s += x(i, j);
    s2 += x(i, j) * x(i, j);
  }
  const double n = static_cast<double>(x.rows());
  return s2 / n - (s / n) * (s / n);
}

// E|g|^q = 2^{q/2} Gamma((q+1)/2) / sqrt(pi)
double gaussian_abs_moment(double q) {
  return std::pow(2.0, q / 2) * std::tgamma((q + 1) / 2) / std::sqrt(std::numbers::pi);
}

// E|T|^q for a unit-variance Student t, by quadrature of the density.
double student_abs_moment(double nu, double q) {
  const double scale = std::sqrt((nu - 2) / nu);
  const double log_norm = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5 * std::log(nu * M_PI);
  boost::math::quadrature::exp_sinh<double> integrator;
  // log-space integrand: x^q pdf(x) would be inf * 0 far out in the tail
  const double half = integrator.integrate([&](double x) {
    if (x <= 0.0) return 0.0;
    return std::exp(q * std::log(x) + log_norm - (nu + 1) / 2 * std::log1p(x * x / nu));
  });
  return 2.0 * half * std::pow(scale, q);
}

}  // namespace

TEST_CASE("Rademacher rows with constant noise") {
  const auto dist = DistributionSpec::make(CoordinateFamily::kRademacher, 0, 5);
  const auto noise = NoiseSpec::make(NoiseFamily::kConstant, 3.0, 1.0);
  const auto b = sample_batch(dist, noise, 3, {1, 0, 0});
  CHECK(b.x.rows() == 3);
  CHECK(b.x.cols() == 5);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(b.xi(i) == 1.0);
    CHECK(std::abs(b.eps(i)) == 1.0);
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(std::abs(b.x(i, j)) == 1.0);
  }
}

TEST_CASE("every family has unit coordinate variance") {
  struct Case {
    CoordinateFamily f;
    double tail;
    double tol;
  };
  // Heavier tails converge slowly; the tolerance is about 3 standard errors of
  // the sample variance at N = 2e5.
  for (const auto& c : {Case{CoordinateFamily::kGaussian, 0, 0.02},
                        Case{CoordinateFamily::kRademacher, 0, 1e-4},
                        Case{CoordinateFamily::kStudentT, 12, 0.03},
                        Case{CoordinateFamily::kSymmetricPareto, 6, 0.05},
                        Case{CoordinateFamily::kSymmetricWeibull, 1.5, 0.03}}) {
    const auto dist = DistributionSpec::make(c.f, c.tail, 2);
    const auto b = sample_batch(dist, NoiseSpec(), 200000, {7, 1, 0});
    for (int j = 0; j < 2; ++j) CHECK(std::abs(column_variance(b.x, j) - 1.0) < c.tol);
  }
}

TEST_CASE("Gaussian n = 2, N = 1e5: variance in [0.98, 1.02]") {
  const auto b = sample_batch(DistributionSpec::make(CoordinateFamily::kGaussian, 0, 2), NoiseSpec(),
                              100000, {11, 0, 0});
  for (int j = 0; j < 2; ++j) {
    CHECK(column_variance(b.x, j) >= 0.98);
    CHECK(column_variance(b.x, j) <= 1.02);
  }
}

TEST_CASE("StudentT scale is sqrt((nu - 2) / nu)") {
  CHECK(DistributionSpec::make(CoordinateFamily::kStudentT, 4, 1).scale() ==
        doctest::Approx(std::sqrt(0.5)));
  CHECK(DistributionSpec::make(CoordinateFamily::kSymmetricPareto, 3, 1).scale() ==
        doctest::Approx(std::sqrt(1.0 / 3.0)));
}

TEST_CASE("invalid tail parameters are configuration errors") {
  CHECK_THROWS_AS(DistributionSpec::make(CoordinateFamily::kStudentT, 2.0, 4), ConfigError);
  CHECK_THROWS_AS(DistributionSpec::make(CoordinateFamily::kSymmetricPareto, 1.5, 4), ConfigError);
  CHECK_THROWS_AS(DistributionSpec::make(CoordinateFamily::kSymmetricWeibull, 0.0, 4), ConfigError);
  CHECK_THROWS_AS(DistributionSpec::make(CoordinateFamily::kGaussian, 0.0, 0), ConfigError);
  CHECK_THROWS_AS(NoiseSpec::make(NoiseFamily::kGaussian, 2.0, 1.0), ConfigError);
  CHECK_THROWS_AS(NoiseSpec::make(NoiseFamily::kSymmetricPareto, 3.0, 1.0, 3.0), ConfigError);
  CHECK_THROWS_AS(NoiseSpec::make(NoiseFamily::kStudentT, 3.0, -1.0), ConfigError);
  try {
    DistributionSpec::make(CoordinateFamily::kStudentT, 1.5, 4);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nu > 2") != std::string::npos);
  }
}

TEST_CASE("sample batches are deterministic and policy independent") {
  const auto dist = DistributionSpec::make(CoordinateFamily::kSymmetricWeibull, 0.8, 17);
  const auto noise = NoiseSpec::make(NoiseFamily::kStudentT, 3.0, 2.0);
  const auto a = sample_batch(dist, noise, 333, {5, 2, 9}, BatchRole::kPrimary, ExecPolicy::kSerial);
  const auto b = sample_batch(dist, noise, 333, {5, 2, 9}, BatchRole::kPrimary, ExecPolicy::kParallel);
  const auto c = sample_batch(dist, noise, 333, {5, 2, 10});
  const auto h = sample_batch(dist, noise, 333, {5, 2, 9}, BatchRole::kHoldout);
  CHECK(a.x == b.x);
  CHECK(a.xi == b.xi);
  CHECK(a.eps == b.eps);
  CHECK(a.x != c.x);
  CHECK(a.x != h.x);
  CHECK(a.xi != h.xi);
}

TEST_CASE("isotropy and symmetry for n = 6") {
  const auto dist = DistributionSpec::make(CoordinateFamily::kStudentT, 8, 6);
  const int big_n = 1000000;
  const auto b = sample_batch(dist, NoiseSpec(), big_n, {3, 3, 3});
  const Eigen::MatrixXd x = b.x;
  const Eigen::MatrixXd cov = (x.transpose() * x) / big_n;
  const Eigen::VectorXd mean = x.colwise().mean();
  for (int j = 0; j < 6; ++j) {
    CHECK(std::abs(cov(j, j) - 1.0) < 0.01);
    CHECK(std::abs(mean(j)) < 3.0 / std::sqrt(big_n));
    for (int k = 0; k < j; ++k) {
      // se of the product mean is sqrt(E x^2 y^2 / N) = 1 / sqrt(N)
      CHECK(std::abs(cov(j, k)) < 3.0 / std::sqrt(big_n));
    }
  }
}

TEST_CASE("noise has the requested L_q0 norm") {
  for (auto f : {NoiseFamily::kGaussian, NoiseFamily::kStudentT, NoiseFamily::kSymmetricPareto}) {
    const auto noise = NoiseSpec::make(f, 3.0, 2.0, f == NoiseFamily::kGaussian ? 0.0 : 8.0);
    CHECK(noise.lq(3.0) == doctest::Approx(2.0));
    const auto b = sample_batch(DistributionSpec(), noise, 400000, {2, 0, 0});
    double s = 0;
    for (Eigen::Index i = 0; i < b.xi.size(); ++i) s += std::pow(std::abs(b.xi(i)), 3.0);
    CHECK(std::cbrt(s / b.xi.size()) == doctest::Approx(2.0).epsilon(0.03));
  }
  CHECK(NoiseSpec::make(NoiseFamily::kSymmetricPareto, 3.0, 1.0).tail_param() == 4.0);
  CHECK(std::isinf(NoiseSpec::make(NoiseFamily::kSymmetricPareto, 3.0, 1.0).lq(5.0)));
}

TEST_CASE("empirical_p_norm: degenerate and symmetric sign samples") {
  const std::vector<double> c(10, 2.5);
  const auto e = empirical_p_norm(c, 4);
  CHECK(e.value == doctest::Approx(2.5));
  CHECK(e.q_star == 1);
  std::vector<double> s;
  for (int i = 0; i < 50; ++i) s.push_back(i % 2 ? 1.0 : -1.0);
  const auto r = empirical_p_norm(s, 9);
  CHECK(r.value == doctest::Approx(1.0));
  CHECK(r.q_star == 1);
  CHECK(r.q_cap == 8);  // ceil(2 ln 50) = 8
  CHECK_THROWS_AS(empirical_p_norm(std::vector<double>{}, 3), UsageError);
  CHECK_THROWS_AS(empirical_p_norm(std::vector<double>{1.0}, 3), UsageError);
}

TEST_CASE("empirical_p_norm on 1e6 Gaussian samples matches closed-form moments") {
  const auto b = sample_batch(DistributionSpec::make(CoordinateFamily::kGaussian, 0, 1), NoiseSpec(),
                              1000000, {9, 9, 9});
  std::vector<double> v(b.x.data(), b.x.data() + b.x.size());
  double oracle = 0.0;
  for (int q = 1; q <= 10; ++q) oracle = std::max(oracle, std::pow(gaussian_abs_moment(q), 1.0 / q) / std::sqrt(q));
  CHECK(empirical_p_norm(v, 10).value == doctest::Approx(oracle).epsilon(0.05));
}

TEST_CASE("empirical_p_norm is scale equivariant") {
  Rng rng(4);
  std::vector<double> v(1000);
  for (auto& x : v) x = rng.normal();
  const double base = empirical_p_norm(v, 8).value;
  for (double c : {2.0, -0.5, 8.0}) {
    std::vector<double> w(v);
    for (auto& x : w) x *= c;
    CHECK(empirical_p_norm(w, 8).value == std::abs(c) * base);
  }
  std::vector<double> w(v);
  for (auto& x : w) x *= 3.0;
  CHECK(empirical_p_norm(w, 8).value == doctest::Approx(3.0 * base).epsilon(1e-13));
}

TEST_CASE("small-ball estimates") {
  const auto rad = DistributionSpec::make(CoordinateFamily::kRademacher, 0, 6);
  std::vector<Eigen::VectorXd> forced = {Eigen::VectorXd::Unit(6, 0)};
  CHECK(small_ball_estimate(rad, 0.5, 5, 500, {1, 0, 0}, forced) <= 1.0);
  CHECK(small_ball_estimate(rad, 0.5, 0, 500, {1, 0, 0}, forced) == 1.0);

  const auto gauss = DistributionSpec::make(CoordinateFamily::kGaussian, 0, 4);
  CHECK(small_ball_estimate(gauss, 0.0, 10, 1000, {2, 0, 0}) == 1.0);

  // P(|g| >= q_{0.75}) = 0.5 for the standard normal quartile.
  const double quartile = boost::math::quantile(boost::math::normal(), 0.75);
  const int samples = 20000;
  const double f = small_ball_estimate(gauss, quartile, 1, samples, {3, 0, 0});
  CHECK(std::abs(f - 0.5) < 3.0 * std::sqrt(0.25 / samples));

  CHECK_THROWS_AS(small_ball_estimate(gauss, -1.0, 10, 10, {1, 0, 0}), ConfigError);
}

TEST_CASE("moment growth profile") {
  const auto rad = DistributionSpec::make(CoordinateFamily::kRademacher, 0, 1);
  for (const auto& r : moment_growth_profile(rad, 6, 1000, {1, 0, 0}))
    CHECK(r.ratio == doctest::Approx(1.0 / std::sqrt(r.q)));

  const auto gauss = DistributionSpec::make(CoordinateFamily::kGaussian, 0, 1);
  const auto g = moment_growth_profile(gauss, 4, 400000, {2, 0, 0});
  REQUIRE(g.size() == 4);
  CHECK(g[1].q == 2);
  CHECK(g[1].ratio == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.01));

  // StudentT with nu = 2 ln 1024: every ratio up to q = ln n is below 3, and
  // the sample ratios agree with the quadrature oracle.
  const double nu = 2.0 * std::log(1024.0);
  const auto t = DistributionSpec::make(CoordinateFamily::kStudentT, nu, 1024);
  const int p = static_cast<int>(std::log(1024.0));
  const auto prof = moment_growth_profile(t, p, 1000000, {3, 0, 0});
  for (const auto& r : prof) {
    const double oracle = std::pow(student_abs_moment(nu, r.q), 1.0 / r.q) / std::sqrt(r.q);
    CHECK(oracle <= 3.0);
    CHECK(r.ratio <= 3.0);
    if (r.q <= 4) CHECK(r.ratio == doctest::Approx(oracle).epsilon(0.05));
  }
  CHECK_THROWS_AS(moment_growth_profile(t, 1, 100, {1, 0, 0}), UsageError);
}

TEST_CASE("family names round-trip") {
  for (auto f : {CoordinateFamily::kGaussian, CoordinateFamily::kRademacher, CoordinateFamily::kStudentT,
                 CoordinateFamily::kSymmetricPareto, CoordinateFamily::kSymmetricWeibull})
    CHECK(coordinate_family_from_string(to_string(f)) == f);
  for (auto f : {NoiseFamily::kGaussian, NoiseFamily::kSymmetricPareto, NoiseFamily::kStudentT,
                 NoiseFamily::kConstant})
    CHECK(noise_family_from_string(to_string(f)) == f);
  CHECK_THROWS_AS(coordinate_family_from_string("Cauchy"), ConfigError);
}
