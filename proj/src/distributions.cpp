#include "mplab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mplab/error.hpp"
#include "mplab/stats.hpp"

namespace mplab {

namespace {

// ||g||_{L_q} for a standard Gaussian.
double gaussian_lq(double q) {
  const double log_moment =
      0.5 * q * std::log(2.0) + std::lgamma(0.5 * (q + 1.0)) - 0.5 * std::log(std::numbers::pi);
  return std::exp(log_moment / q);
}

// ||T||_{L_q} for an unscaled Student t with nu > q degrees of freedom.
double student_t_lq(double nu, double q) {
  if (q >= nu) return std::numeric_limits<double>::infinity();
  const double log_moment = 0.5 * q * std::log(nu) + std::lgamma(0.5 * (q + 1.0)) +
                            std::lgamma(0.5 * (nu - q)) - 0.5 * std::log(std::numbers::pi) -
                            std::lgamma(0.5 * nu);
  return std::exp(log_moment / q);
}

// ||P||_{L_q} for a Pareto magnitude with x_m = 1 and exponent alpha > q.
double pareto_lq(double alpha, double q) {
  if (q >= alpha) return std::numeric_limits<double>::infinity();
  return std::pow(alpha / (alpha - q), 1.0 / q);
}

double student_t_draw(Rng& rng, double nu) {
  const double z = rng.normal();
  const double chi2 = 2.0 * rng.gamma(0.5 * nu);
  return z / std::sqrt(chi2 / nu);
}

double pareto_magnitude(Rng& rng, double alpha) { return std::pow(rng.uniform_open0(), -1.0 / alpha); }

// Per-q ratios (mean |x|^q)^{1/q} / sqrt(q), q = 1..cap, normalised by max |x|.
std::vector<double> moment_ratios(std::span<const double> samples, int cap) {
  double top = 0.0;
  for (double s : samples) top = std::max(top, std::abs(s));
  std::vector<double> ratios(static_cast<std::size_t>(cap), 0.0);
  if (top == 0.0) return ratios;
  std::vector<double> base(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) base[i] = std::abs(samples[i]) / top;
  std::vector<double> power = base;
  const double m = static_cast<double>(samples.size());
  for (int q = 1; q <= cap; ++q) {
    if (q > 1)
      for (std::size_t i = 0; i < power.size(); ++i) power[i] *= base[i];
    const double mean = stats::pairwise_sum(power) / m;
    ratios[static_cast<std::size_t>(q - 1)] = top * std::pow(mean, 1.0 / q) / std::sqrt(double(q));
  }
  return ratios;
}

}  // namespace

DistributionSpec DistributionSpec::make(CoordinateFamily family, double tail_param, int dim) {
  if (dim < 1) throw ConfigError("distribution dim must be >= 1, got " + std::to_string(dim));
  DistributionSpec spec;
  spec.family_ = family;
  spec.tail_param_ = tail_param;
  spec.dim_ = dim;
  switch (family) {
    case CoordinateFamily::kGaussian:
    case CoordinateFamily::kRademacher:
      spec.tail_param_ = 0.0;
      spec.scale_ = 1.0;
      break;
    case CoordinateFamily::kStudentT:
      if (!(tail_param > 2.0))
        throw ConfigError("StudentT requires degrees of freedom nu > 2, got " +
                          std::to_string(tail_param));
      spec.scale_ = std::sqrt((tail_param - 2.0) / tail_param);
      break;
    case CoordinateFamily::kSymmetricPareto:
      if (!(tail_param > 2.0))
        throw ConfigError("SymmetricPareto requires tail exponent > 2, got " +
                          std::to_string(tail_param));
      spec.scale_ = std::sqrt((tail_param - 2.0) / tail_param);
      break;
    case CoordinateFamily::kSymmetricWeibull:
      if (!(tail_param > 0.0))
        throw ConfigError("SymmetricWeibull requires shape > 0, got " + std::to_string(tail_param));
      spec.scale_ = 1.0 / std::sqrt(std::tgamma(1.0 + 2.0 / tail_param));
      break;
  }
  return spec;
}

double DistributionSpec::draw(Rng& rng) const noexcept {
  switch (family_) {
    case CoordinateFamily::kGaussian:
      return rng.normal();
    case CoordinateFamily::kRademacher:
      return rng.sign();
    case CoordinateFamily::kStudentT:
      return scale_ * student_t_draw(rng, tail_param_);
    case CoordinateFamily::kSymmetricPareto: {
      const double s = rng.sign();
      return s * scale_ * pareto_magnitude(rng, tail_param_);
    }
    case CoordinateFamily::kSymmetricWeibull: {
      const double s = rng.sign();
      return s * scale_ * std::pow(-std::log(rng.uniform_open0()), 1.0 / tail_param_);
    }
  }
  return 0.0;
}

NoiseSpec NoiseSpec::make(NoiseFamily family, double q0, double lq_norm, double tail_param) {
  if (!(q0 > 2.0)) throw ConfigError("noise q0 must be > 2, got " + std::to_string(q0));
  if (!(lq_norm >= 0.0) || !std::isfinite(lq_norm))
    throw ConfigError("noise lq_norm must be finite and >= 0, got " + std::to_string(lq_norm));
  NoiseSpec spec;
  spec.family_ = family;
  spec.q0_ = q0;
  spec.lq_norm_ = lq_norm;
  switch (family) {
    case NoiseFamily::kGaussian:
      spec.tail_param_ = 0.0;
      spec.scale_ = lq_norm / gaussian_lq(q0);
      break;
    case NoiseFamily::kStudentT:
    case NoiseFamily::kSymmetricPareto: {
      const double tail = tail_param > 0.0 ? tail_param : q0 + 1.0;
      if (!(tail > q0))
        throw ConfigError(std::string(to_string(family)) + " noise needs tail_param > q0 (" +
                          std::to_string(q0) + ") for a finite L_q0 norm, got " +
                          std::to_string(tail));
      spec.tail_param_ = tail;
      const double unit =
          family == NoiseFamily::kStudentT ? student_t_lq(tail, q0) : pareto_lq(tail, q0);
      spec.scale_ = lq_norm / unit;
      break;
    }
    case NoiseFamily::kConstant:
      spec.tail_param_ = 0.0;
      spec.scale_ = lq_norm;
      break;
  }
  return spec;
}

double NoiseSpec::lq(double q) const {
  switch (family_) {
    case NoiseFamily::kGaussian:
      return scale_ * gaussian_lq(q);
    case NoiseFamily::kStudentT:
      return scale_ * student_t_lq(tail_param_, q);
    case NoiseFamily::kSymmetricPareto:
      return scale_ * pareto_lq(tail_param_, q);
    case NoiseFamily::kConstant:
      return lq_norm_;
  }
  return 0.0;
}

double NoiseSpec::draw(Rng& rng) const noexcept {
  switch (family_) {
    case NoiseFamily::kGaussian:
      return scale_ * rng.normal();
    case NoiseFamily::kStudentT:
      return scale_ * student_t_draw(rng, tail_param_);
    case NoiseFamily::kSymmetricPareto: {
      const double s = rng.sign();
      return s * scale_ * pareto_magnitude(rng, tail_param_);
    }
    case NoiseFamily::kConstant:
      return lq_norm_;
  }
  return 0.0;
}

SampleBatch sample_batch(const DistributionSpec& dist, const NoiseSpec& noise, int sample_count,
                         const SeedPath& seed_path, BatchRole role, ExecPolicy policy) {
  if (sample_count < 1) throw UsageError("sample_batch needs N >= 1");
  const int n = dist.dim();
  const bool holdout = role == BatchRole::kHoldout;
  const std::uint64_t x_key =
      seed_path.key(holdout ? StreamTag::kHoldoutMeasurements : StreamTag::kMeasurements);
  const std::uint64_t xi_key = seed_path.key(holdout ? StreamTag::kHoldoutNoise : StreamTag::kNoise);

  SampleBatch batch{RowMatrix(sample_count, n), Eigen::VectorXd(sample_count),
                    Eigen::VectorXd(sample_count), seed_path, dist, noise};
  for_each_index(static_cast<std::size_t>(sample_count), policy, [&](std::size_t i) {
    Rng rng(x_key, i);
    for (int j = 0; j < n; ++j) batch.x(static_cast<Eigen::Index>(i), j) = dist.draw(rng);
  });
  Rng xi_rng(xi_key);
  for (int i = 0; i < sample_count; ++i) batch.xi(i) = noise.draw(xi_rng);
  Rng eps_rng(seed_path.key(StreamTag::kSigns));
  for (int i = 0; i < sample_count; ++i) batch.eps(i) = eps_rng.sign();
  return batch;
}

int moment_cap(std::size_t sample_count, int p) {
  const int by_samples =
      static_cast<int>(std::ceil(2.0 * std::log(static_cast<double>(sample_count))));
  return std::max(1, std::min(p, by_samples));
}

PNormEstimate empirical_p_norm(std::span<const double> samples, int p) {
  if (samples.empty()) throw UsageError("empirical_p_norm: empty sample set");
  if (samples.size() < 2) throw UsageError("empirical_p_norm: needs at least 2 samples");
  if (p < 1) throw UsageError("empirical_p_norm: p must be >= 1");
  PNormEstimate out;
  out.q_cap = moment_cap(samples.size(), p);
  const auto ratios = moment_ratios(samples, out.q_cap);
  for (int q = 1; q <= out.q_cap; ++q) {
    if (ratios[static_cast<std::size_t>(q - 1)] > out.value) {
      out.value = ratios[static_cast<std::size_t>(q - 1)];
      out.q_star = q;
    }
  }
  return out;
}

double small_ball_estimate(const DistributionSpec& dist, double kappa, int n_dirs, int n_samples,
                           const SeedPath& seed_path, std::span<const Eigen::VectorXd> forced_dirs,
                           ExecPolicy policy) {
  if (!(kappa >= 0.0)) throw ConfigError("small_ball_estimate: kappa must be >= 0");
  if (n_dirs < 0 || n_samples < 1 || (n_dirs == 0 && forced_dirs.empty()))
    throw ConfigError("small_ball_estimate: needs n_dirs >= 1 and n_samples >= 1");
  const int n = dist.dim();
  for (const auto& t : forced_dirs)
    if (t.size() != n) throw UsageError("small_ball_estimate: forced direction has wrong dimension");

  const std::uint64_t dir_key = seed_path.key(StreamTag::kDirections);
  const std::uint64_t sample_key = seed_path.key(StreamTag::kMeasurements);
  const std::size_t total = static_cast<std::size_t>(n_dirs) + forced_dirs.size();
  std::vector<double> freq(total, 1.0);

  for_each_index(total, policy, [&](std::size_t d) {
    Eigen::VectorXd t(n);
    if (d < static_cast<std::size_t>(n_dirs)) {
      Rng rng(dir_key, d);
      for (int j = 0; j < n; ++j) t(j) = rng.normal();
    } else {
      t = forced_dirs[d - static_cast<std::size_t>(n_dirs)];
    }
    const double norm = t.norm();
    if (norm == 0.0) return;
    t /= norm;
    Rng rng(sample_key, d);
    int hits = 0;
    for (int s = 0; s < n_samples; ++s) {
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += dist.draw(rng) * t(j);
      if (std::abs(dot) >= kappa) ++hits;
    }
    freq[d] = static_cast<double>(hits) / n_samples;
  });
  return *std::min_element(freq.begin(), freq.end());
}

std::vector<MomentRatio> moment_growth_profile(const DistributionSpec& dist, int p, int n_samples,
                                               const SeedPath& seed_path) {
  if (p < 2) throw UsageError("moment_growth_profile: p must be >= 2");
  if (n_samples < 2) throw UsageError("moment_growth_profile: needs at least 2 samples");
  std::vector<double> samples(static_cast<std::size_t>(n_samples));
  Rng rng(seed_path.key(StreamTag::kMeasurements));
  for (auto& s : samples) s = dist.draw(rng);
  const int cap = moment_cap(samples.size(), p);
  const auto ratios = moment_ratios(samples, cap);
  std::vector<MomentRatio> out;
  out.reserve(ratios.size());
  for (int q = 1; q <= cap; ++q) out.push_back({q, ratios[static_cast<std::size_t>(q - 1)]});
  return out;
}

std::string_view to_string(CoordinateFamily family) {
  switch (family) {
    case CoordinateFamily::kGaussian: return "Gaussian";
    case CoordinateFamily::kRademacher: return "Rademacher";
    case CoordinateFamily::kStudentT: return "StudentT";
    case CoordinateFamily::kSymmetricPareto: return "SymmetricPareto";
    case CoordinateFamily::kSymmetricWeibull: return "SymmetricWeibull";
  }
  return "?";
}

std::string_view to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::kGaussian: return "Gaussian";
    case NoiseFamily::kSymmetricPareto: return "SymmetricPareto";
    case NoiseFamily::kStudentT: return "StudentT";
    case NoiseFamily::kConstant: return "Constant";
  }
  return "?";
}

CoordinateFamily coordinate_family_from_string(std::string_view name) {
  for (auto f : {CoordinateFamily::kGaussian, CoordinateFamily::kRademacher,
                 CoordinateFamily::kStudentT, CoordinateFamily::kSymmetricPareto,
                 CoordinateFamily::kSymmetricWeibull})
    if (to_string(f) == name) return f;
  throw ConfigError("unknown distribution family '" + std::string(name) + "'");
}

NoiseFamily noise_family_from_string(std::string_view name) {
  for (auto f : {NoiseFamily::kGaussian, NoiseFamily::kSymmetricPareto, NoiseFamily::kStudentT,
                 NoiseFamily::kConstant})
    if (to_string(f) == name) return f;
  throw ConfigError("unknown noise family '" + std::string(name) + "'");
}

}  // namespace mplab
