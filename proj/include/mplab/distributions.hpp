#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mplab/parallel.hpp"
#include "mplab/rng.hpp"

namespace mplab {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class CoordinateFamily { kGaussian, kRademacher, kStudentT, kSymmetricPareto, kSymmetricWeibull };

/// Law of an isotropic random vector with iid, symmetric, unit-variance
/// coordinates.
///
/// tail_param is the degrees of freedom for StudentT (> 2), the tail exponent
/// for SymmetricPareto (> 2) and the Weibull shape (> 0); it is ignored for
/// Gaussian and Rademacher. `scale` is derived, never supplied: it is the
/// factor that brings the coordinate variance to one.
class DistributionSpec {
 public:
  static DistributionSpec make(CoordinateFamily family, double tail_param, int dim);

  CoordinateFamily family() const noexcept { return family_; }
  double tail_param() const noexcept { return tail_param_; }
  double scale() const noexcept { return scale_; }
  int dim() const noexcept { return dim_; }
  DistributionSpec with_dim(int dim) const { return make(family_, tail_param_, dim); }

  /// One coordinate draw.
  double draw(Rng& rng) const noexcept;

  /// Standard Gaussian in one dimension.
  DistributionSpec() = default;

 private:
  CoordinateFamily family_ = CoordinateFamily::kGaussian;
  double tail_param_ = 0.0;
  double scale_ = 1.0;
  int dim_ = 1;
};

enum class NoiseFamily { kGaussian, kSymmetricPareto, kStudentT, kConstant };
enum class NoiseDependence { kIndependentOfX };

/// Law of the multiplier xi, scaled so that ||xi||_{L_q0} = lq_norm.
///
/// tail_param is the Pareto exponent / StudentT degrees of freedom and must
/// exceed q0; 0 selects the default q0 + 1. Constant noise is xi == lq_norm.
class NoiseSpec {
 public:
  static NoiseSpec make(NoiseFamily family, double q0, double lq_norm, double tail_param = 0.0);

  NoiseFamily family() const noexcept { return family_; }
  double q0() const noexcept { return q0_; }
  double lq_norm() const noexcept { return lq_norm_; }
  double tail_param() const noexcept { return tail_param_; }
  double scale() const noexcept { return scale_; }
  NoiseDependence dependence() const noexcept { return NoiseDependence::kIndependentOfX; }
  /// True when xi is symmetric about zero, so E xi<X,v> vanishes exactly.
  bool symmetric() const noexcept { return family_ != NoiseFamily::kConstant || lq_norm_ == 0.0; }
  /// Exact ||xi||_{L_q} of this law (infinite past the tail exponent).
  double lq(double q) const;

  double draw(Rng& rng) const noexcept;

  /// xi == 0 (noise-free).
  NoiseSpec() = default;

 private:
  NoiseFamily family_ = NoiseFamily::kConstant;
  double q0_ = 3.0;
  double lq_norm_ = 0.0;
  double tail_param_ = 0.0;
  double scale_ = 1.0;
};

/// Which set of streams a batch is drawn from; hold-out batches reuse the seed
/// path with different stream tags.
enum class BatchRole { kPrimary, kHoldout };

struct SampleBatch {
  RowMatrix x;           // N x n, row i is X_i
  Eigen::VectorXd xi;    // N
  Eigen::VectorXd eps;   // N, entries exactly +-1
  SeedPath seed_path;
  DistributionSpec dist;
  NoiseSpec noise;

  int sample_count() const noexcept { return static_cast<int>(x.rows()); }
  int dim() const noexcept { return static_cast<int>(x.cols()); }
};

/// Row i of X comes from substream i of the measurement key, so the parallel
/// and serial fills agree bit for bit.
SampleBatch sample_batch(const DistributionSpec& dist, const NoiseSpec& noise, int sample_count,
                         const SeedPath& seed_path, BatchRole role = BatchRole::kPrimary,
                         ExecPolicy policy = ExecPolicy::kParallel);

struct PNormEstimate {
  double value = 0.0;
  int q_star = 1;
  int q_cap = 1;   // min(p, ceil(2 ln m)) for m samples
};

/// Empirical max_{1<=q<=q_cap} (mean |x|^q)^{1/q} / sqrt(q) over integer q.
PNormEstimate empirical_p_norm(std::span<const double> samples, int p);

/// The q-cap applied by empirical_p_norm for m samples.
int moment_cap(std::size_t sample_count, int p);

/// Min over random unit directions t of the empirical frequency of
/// |<X,t>| >= kappa. Finitely many directions, so this over-estimates the
/// true infimum. Extra directions (normalised here) are always included.
double small_ball_estimate(const DistributionSpec& dist, double kappa, int n_dirs, int n_samples,
                           const SeedPath& seed_path,
                           std::span<const Eigen::VectorXd> forced_dirs = {},
                           ExecPolicy policy = ExecPolicy::kParallel);

struct MomentRatio {
  int q = 1;
  double ratio = 0.0;  // ||x_1||_{L_q} / sqrt(q), empirical
};

std::vector<MomentRatio> moment_growth_profile(const DistributionSpec& dist, int p, int n_samples,
                                               const SeedPath& seed_path);

std::string_view to_string(CoordinateFamily family);
std::string_view to_string(NoiseFamily family);
CoordinateFamily coordinate_family_from_string(std::string_view name);
NoiseFamily noise_family_from_string(std::string_view name);

}  // namespace mplab
