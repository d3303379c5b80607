#pragma once

#include <cstdint>
#include <utility>

#include "mplab/distributions.hpp"
#include "mplab/geometry.hpp"

namespace mplab {

struct FixedPointResult {
  double r_star = 0.0;
  double gamma = 0.0;
  int m = 0;
  double r_lo = 0.0;
  double r_hi = 0.0;
  WidthEstimate width_at_r;
  /// The threshold crossing was bracketed inside (r_min, d2).
  bool bracketed = false;
  /// The crossings of phi - 3 se and phi + 3 se are both bracketed too.
  bool confident = false;
  /// Fixed points of phi - 3 se / r and phi + 3 se / r: a 3-se band on r_star.
  double r_band_lo = 0.0;
  double r_band_hi = 0.0;
};

/// Fixed-point search shared by r_G and r_X: the smallest r in [tol, d2(V)]
/// with width(V cap rB_2) / r <= gamma sqrt(m), by bisection to an absolute
/// bracket of `tol`. All radii reuse the draws in `bank`, which makes the
/// estimated ratio exactly non-increasing in r.
FixedPointResult fixed_point_over_bank(const IndexSetSpec& set, const DrawBank& bank, double gamma,
                                       int m, double tol, ExecPolicy policy = ExecPolicy::kParallel);

FixedPointResult r_g_fixed_point(const IndexSetSpec& set, double gamma, int m, double tol, int draws,
                                 const SeedPath& seed_path,
                                 ExecPolicy policy = ExecPolicy::kParallel);

/// Rows m^{-1/2} sum_{i<=m} X_i, one per draw.
DrawBank empirical_sum_bank(const DistributionSpec& dist, int m, int draws,
                            const SeedPath& seed_path, ExecPolicy policy = ExecPolicy::kParallel);

FixedPointResult r_x_fixed_point(const DistributionSpec& dist, const IndexSetSpec& set,
                                 double gamma, int m, double tol, int draws,
                                 const SeedPath& seed_path,
                                 ExecPolicy policy = ExecPolicy::kParallel);

/// Orthonormal basis (columns) of ker(gamma) from a column-pivoted QR of
/// gamma^T. `rank` is the numerical rank.
struct KernelBasis {
  Eigen::MatrixXd basis;
  int rank = 0;
};
KernelBasis kernel_basis(const Eigen::MatrixXd& gamma);

struct KernelSection {
  double lower_bound = 0.0;   // 2 max |v|_2 over probes v in ker(Gamma) cap V
  SeedPath gamma_seed;
  int kernel_dim = 0;
  int rank = 0;
  bool rank_deficient = false;
  int probes_used = 0;
};

/// Certified lower bound on diam(ker(Gamma) cap V) for Gamma with rows X_i,
/// i <= m. Probes: kernel projections of every e_j (and of w for a
/// permutation polytope), then sampled 2-sparse sign vectors and random
/// kernel directions; each probe is scaled onto the boundary of V by its
/// gauge.
KernelSection kernel_section_diameter(const DistributionSpec& dist, const IndexSetSpec& set, int m,
                                      int probes, const SeedPath& seed_path);

/// Same, with Gamma supplied.
KernelSection kernel_section_diameter(const Eigen::MatrixXd& gamma, const IndexSetSpec& set,
                                      int probes, const SeedPath& seed_path);

/// The largest gamma whose r_G fixed point over `bank` still reaches
/// target_radius, i.e. phi(target_radius) / sqrt(m). Used to freeze the
/// constant of the diameter bound from a calibration run.
double calibrate_gamma(const IndexSetSpec& set, const DrawBank& bank, int m, double target_radius,
                       ExecPolicy policy = ExecPolicy::kParallel);

}  // namespace mplab
