#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mplab/distributions.hpp"
#include "mplab/parallel.hpp"
#include "mplab/rng.hpp"

namespace mplab {

enum class SetFamily { kL1Ball, kL2Ball, kSparseCap, kL1CapL2, kPermutationPolytope };

/// A 1-unconditional index set V in R^n.
///
///   L1Ball(rho)               rho * B_1^n
///   L2Ball(r)                 r * B_2^n
///   SparseCap(s, r)           { s-sparse v : |v|_2 <= r }   (r defaults to 1)
///   L1CapL2(rho, r)           rho * B_1^n  intersected with  r * B_2^n
///   PermutationPolytope(w)    convex hull of all signed permutations of w
class IndexSetSpec {
 public:
  static IndexSetSpec l1_ball(int dim, double rho = 1.0);
  static IndexSetSpec l2_ball(int dim, double radius = 1.0);
  static IndexSetSpec sparse_cap(int dim, int sparsity, double radius = 1.0);
  static IndexSetSpec l1_cap_l2(int dim, double rho, double radius);
  static IndexSetSpec permutation_polytope(std::vector<double> weights);

  SetFamily family() const noexcept { return family_; }
  int dim() const noexcept { return dim_; }
  double rho() const noexcept { return rho_; }
  double radius() const noexcept { return radius_; }
  int sparsity() const noexcept { return sparsity_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// d_2(V) = sup_{v in V} |v|_2.
  double d2() const noexcept;

  /// V intersected with r B_2^n, expressed in the same family list.
  /// Throws ConfigError for PermutationPolytope (no closed-form support).
  IndexSetSpec localized(double r) const;

  std::string describe() const;

 private:
  IndexSetSpec() = default;
  SetFamily family_ = SetFamily::kL1Ball;
  int dim_ = 1;
  double rho_ = 1.0;
  double radius_ = 1.0;
  int sparsity_ = 1;
  std::vector<double> weights_;  // sorted |w|, non-increasing
};

/// h_V(z) = sup_{v in V} |<v, z>|, evaluated in closed form.
double support(const IndexSetSpec& set, std::span<const double> z);
inline double support(const IndexSetSpec& set, const Eigen::VectorXd& z) {
  return support(set, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

/// min_{mu >= 0} radius * |soft_threshold(z, mu)|_2 + rho * mu, which is the
/// support function of rho B_1 intersected with radius B_2. Exact breakpoint
/// scan over the sorted |z_j| with the stationary point of each piece solved
/// in closed form.
double l1_cap_l2_support(std::span<const double> z, double rho, double radius);

/// Minkowski gauge of V: inf { t > 0 : v in t V }. +inf when v is outside
/// every dilate (SparseCap with too large a support).
double gauge(const IndexSetSpec& set, std::span<const double> v);

/// Non-increasing rearrangement of |x|.
std::vector<double> decreasing_abs(std::span<const double> x);

struct WidthEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int draws = 0;
  std::optional<double> localized_radius;
  double d2 = 0.0;
  double complexity_ratio = 0.0;  // (mean / d2)^2
};

/// Monte-Carlo estimate of E sup_{v in V (cap rB_2)} |<G, v>|. Draw d uses
/// substream d of the Gaussian key, so results do not depend on the policy.
WidthEstimate gaussian_mean_width(const IndexSetSpec& set, int draws,
                                  std::optional<double> localized_radius, const SeedPath& seed_path,
                                  ExecPolicy policy = ExecPolicy::kParallel);

/// A stored set of draws (one per row) reused across many index sets, so
/// that widths at different radii share common random numbers.
struct DrawBank {
  RowMatrix draws;
};

/// Standard Gaussian rows; row d equals draw d of gaussian_mean_width.
DrawBank gaussian_draw_bank(int dim, int draws, const SeedPath& seed_path,
                            ExecPolicy policy = ExecPolicy::kParallel);

WidthEstimate width_over_bank(const IndexSetSpec& set, const DrawBank& bank,
                              std::optional<double> localized_radius,
                              ExecPolicy policy = ExecPolicy::kParallel);

/// Monte-Carlo estimate of (E g_j^*)_{j=1..n}.
std::vector<double> gaussian_order_stat_means(int dim, int draws, const SeedPath& seed_path,
                                              ExecPolicy policy = ExecPolicy::kParallel);

struct UnconditionalityReport {
  int trials = 0;
  double max_permutation_violation = 0.0;
  double max_sign_violation = 0.0;
  double max_majorization_violation = 0.0;  // positive part of h(x) - h(y)
  double tolerance = 1e-10;

  double max_violation() const noexcept;
  bool passed() const noexcept { return max_violation() <= tolerance; }
};

/// Checks h(z) = h(pi z) = h(signs z) and h(x) <= h(y) whenever x^* <= y^*,
/// on random inputs. Violations are relative to max(1, h).
UnconditionalityReport unconditionality_check(const IndexSetSpec& set, int trials,
                                              const SeedPath& seed_path);

std::string_view to_string(SetFamily family);
SetFamily set_family_from_string(std::string_view name);

}  // namespace mplab
