#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mplab/distributions.hpp"
#include "mplab/geometry.hpp"
#include "mplab/parallel.hpp"

namespace mplab {

enum class Centring {
  kZeroBySymmetry,  // E xi<X,v> = 0 exactly
  kHoldout,         // plug-in mean from an independent batch of the same size
};

struct ProcessStats {
  double sup_centred = 0.0;
  double sup_symmetrized = 0.0;
  Eigen::VectorXd z;                // Z_j = N^{-1/2} sum_i eps_i xi_i x_i(j)
  std::vector<double> z_sorted;     // non-increasing |Z_j|
  std::vector<double> u_grid;
  std::vector<bool> a_u_holds;      // one flag per u
  double envelope_constant = 0.0;   // C_hat of order_stat_envelope
  Centring centring = Centring::kZeroBySymmetry;
};

/// Default u values for the A_u event.
std::vector<double> default_u_grid();

/// Z = N^{-1/2} X^T (w) for a weight vector w (the symmetrised process uses
/// w = eps * xi, the centred one w = xi).
Eigen::VectorXd weighted_column_sums(const RowMatrix& x, const Eigen::VectorXd& weights,
                                     ExecPolicy policy = ExecPolicy::kParallel);

ProcessStats multiplier_stats(const SampleBatch& batch, const IndexSetSpec& set,
                              std::span<const double> u_grid,
                              ExecPolicy policy = ExecPolicy::kParallel);

/// True iff xi_i^* <= u * lq_norm * (e N / i)^{1/q0} for every 1 <= i <= N.
bool check_a_u(std::span<const double> xi, double q0, double lq_norm, double u);

struct Envelope {
  double c_hat = 0.0;
  std::vector<double> profile;  // Z_sorted[j] / sqrt(log(e n / j)), j = 1..n
};

/// Smallest C with Z_j^* <= C sqrt(log(e n / j)) for all j.
Envelope order_stat_envelope(std::span<const double> z_sorted, int dim);

/// sup_centred / (lq_norm * width.mean).
double ratio_statistic(const ProcessStats& stats, const WidthEstimate& width,
                       const NoiseSpec& noise);

}  // namespace mplab
