#include "mplab/process.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mplab/error.hpp"

namespace mplab {

std::vector<double> default_u_grid() { return {2.0, 4.0, 8.0}; }

Eigen::VectorXd weighted_column_sums(const RowMatrix& x, const Eigen::VectorXd& weights,
                                     ExecPolicy policy) {
  if (weights.size() != x.rows()) throw UsageError("weight vector length does not match N");
  const Eigen::Index rows = x.rows();
  const auto cols = static_cast<std::size_t>(x.cols());
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(rows));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.cols());
  // Column blocks keep the row-major reads contiguous; within a column the
  // summation runs over i in order, whatever the policy.
  for_each_block(cols, 64, policy, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> acc(end - begin, 0.0);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double w = weights(i);
      const double* row = x.data() + static_cast<std::size_t>(i) * cols;
      for (std::size_t j = begin; j < end; ++j) acc[j - begin] += w * row[j];
    }
    for (std::size_t j = begin; j < end; ++j)
      out(static_cast<Eigen::Index>(j)) = acc[j - begin] * inv_sqrt_n;
  });
  return out;
}

ProcessStats multiplier_stats(const SampleBatch& batch, const IndexSetSpec& set,
                              std::span<const double> u_grid, ExecPolicy policy) {
  if (batch.dim() != set.dim())
    throw UsageError("dimension mismatch: batch has n = " + std::to_string(batch.dim()) +
                     ", index set has n = " + std::to_string(set.dim()));
  ProcessStats out;
  const Eigen::VectorXd signed_weights = batch.eps.cwiseProduct(batch.xi);
  out.z = weighted_column_sums(batch.x, signed_weights, policy);
  out.sup_symmetrized = support(set, out.z);

  Eigen::VectorXd centred = weighted_column_sums(batch.x, batch.xi, policy);
  if (batch.noise.symmetric()) {
    out.centring = Centring::kZeroBySymmetry;
  } else {
    // sqrt(N) times the hold-out mean of xi X, which is what N^{-1/2} sum
    // E xi X contributes inside the supremum.
    const SampleBatch holdout = sample_batch(batch.dist, batch.noise, batch.sample_count(),
                                             batch.seed_path, BatchRole::kHoldout, policy);
    centred -= weighted_column_sums(holdout.x, holdout.xi, policy);
    out.centring = Centring::kHoldout;
  }
  out.sup_centred = support(set, centred);

  out.z_sorted = decreasing_abs(std::span<const double>(out.z.data(), out.z.size()));
  const std::span<const double> xi(batch.xi.data(), static_cast<std::size_t>(batch.xi.size()));
  out.u_grid.assign(u_grid.begin(), u_grid.end());
  for (double u : u_grid)
    out.a_u_holds.push_back(check_a_u(xi, batch.noise.q0(), batch.noise.lq_norm(), u));
  out.envelope_constant = order_stat_envelope(out.z_sorted, set.dim()).c_hat;
  return out;
}

bool check_a_u(std::span<const double> xi, double q0, double lq_norm, double u) {
  if (!(u >= 2.0)) throw UsageError("A_u is defined for u >= 2");
  if (!(q0 > 2.0)) throw UsageError("A_u needs q0 > 2");
  if (!(lq_norm >= 0.0)) throw UsageError("A_u needs a known L_q0 norm of xi");
  const auto sorted = decreasing_abs(xi);
  const double big_n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double rank = static_cast<double>(i + 1);
    const double bound = u * lq_norm * std::pow(std::numbers::e * big_n / rank, 1.0 / q0);
    if (sorted[i] > bound) return false;
  }
  return true;
}

Envelope order_stat_envelope(std::span<const double> z_sorted, int dim) {
  if (z_sorted.size() != static_cast<std::size_t>(dim))
    throw UsageError("order_stat_envelope: Z_sorted length differs from n");
  for (std::size_t j = 1; j < z_sorted.size(); ++j)
    if (z_sorted[j] > z_sorted[j - 1] || z_sorted[j] < 0.0)
      throw UsageError("order_stat_envelope: Z_sorted must be non-negative and non-increasing");
  Envelope env;
  env.profile.resize(z_sorted.size());
  const double n = static_cast<double>(dim);
  for (std::size_t j = 0; j < z_sorted.size(); ++j) {
    const double level = std::sqrt(std::log(std::numbers::e * n / static_cast<double>(j + 1)));
    env.profile[j] = z_sorted[j] / level;
    env.c_hat = std::max(env.c_hat, env.profile[j]);
  }
  return env;
}

double ratio_statistic(const ProcessStats& stats, const WidthEstimate& width,
                       const NoiseSpec& noise) {
  if (!(width.mean > 0.0))
    throw UsageError("ratio_statistic: degenerate index set V (estimated mean width is zero)");
  if (!(noise.lq_norm() > 0.0)) throw UsageError("ratio_statistic: noise L_q0 norm is zero");
  return stats.sup_centred / (noise.lq_norm() * width.mean);
}

}  // namespace mplab
