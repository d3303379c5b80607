#include "mplab/gelfand.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mplab/error.hpp"

namespace mplab {

namespace {

struct Crossing {
  double r = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool bracketed = false;
};

// Smallest r in [r_min, r_max] with ratio(r) <= threshold, for a
// non-increasing ratio.
template <class Ratio>
Crossing bisect_crossing(Ratio&& ratio, double threshold, double r_min, double r_max, double tol) {
  if (ratio(r_min) <= threshold) return {r_min, 0.0, r_min, false};
  if (ratio(r_max) > threshold) return {r_max, r_max, r_max, false};
  double lo = r_min;
  double hi = r_max;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (ratio(mid) <= threshold)
      hi = mid;
    else
      lo = mid;
  }
  return {hi, lo, hi, true};
}

}  // namespace

FixedPointResult fixed_point_over_bank(const IndexSetSpec& set, const DrawBank& bank, double gamma,
                                       int m, double tol, ExecPolicy policy) {
  if (!(gamma > 0.0)) throw ConfigError("fixed point needs gamma > 0");
  if (m < 1) throw ConfigError("fixed point needs m >= 1");
  if (!(tol > 0.0)) throw ConfigError("fixed point needs tol > 0");
  const double d2 = set.d2();
  if (!(d2 > 0.0)) throw ConfigError("fixed point needs an index set with d2(V) > 0");
  const double threshold = gamma * std::sqrt(static_cast<double>(m));
  const double r_min = std::min(tol, d2);

  auto ratio_with_band = [&](double band) {
    return [&, band](double r) {
      const WidthEstimate w = width_over_bank(set, bank, r, policy);
      return (w.mean + band * 3.0 * w.std_error) / r;
    };
  };

  const Crossing centre = bisect_crossing(ratio_with_band(0.0), threshold, r_min, d2, tol);
  const Crossing low = bisect_crossing(ratio_with_band(-1.0), threshold, r_min, d2, tol);
  const Crossing high = bisect_crossing(ratio_with_band(1.0), threshold, r_min, d2, tol);

  FixedPointResult out;
  out.r_star = centre.r;
  out.gamma = gamma;
  out.m = m;
  out.r_lo = centre.lo;
  out.r_hi = centre.hi;
  out.bracketed = centre.bracketed;
  out.confident = centre.bracketed && low.bracketed && high.bracketed;
  out.r_band_lo = low.r;
  out.r_band_hi = high.r;
  out.width_at_r = width_over_bank(set, bank, out.r_star, policy);
  return out;
}

FixedPointResult r_g_fixed_point(const IndexSetSpec& set, double gamma, int m, double tol, int draws,
                                 const SeedPath& seed_path, ExecPolicy policy) {
  if (draws < 2) throw ConfigError("r_G needs draws >= 2");
  const DrawBank bank = gaussian_draw_bank(set.dim(), draws, seed_path, policy);
  return fixed_point_over_bank(set, bank, gamma, m, tol, policy);
}

DrawBank empirical_sum_bank(const DistributionSpec& dist, int m, int draws,
                            const SeedPath& seed_path, ExecPolicy policy) {
  if (m < 1 || draws < 1) throw ConfigError("empirical sum bank needs m >= 1 and draws >= 1");
  const int n = dist.dim();
  DrawBank bank{RowMatrix::Zero(draws, n)};
  const std::uint64_t key = seed_path.key(StreamTag::kMeasurements);
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  for_each_index(static_cast<std::size_t>(draws), policy, [&](std::size_t d) {
    Rng rng(key, d);
    auto row = bank.draws.row(static_cast<Eigen::Index>(d));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) row(j) += dist.draw(rng);
    row *= inv_sqrt_m;
  });
  return bank;
}

FixedPointResult r_x_fixed_point(const DistributionSpec& dist, const IndexSetSpec& set,
                                 double gamma, int m, double tol, int draws,
                                 const SeedPath& seed_path, ExecPolicy policy) {
  if (draws < 2) throw ConfigError("r_X needs draws >= 2");
  const DrawBank bank = empirical_sum_bank(dist.with_dim(set.dim()), m, draws, seed_path, policy);
  return fixed_point_over_bank(set, bank, gamma, m, tol, policy);
}

KernelBasis kernel_basis(const Eigen::MatrixXd& gamma) {
  const Eigen::Index n = gamma.cols();
  KernelBasis out;
  if (gamma.rows() == 0) {
    out.basis = Eigen::MatrixXd::Identity(n, n);
    return out;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gamma.transpose());
  out.rank = static_cast<int>(qr.rank());
  const Eigen::MatrixXd q = qr.householderQ();
  out.basis = q.rightCols(n - out.rank);
  return out;
}

KernelSection kernel_section_diameter(const Eigen::MatrixXd& gamma, const IndexSetSpec& set,
                                      int probes, const SeedPath& seed_path) {
  if (gamma.cols() != set.dim()) throw UsageError("Gamma columns do not match the index set dim");
  if (probes < 1) throw ConfigError("kernel_section_diameter needs probes >= 1");
  const Eigen::Index n = gamma.cols();
  const KernelBasis kb = kernel_basis(gamma);
  KernelSection out;
  out.gamma_seed = seed_path;
  out.rank = kb.rank;
  out.kernel_dim = static_cast<int>(kb.basis.cols());
  out.rank_deficient = kb.rank < gamma.rows();
  if (out.kernel_dim == 0) return out;

  const Eigen::MatrixXd& k = kb.basis;
  double best = 0.0;
  auto try_probe = [&](const Eigen::VectorXd& p) {
    ++out.probes_used;
    const double g = gauge(set, std::span<const double>(p.data(), static_cast<std::size_t>(n)));
    if (!(g > 0.0) || !std::isfinite(g)) return;
    best = std::max(best, p.norm() / g);
  };

  for (Eigen::Index j = 0; j < n; ++j) try_probe(k * k.row(j).transpose());
  if (set.family() == SetFamily::kPermutationPolytope) {
    const Eigen::Map<const Eigen::VectorXd> w(set.weights().data(), n);
    try_probe(k * (k.transpose() * w));
  }

  Rng rng(seed_path.key(StreamTag::kProbes));
  const int remaining = std::max(0, probes - out.probes_used);
  const int two_sparse = n >= 2 ? remaining / 2 : 0;
  for (int t = 0; t < two_sparse; ++t) {
    const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
    if (j >= i) ++j;
    const double si = rng.sign();
    const double sj = rng.sign();
    try_probe(k * (si * k.row(i).transpose() + sj * k.row(j).transpose()));
  }
  Eigen::VectorXd b(k.cols());
  for (int t = two_sparse; t < remaining; ++t) {
    for (Eigen::Index c = 0; c < b.size(); ++c) b(c) = rng.normal();
    try_probe(k * b);
  }
  out.lower_bound = 2.0 * best;
  return out;
}

KernelSection kernel_section_diameter(const DistributionSpec& dist, const IndexSetSpec& set, int m,
                                      int probes, const SeedPath& seed_path) {
  const int n = set.dim();
  if (m < 0 || m >= n) throw UsageError("kernel_section_diameter needs 0 <= m < n");
  Eigen::MatrixXd gamma(0, n);
  if (m > 0) {
    const SampleBatch batch = sample_batch(dist.with_dim(n), NoiseSpec(), m, seed_path,
                                           BatchRole::kPrimary, ExecPolicy::kSerial);
    gamma = batch.x;
  }
  return kernel_section_diameter(gamma, set, probes, seed_path);
}

double calibrate_gamma(const IndexSetSpec& set, const DrawBank& bank, int m, double target_radius,
                       ExecPolicy policy) {
  if (m < 1) throw ConfigError("calibrate_gamma needs m >= 1");
  if (!(target_radius > 0.0)) throw ConfigError("calibrate_gamma needs a positive target radius");
  const double r = std::min(target_radius, set.d2());
  const WidthEstimate w = width_over_bank(set, bank, r, policy);
  return w.mean / r / std::sqrt(static_cast<double>(m));
}

}  // namespace mplab
