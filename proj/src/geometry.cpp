#include "mplab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "mplab/error.hpp"
#include "mplab/stats.hpp"

namespace mplab {

namespace {

void check_dim(const IndexSetSpec& set, std::size_t size) {
  if (size != static_cast<std::size_t>(set.dim()))
    throw UsageError("dimension mismatch: index set has dim " + std::to_string(set.dim()) +
                     ", vector has " + std::to_string(size));
}

double l2_norm(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return std::sqrt(s);
}

double top_s_l2(std::span<const double> z, int s) {
  std::vector<double> sq(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) sq[i] = z[i] * z[i];
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(s), sq.size());
  std::partial_sort(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(k), sq.end(),
                    std::greater<>());
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += sq[i];
  return std::sqrt(total);
}

}  // namespace

IndexSetSpec IndexSetSpec::l1_ball(int dim, double rho) {
  if (dim < 1) throw ConfigError("index set dim must be >= 1");
  if (!(rho >= 0.0)) throw ConfigError("L1Ball radius rho must be >= 0");
  IndexSetSpec s;
  s.family_ = SetFamily::kL1Ball;
  s.dim_ = dim;
  s.rho_ = rho;
  return s;
}

IndexSetSpec IndexSetSpec::l2_ball(int dim, double radius) {
  if (dim < 1) throw ConfigError("index set dim must be >= 1");
  if (!(radius >= 0.0)) throw ConfigError("L2Ball radius must be >= 0");
  IndexSetSpec s;
  s.family_ = SetFamily::kL2Ball;
  s.dim_ = dim;
  s.radius_ = radius;
  return s;
}

IndexSetSpec IndexSetSpec::sparse_cap(int dim, int sparsity, double radius) {
  if (dim < 1) throw ConfigError("index set dim must be >= 1");
  if (sparsity < 1 || sparsity > dim) throw ConfigError("SparseCap needs 1 <= s <= n");
  if (!(radius >= 0.0)) throw ConfigError("SparseCap radius must be >= 0");
  IndexSetSpec s;
  s.family_ = SetFamily::kSparseCap;
  s.dim_ = dim;
  s.sparsity_ = sparsity;
  s.radius_ = radius;
  return s;
}

IndexSetSpec IndexSetSpec::l1_cap_l2(int dim, double rho, double radius) {
  if (dim < 1) throw ConfigError("index set dim must be >= 1");
  if (!(rho >= 0.0) || !(radius >= 0.0)) throw ConfigError("L1CapL2 needs rho, r >= 0");
  IndexSetSpec s;
  s.family_ = SetFamily::kL1CapL2;
  s.dim_ = dim;
  s.rho_ = rho;
  s.radius_ = radius;
  return s;
}

IndexSetSpec IndexSetSpec::permutation_polytope(std::vector<double> weights) {
  if (weights.empty()) throw ConfigError("PermutationPolytope needs a non-empty weight vector");
  IndexSetSpec s;
  s.family_ = SetFamily::kPermutationPolytope;
  s.dim_ = static_cast<int>(weights.size());
  s.weights_ = decreasing_abs(weights);
  return s;
}

double IndexSetSpec::d2() const noexcept {
  switch (family_) {
    case SetFamily::kL1Ball: return rho_;
    case SetFamily::kL2Ball: return radius_;
    case SetFamily::kSparseCap: return radius_;
    case SetFamily::kL1CapL2: return std::min(rho_, radius_);
    case SetFamily::kPermutationPolytope: return l2_norm(weights_);
  }
  return 0.0;
}

IndexSetSpec IndexSetSpec::localized(double r) const {
  if (!(r >= 0.0)) throw ConfigError("localization radius must be >= 0");
  switch (family_) {
    case SetFamily::kL1Ball: return l1_cap_l2(dim_, rho_, r);
    case SetFamily::kL2Ball: return l2_ball(dim_, std::min(radius_, r));
    case SetFamily::kSparseCap: return sparse_cap(dim_, sparsity_, std::min(radius_, r));
    case SetFamily::kL1CapL2: return l1_cap_l2(dim_, rho_, std::min(radius_, r));
    case SetFamily::kPermutationPolytope:
      throw ConfigError("localized widths are not available for PermutationPolytope");
  }
  return *this;
}

std::string IndexSetSpec::describe() const {
  std::ostringstream os;
  os << to_string(family_) << "(n=" << dim_;
  switch (family_) {
    case SetFamily::kL1Ball: os << ",rho=" << rho_; break;
    case SetFamily::kL2Ball: os << ",r=" << radius_; break;
    case SetFamily::kSparseCap: os << ",s=" << sparsity_ << ",r=" << radius_; break;
    case SetFamily::kL1CapL2: os << ",rho=" << rho_ << ",r=" << radius_; break;
    case SetFamily::kPermutationPolytope: os << ",|w|_2=" << d2(); break;
  }
  os << ")";
  return os.str();
}

std::vector<double> decreasing_abs(std::span<const double> x) {
  std::vector<double> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = std::abs(x[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  return a;
}

double l1_cap_l2_support(std::span<const double> z, double rho, double radius) {
  if (rho == 0.0 || radius == 0.0 || z.empty()) return 0.0;
  const std::vector<double> a = decreasing_abs(z);
  if (a.front() == 0.0) return 0.0;
  const std::size_t n = a.size();
  const double c2 = (rho / radius) * (rho / radius);

  // Candidate multipliers; the objective is convex in mu, so the minimum over
  // the breakpoints plus each piece's stationary point is the global minimum.
  // On piece k (mu in [a_{k+1}, a_k], top k active) the objective is
  //   radius * sqrt(S2 - 2 mu S1 + k mu^2) + rho * mu.
  auto piece_value = [&](double mu, double s1, double s2, double k) {
    const double sq = std::max(0.0, s2 - 2.0 * mu * s1 + k * mu * mu);
    return radius * std::sqrt(sq) + rho * mu;
  };

  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : a) {
    s1 += v;
    s2 += v * v;
  }
  double best = radius * std::sqrt(s2);  // mu = 0
  double best_mu = 0.0;

  s1 = 0.0;
  s2 = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    s1 += a[k - 1];
    s2 += a[k - 1] * a[k - 1];
    const double hi = a[k - 1];
    const double lo = k < n ? a[k] : 0.0;
    const double kk = static_cast<double>(k);
    // Breakpoint a_k, where the k-th coordinate just switches off.
    const double at_hi = piece_value(hi, s1, s2, kk);
    if (at_hi < best) {
      best = at_hi;
      best_mu = hi;
    }
    if (kk > c2 && hi > lo) {
      const double spread = std::max(0.0, kk * s2 - s1 * s1);
      double mu = (s1 - std::sqrt(c2 * spread / (kk - c2))) / kk;
      mu = std::clamp(mu, lo, hi);
      const double v = piece_value(mu, s1, s2, kk);
      if (v < best) {
        best = v;
        best_mu = mu;
      }
    }
  }

  // Re-evaluate the winner directly, free of prefix-sum cancellation.
  double tail = 0.0;
  for (double v : a) {
    if (v <= best_mu) break;
    tail += (v - best_mu) * (v - best_mu);
  }
  return std::min(best, radius * std::sqrt(tail) + rho * best_mu);
}

double support(const IndexSetSpec& set, std::span<const double> z) {
  check_dim(set, z.size());
  switch (set.family()) {
    case SetFamily::kL1Ball: {
      double m = 0.0;
      for (double v : z) m = std::max(m, std::abs(v));
      return set.rho() * m;
    }
    case SetFamily::kL2Ball:
      return set.radius() * l2_norm(z);
    case SetFamily::kSparseCap:
      return set.radius() * top_s_l2(z, set.sparsity());
    case SetFamily::kL1CapL2:
      return l1_cap_l2_support(z, set.rho(), set.radius());
    case SetFamily::kPermutationPolytope: {
      const auto a = decreasing_abs(z);
      double total = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) total += set.weights()[j] * a[j];
      return total;
    }
  }
  return 0.0;
}

double gauge(const IndexSetSpec& set, std::span<const double> v) {
  check_dim(set, v.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double l1 = 0.0;
  for (double x : v) l1 += std::abs(x);
  if (l1 == 0.0) return 0.0;
  auto ratio = [&](double num, double den) { return den > 0.0 ? num / den : kInf; };
  switch (set.family()) {
    case SetFamily::kL1Ball:
      return ratio(l1, set.rho());
    case SetFamily::kL2Ball:
      return ratio(l2_norm(v), set.radius());
    case SetFamily::kSparseCap: {
      const auto nnz = std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0; });
      if (nnz > set.sparsity()) return kInf;
      return ratio(l2_norm(v), set.radius());
    }
    case SetFamily::kL1CapL2:
      return std::max(ratio(l1, set.rho()), ratio(l2_norm(v), set.radius()));
    case SetFamily::kPermutationPolytope: {
      // v in tP iff the partial sums of v^* are dominated by t times those of w^*.
      const auto a = decreasing_abs(v);
      double sv = 0.0;
      double sw = 0.0;
      double g = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        sv += a[k];
        sw += set.weights()[k];
        g = std::max(g, ratio(sv, sw));
      }
      return g;
    }
  }
  return kInf;
}

namespace {

WidthEstimate finish_width(std::vector<double> values, const IndexSetSpec& base,
                           std::optional<double> radius) {
  const auto ms = stats::mean_se(values);
  WidthEstimate w;
  w.mean = ms.mean;
  w.std_error = ms.std_error;
  w.draws = static_cast<int>(values.size());
  w.localized_radius = radius;
  w.d2 = radius ? std::min(base.d2(), *radius) : base.d2();
  w.complexity_ratio = w.d2 > 0.0 ? (w.mean / w.d2) * (w.mean / w.d2) : 0.0;
  return w;
}

}  // namespace

WidthEstimate gaussian_mean_width(const IndexSetSpec& set, int draws,
                                  std::optional<double> localized_radius, const SeedPath& seed_path,
                                  ExecPolicy policy) {
  if (draws < 2) throw ConfigError("gaussian_mean_width needs draws >= 2");
  const IndexSetSpec target = localized_radius ? set.localized(*localized_radius) : set;
  const std::uint64_t key = seed_path.key(StreamTag::kGaussian);
  const int n = set.dim();
  std::vector<double> values(static_cast<std::size_t>(draws));
  for_each_block(values.size(), 64, policy, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (std::size_t d = begin; d < end; ++d) {
      Rng rng(key, d);
      for (auto& x : g) x = rng.normal();
      values[d] = support(target, g);
    }
  });
  return finish_width(std::move(values), set, localized_radius);
}

DrawBank gaussian_draw_bank(int dim, int draws, const SeedPath& seed_path, ExecPolicy policy) {
  if (dim < 1 || draws < 1) throw ConfigError("draw bank needs dim >= 1 and draws >= 1");
  DrawBank bank{RowMatrix(draws, dim)};
  const std::uint64_t key = seed_path.key(StreamTag::kGaussian);
  for_each_index(static_cast<std::size_t>(draws), policy, [&](std::size_t d) {
    Rng rng(key, d);
    for (int j = 0; j < dim; ++j) bank.draws(static_cast<Eigen::Index>(d), j) = rng.normal();
  });
  return bank;
}

WidthEstimate width_over_bank(const IndexSetSpec& set, const DrawBank& bank,
                              std::optional<double> localized_radius, ExecPolicy policy) {
  if (bank.draws.cols() != set.dim()) throw UsageError("draw bank dimension does not match set");
  if (bank.draws.rows() < 2) throw ConfigError("width estimate needs at least 2 draws");
  const IndexSetSpec target = localized_radius ? set.localized(*localized_radius) : set;
  std::vector<double> values(static_cast<std::size_t>(bank.draws.rows()));
  const auto n = static_cast<std::size_t>(bank.draws.cols());
  for_each_block(values.size(), 64, policy, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d)
      values[d] = support(target, std::span<const double>(
                                      bank.draws.data() + d * n, n));
  });
  return finish_width(std::move(values), set, localized_radius);
}

std::vector<double> gaussian_order_stat_means(int dim, int draws, const SeedPath& seed_path,
                                              ExecPolicy policy) {
  if (dim < 1 || draws < 1) throw ConfigError("order statistics need n >= 1 and draws >= 1");
  constexpr std::size_t kBlock = 256;
  const auto n = static_cast<std::size_t>(dim);
  const std::size_t blocks = (static_cast<std::size_t>(draws) + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> partial(blocks, std::vector<double>(n, 0.0));
  const std::uint64_t key = seed_path.key(StreamTag::kOrderStats);
  for_each_block(static_cast<std::size_t>(draws), kBlock, policy,
                 [&](std::size_t b, std::size_t begin, std::size_t end) {
                   std::vector<double> g(n);
                   for (std::size_t d = begin; d < end; ++d) {
                     Rng rng(key, d);
                     for (auto& x : g) x = rng.normal();
                     const auto sorted = decreasing_abs(g);
                     for (std::size_t j = 0; j < n; ++j) partial[b][j] += sorted[j];
                   }
                 });
  std::vector<double> mean(n, 0.0);
  for (const auto& p : partial)
    for (std::size_t j = 0; j < n; ++j) mean[j] += p[j];
  for (auto& m : mean) m /= static_cast<double>(draws);
  // Each summand is non-increasing in j; rounding can still create ties broken
  // the wrong way by one ulp.
  for (std::size_t j = 1; j < n; ++j) mean[j] = std::min(mean[j], mean[j - 1]);
  return mean;
}

double UnconditionalityReport::max_violation() const noexcept {
  return std::max({max_permutation_violation, max_sign_violation, max_majorization_violation});
}

UnconditionalityReport unconditionality_check(const IndexSetSpec& set, int trials,
                                              const SeedPath& seed_path) {
  if (trials < 1) throw ConfigError("unconditionality_check needs trials >= 1");
  UnconditionalityReport report;
  report.trials = trials;
  const auto n = static_cast<std::size_t>(set.dim());
  const std::uint64_t key = seed_path.key(StreamTag::kProperty);
  std::vector<double> z(n), moved(n), y(n), x(n);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a)}); };
  for (int t = 0; t < trials; ++t) {
    Rng rng(key, static_cast<std::uint64_t>(t));
    for (auto& v : z) v = rng.normal();
    const double hz = support(set, z);

    moved = z;
    rng.shuffle(std::span<double>(moved));
    report.max_permutation_violation =
        std::max(report.max_permutation_violation, rel(hz, support(set, moved)));

    for (std::size_t j = 0; j < n; ++j) moved[j] = z[j] * rng.sign();
    report.max_sign_violation = std::max(report.max_sign_violation, rel(hz, support(set, moved)));

    // x_j = y^*_j U_j keeps x^* <= y^* coordinatewise; then scramble x.
    for (auto& v : y) v = rng.normal();
    const auto ys = decreasing_abs(y);
    for (std::size_t j = 0; j < n; ++j) x[j] = ys[j] * rng.uniform() * rng.sign();
    rng.shuffle(std::span<double>(x));
    const double hx = support(set, x);
    const double hy = support(set, y);
    report.max_majorization_violation =
        std::max(report.max_majorization_violation, std::max(0.0, hx - hy) / std::max(1.0, hy));
  }
  return report;
}

std::string_view to_string(SetFamily family) {
  switch (family) {
    case SetFamily::kL1Ball: return "L1Ball";
    case SetFamily::kL2Ball: return "L2Ball";
    case SetFamily::kSparseCap: return "SparseCap";
    case SetFamily::kL1CapL2: return "L1CapL2";
    case SetFamily::kPermutationPolytope: return "PermutationPolytope";
  }
  return "?";
}

SetFamily set_family_from_string(std::string_view name) {
  for (auto f : {SetFamily::kL1Ball, SetFamily::kL2Ball, SetFamily::kSparseCap, SetFamily::kL1CapL2,
                 SetFamily::kPermutationPolytope})
    if (to_string(f) == name) return f;
  throw ConfigError("unknown index set family '" + std::string(name) + "'");
}

}  // namespace mplab
