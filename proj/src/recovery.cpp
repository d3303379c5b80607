#include "mplab/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mplab/error.hpp"
#include "mplab/stats.hpp"

namespace mplab {

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

RecoveryResult finish(const RecoveryProblem& problem, Eigen::VectorXd v, int iterations,
                      bool converged, bool lasso_objective_kind) {
  RecoveryResult out;
  out.residual = (problem.gamma * v - problem.y).norm();
  out.objective = lasso_objective_kind ? lasso_objective(problem, v) : v.lpNorm<1>();
  out.errors_lp = recovery_errors(v, problem.v0);
  out.v_hat = std::move(v);
  out.iterations = iterations;
  out.converged = converged;
  return out;
}

}  // namespace

RecoveryProblem recovery_problem_from(Eigen::MatrixXd gamma, Eigen::VectorXd v0,
                                      Eigen::VectorXd xi, double lambda) {
  if (gamma.cols() != v0.size()) throw UsageError("v0 length does not match the columns of Gamma");
  if (gamma.rows() != xi.size()) throw UsageError("xi length does not match the rows of Gamma");
  if (!(lambda >= 0.0)) throw UsageError("lambda must be >= 0");
  RecoveryProblem p;
  p.y = gamma * v0 - xi;
  p.gamma = std::move(gamma);
  p.sparsity = static_cast<int>((v0.array() != 0.0).count());
  p.v0 = std::move(v0);
  p.xi = std::move(xi);
  p.lambda = lambda;
  return p;
}

RecoveryProblem make_recovery_problem(const DistributionSpec& dist, const NoiseSpec& noise,
                                      int sample_count, int sparsity, double lambda,
                                      const SeedPath& seed_path) {
  const int n = dist.dim();
  if (sparsity < 0 || sparsity > n) throw ConfigError("sparsity must lie in [0, n]");
  const SampleBatch batch = sample_batch(dist, noise, sample_count, seed_path, BatchRole::kPrimary,
                                         ExecPolicy::kSerial);
  Eigen::VectorXd v0 = Eigen::VectorXd::Zero(n);
  Rng rng(seed_path.key(StreamTag::kSupport));
  std::vector<int> index(static_cast<std::size_t>(n));
  std::iota(index.begin(), index.end(), 0);
  for (int k = 0; k < sparsity; ++k) {
    const auto pick = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - k)));
    std::swap(index[static_cast<std::size_t>(k)], index[static_cast<std::size_t>(pick)]);
    v0(index[static_cast<std::size_t>(k)]) = rng.sign();
  }
  RecoveryProblem p = recovery_problem_from(Eigen::MatrixXd(batch.x), std::move(v0),
                                            batch.xi, lambda);
  p.sparsity = sparsity;
  return p;
}

double lasso_objective(const RecoveryProblem& problem, const Eigen::VectorXd& v) {
  const double n_rows = static_cast<double>(problem.gamma.rows());
  return (problem.gamma * v - problem.y).squaredNorm() / n_rows + problem.lambda * v.lpNorm<1>();
}

RecoveryResult lasso(const RecoveryProblem& problem, double tol, int max_sweeps) {
  if (!(problem.lambda >= 0.0)) throw UsageError("lasso: lambda must be >= 0");
  if (!(tol > 0.0)) throw UsageError("lasso: tol must be > 0");
  const Eigen::Index n = problem.gamma.cols();
  const double n_rows = static_cast<double>(problem.gamma.rows());
  const double threshold = 0.5 * n_rows * problem.lambda;

  Eigen::VectorXd col_sq = problem.gamma.colwise().squaredNorm().transpose();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = problem.y;
  double previous = r.squaredNorm() / n_rows;
  bool converged = false;
  int sweep = 0;
  while (sweep < max_sweeps) {
    ++sweep;
    double max_step = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double rho = problem.gamma.col(j).dot(r) + col_sq(j) * v(j);
      const double next = soft_threshold(rho, threshold) / col_sq(j);
      const double step = next - v(j);
      if (step != 0.0) {
        r.noalias() -= step * problem.gamma.col(j);
        v(j) = next;
        max_step = std::max(max_step, std::abs(step));
      }
    }
    const double current = r.squaredNorm() / n_rows + problem.lambda * v.lpNorm<1>();
    if (current > previous + 1e-10 * std::max(1.0, std::abs(previous)))
      throw PropertyFailure("lasso: objective increased from " + std::to_string(previous) + " to " +
                            std::to_string(current) + " in sweep " + std::to_string(sweep));
    previous = current;
    if (max_step < tol) {
      converged = true;
      break;
    }
  }
  return finish(problem, std::move(v), sweep, converged, true);
}

namespace {

struct Polish {
  Eigen::VectorXd v;
  bool feasible = false;
  bool certified = false;
};

// Least-squares solve restricted to the support of `guide`, then a
// least-norm dual certificate: w with Gamma_S^T w = sign(v_S) and
// |Gamma_j^T w| <= 1 off the support proves l1-optimality.
Polish polish_support(const RecoveryProblem& problem, const Eigen::VectorXd& guide, int rank,
                      double tol) {
  Polish out;
  const Eigen::Index n = problem.gamma.cols();
  const double scale = guide.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return out;
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < n; ++j)
    if (std::abs(guide(j)) > 1e-9 * scale) support.push_back(j);

  for (int attempt = 0; attempt < 2; ++attempt) {
    if (support.empty() || static_cast<int>(support.size()) > rank) return out;
    Eigen::MatrixXd sub(problem.gamma.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k)
      sub.col(static_cast<Eigen::Index>(k)) = problem.gamma.col(support[k]);
    const Eigen::VectorXd coef = sub.colPivHouseholderQr().solve(problem.y);
    // Coordinates that vanish in the solve carry no sign; drop them and redo.
    const double top = coef.lpNorm<Eigen::Infinity>();
    std::vector<Eigen::Index> kept;
    for (std::size_t k = 0; k < support.size(); ++k)
      if (std::abs(coef(static_cast<Eigen::Index>(k))) > 1e-12 * top) kept.push_back(support[k]);
    if (kept.size() != support.size() && attempt == 0) {
      support = std::move(kept);
      continue;
    }
    out.v = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < support.size(); ++k)
      out.v(support[k]) = coef(static_cast<Eigen::Index>(k));
    out.feasible = (sub * coef - problem.y).norm() <= tol * problem.y.norm();
    if (!out.feasible) return out;

    const Eigen::VectorXd signs = coef.array().sign().matrix();
    const Eigen::MatrixXd sub_t = sub.transpose();
    const Eigen::VectorXd w = sub_t.completeOrthogonalDecomposition().solve(signs);
    if ((sub_t * w - signs).lpNorm<Eigen::Infinity>() > 1e-9) return out;
    const Eigen::VectorXd corr = problem.gamma.transpose() * w;
    double off = 0.0;
    std::vector<bool> on(static_cast<std::size_t>(n), false);
    for (auto j : support) on[static_cast<std::size_t>(j)] = true;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!on[static_cast<std::size_t>(j)]) off = std::max(off, std::abs(corr(j)));
    out.certified = off <= 1.0 + 1e-9;
    return out;
  }
  return out;
}

}  // namespace

RecoveryResult basis_pursuit(const RecoveryProblem& problem, double tol, int max_iters) {
  if (!(tol > 0.0)) throw UsageError("basis_pursuit: tol must be > 0");
  const Eigen::Index n = problem.gamma.cols();
  if (problem.y.norm() == 0.0) {
    RecoveryResult out = finish(problem, Eigen::VectorXd::Zero(n), 0, true, false);
    out.certified = true;
    return out;
  }

  // Orthonormal basis of the row space of Gamma and the least-norm solution;
  // projection onto {Gamma v = y} is then v -> x_ln + (v - Q Q^T v).
  const Eigen::MatrixXd gamma_t = problem.gamma.transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gamma_t);
  const int rank = static_cast<int>(qr.rank());
  const Eigen::MatrixXd q_full = qr.householderQ();
  const Eigen::MatrixXd q = q_full.leftCols(rank);
  const Eigen::VectorXd least_norm = problem.gamma.completeOrthogonalDecomposition().solve(problem.y);
  auto project = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
    return least_norm + (w - q * (q.transpose() * w));
  };

  const double y_norm = problem.y.norm();
  const double relax = 1.6;
  double rho = 1.0 / std::max(1e-12, least_norm.lpNorm<Eigen::Infinity>());
  Eigen::VectorXd x = least_norm;
  Eigen::VectorXd z = x;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd x_prev = x;

  Eigen::VectorXd best = least_norm;
  double best_l1 = least_norm.lpNorm<1>();
  bool converged = false;
  bool certified = false;
  int iter = 0;

  auto consider = [&](const Eigen::VectorXd& guide) {
    Polish p = polish_support(problem, guide, rank, tol);
    if (p.feasible && (p.certified || p.v.lpNorm<1>() <= best_l1)) {
      best = p.v;
      best_l1 = p.v.lpNorm<1>();
      certified = p.certified;
    }
  };

  for (iter = 1; iter <= max_iters; ++iter) {
    x_prev = x;
    x = project(z - u);
    const Eigen::VectorXd z_prev = z;
    const Eigen::VectorXd x_hat = relax * x + (1.0 - relax) * z_prev;
    z = x_hat + u;
    for (Eigen::Index j = 0; j < n; ++j) z(j) = soft_threshold(z(j), 1.0 / rho);
    u += x_hat - z;

    const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
    const double primal = (x - z).lpNorm<Eigen::Infinity>();
    const double dual = rho * (z - z_prev).lpNorm<Eigen::Infinity>();
    const double change = (x - x_prev).lpNorm<Eigen::Infinity>();

    if (x.lpNorm<1>() < best_l1) {
      best = x;
      best_l1 = x.lpNorm<1>();
    }
    if (iter % 25 == 0) {
      consider(z);
      if (certified) {
        converged = true;
        break;
      }
    }
    if (primal < tol * scale && change < tol * scale) {
      converged = true;
      break;
    }
    if (iter % 10 == 0) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        u /= 2.0;
      } else if (dual > 10.0 * primal) {
        rho /= 2.0;
        u *= 2.0;
      }
    }
  }
  if (!certified) {
    consider(z);
    if (!certified) {
      // The final ADMM iterate is feasible by construction.
      if (x.lpNorm<1>() <= best_l1) best = x;
    }
  }
  RecoveryResult out = finish(problem, best, std::min(iter, max_iters), converged || certified, false);
  out.certified = certified;
  if (out.residual > tol * y_norm) out.converged = false;
  return out;
}

double default_lambda(const NoiseSpec& noise, int sample_count, int dim, double c1) {
  if (sample_count < 1 || dim < 1) throw UsageError("default_lambda needs N >= 1, n >= 1");
  if (!(c1 > 0.0)) throw UsageError("default_lambda needs c1 > 0");
  return c1 * noise.lq_norm() *
         std::sqrt(std::log(std::numbers::e * dim) / static_cast<double>(sample_count));
}

double lp_norm(const Eigen::VectorXd& v, double p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v(i)), p);
  return std::pow(s, 1.0 / p);
}

std::map<double, double> recovery_errors(const Eigen::VectorXd& v_hat, const Eigen::VectorXd& v0) {
  const Eigen::VectorXd diff = v_hat - v0;
  return {{1.0, diff.lpNorm<1>()}, {1.5, lp_norm(diff, 1.5)}, {2.0, diff.norm()}};
}

bool exact_recovery(const RecoveryResult& result, const Eigen::VectorXd& v0) {
  return (result.v_hat - v0).norm() <= 1e-6 * std::max(1.0, v0.norm());
}

RecoveryTrial run_recovery_trial(const RecoveryCell& cell, const SeedPath& seed_path) {
  const DistributionSpec dist = cell.dist.with_dim(cell.dim);
  RecoveryTrial t;
  t.trial = static_cast<int>(seed_path.trial);
  const bool noisy = cell.noise.lq_norm() > 0.0;
  t.lambda = noisy ? default_lambda(cell.noise, cell.sample_count, cell.dim, cell.c1) : 0.0;
  const RecoveryProblem noisy_problem =
      make_recovery_problem(dist, cell.noise, cell.sample_count, cell.sparsity, t.lambda, seed_path);
  if (cell.run_basis_pursuit) {
    const RecoveryProblem clean = recovery_problem_from(
        noisy_problem.gamma, noisy_problem.v0, Eigen::VectorXd::Zero(cell.sample_count), 0.0);
    const RecoveryResult bp = basis_pursuit(clean, cell.bp_tol, cell.bp_max_iters);
    t.bp_converged = bp.converged;
    t.bp_error_l2 = bp.errors_lp.at(2.0);
    t.bp_success = exact_recovery(bp, clean.v0);
  }
  if (cell.run_lasso && noisy) {
    const RecoveryResult fit = lasso(noisy_problem, cell.lasso_tol, cell.lasso_max_sweeps);
    t.lasso_converged = fit.converged;
    t.lasso_error_l1 = fit.errors_lp.at(1.0);
    t.lasso_error_l2 = fit.errors_lp.at(2.0);
  } else {
    t.lasso_converged = true;
    t.lasso_error_l1 = t.lasso_error_l2 = std::numeric_limits<double>::quiet_NaN();
  }
  return t;
}

RecoveryCellSummary summarize_recovery(const RecoveryCell& cell,
                                       const std::vector<RecoveryTrial>& trials) {
  RecoveryCellSummary s;
  s.trials = static_cast<int>(trials.size());
  s.lambda = cell.noise.lq_norm() > 0.0
                 ? default_lambda(cell.noise, cell.sample_count, cell.dim, cell.c1)
                 : 0.0;
  if (trials.empty()) {
    s.success_rate = s.err_l1_median = s.err_l2_median = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  std::vector<double> l1, l2;
  int successes = 0;
  for (const auto& t : trials) {
    successes += t.bp_success ? 1 : 0;
    if ((cell.run_basis_pursuit && !t.bp_converged) || !t.lasso_converged) ++s.unconverged;
    if (!std::isnan(t.lasso_error_l2)) {
      l1.push_back(t.lasso_error_l1);
      l2.push_back(t.lasso_error_l2);
    }
  }
  const double p = static_cast<double>(successes) / s.trials;
  s.success_rate = cell.run_basis_pursuit ? p : std::numeric_limits<double>::quiet_NaN();
  s.success_se = std::sqrt(p * (1.0 - p) / s.trials);
  s.err_l1_median = l1.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::median(l1);
  s.err_l2_median = l2.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::median(l2);
  return s;
}

std::vector<RecoveryTrial> run_recovery_cell(const RecoveryCell& cell, int trials,
                                             std::uint64_t master_seed, std::uint64_t cell_index,
                                             ExecPolicy policy) {
  std::vector<RecoveryTrial> out(static_cast<std::size_t>(std::max(0, trials)));
  for_each_index(out.size(), policy, [&](std::size_t t) {
    out[t] = run_recovery_trial(cell, SeedPath{master_seed, cell_index, t});
  });
  return out;
}

}  // namespace mplab
