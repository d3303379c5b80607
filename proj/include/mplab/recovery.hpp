#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "mplab/distributions.hpp"
#include "mplab/rng.hpp"

namespace mplab {

/// Y_i = <v0, X_i> - xi_i with an s-sparse v0.
struct RecoveryProblem {
  Eigen::MatrixXd gamma;   // N x n, row i is X_i
  Eigen::VectorXd y;
  Eigen::VectorXd v0;
  Eigen::VectorXd xi;
  int sparsity = 0;
  double lambda = 0.0;
};

/// v0 has a uniformly random support of size s with +-1 entries. The noise
/// vector is drawn from `noise`; pass a zero Constant law for noise-free data.
RecoveryProblem make_recovery_problem(const DistributionSpec& dist, const NoiseSpec& noise,
                                      int sample_count, int sparsity, double lambda,
                                      const SeedPath& seed_path);

/// Builds the problem from explicit data, checking shapes; y = gamma v0 - xi.
RecoveryProblem recovery_problem_from(Eigen::MatrixXd gamma, Eigen::VectorXd v0,
                                      Eigen::VectorXd xi, double lambda);

struct RecoveryResult {
  Eigen::VectorXd v_hat;
  int iterations = 0;
  double residual = 0.0;    // |gamma v_hat - y|_2
  double objective = 0.0;   // LASSO functional or |v_hat|_1
  std::map<double, double> errors_lp;  // p in {1, 1.5, 2} -> |v_hat - v0|_p
  bool converged = false;
  bool certified = false;   // basis pursuit only: a dual certificate was verified
};

/// (1/N) sum_i (<v, X_i> - Y_i)^2 + lambda |v|_1.
double lasso_objective(const RecoveryProblem& problem, const Eigen::VectorXd& v);

/// Cyclic coordinate descent on lasso_objective. Coordinate j moves to
/// soft_threshold(rho_j, N lambda / 2) / |Gamma_j|^2 with
/// rho_j = <Gamma_j, r + Gamma_j v_j>. Stops when the largest coordinate
/// change in a sweep drops below tol. A sweep that raises the objective
/// throws PropertyFailure.
RecoveryResult lasso(const RecoveryProblem& problem, double tol, int max_sweeps);

/// min |v|_1 subject to gamma v = y, by ADMM: l1 prox step alternating with
/// the affine projection onto {gamma v = y} (least-norm, via a rank-revealing
/// QR of gamma^T computed once). The iterate's support is then polished by a
/// least-squares solve and accepted when it is feasible and no worse; a
/// least-norm dual certificate is checked for the polished point.
RecoveryResult basis_pursuit(const RecoveryProblem& problem, double tol, int max_iters);

/// c1 * lq_norm * sqrt(log(e n) / N).
double default_lambda(const NoiseSpec& noise, int sample_count, int dim, double c1);

double lp_norm(const Eigen::VectorXd& v, double p);
std::map<double, double> recovery_errors(const Eigen::VectorXd& v_hat, const Eigen::VectorXd& v0);

/// Exact-recovery criterion: |v_hat - v0|_2 <= 1e-6 max(1, |v0|_2).
bool exact_recovery(const RecoveryResult& result, const Eigen::VectorXd& v0);

struct RecoveryCell {
  int dim = 0;
  int sparsity = 0;
  int sample_count = 0;
  DistributionSpec dist;
  NoiseSpec noise;
  double c1 = 1.0;
  double lasso_tol = 1e-8;
  int lasso_max_sweeps = 5000;
  double bp_tol = 1e-8;
  int bp_max_iters = 20000;
  bool run_basis_pursuit = true;
  bool run_lasso = true;
};

struct RecoveryTrial {
  int trial = 0;
  bool bp_success = false;
  bool bp_converged = false;
  double bp_error_l2 = 0.0;
  double lasso_error_l1 = 0.0;
  double lasso_error_l2 = 0.0;
  bool lasso_converged = false;
  double lambda = 0.0;
};

struct RecoveryCellSummary {
  double lambda = 0.0;
  double success_rate = 0.0;
  double success_se = 0.0;
  double err_l1_median = 0.0;
  double err_l2_median = 0.0;
  int trials = 0;
  int unconverged = 0;
};

/// One trial of a cell: basis pursuit on noise-free measurements Gamma v0 and
/// LASSO on the noisy ones, same Gamma and v0.
RecoveryTrial run_recovery_trial(const RecoveryCell& cell, const SeedPath& seed_path);

RecoveryCellSummary summarize_recovery(const RecoveryCell& cell,
                                       const std::vector<RecoveryTrial>& trials);

/// All trials of a cell, trial t at SeedPath{master, cell_index, t}.
std::vector<RecoveryTrial> run_recovery_cell(const RecoveryCell& cell, int trials,
                                             std::uint64_t master_seed, std::uint64_t cell_index,
                                             ExecPolicy policy = ExecPolicy::kParallel);

}  // namespace mplab
