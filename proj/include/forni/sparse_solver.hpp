// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace forni {

/// Fraction sums at or below this are treated as the all-zero sentinel.
inline constexpr double kFractionSentinel = 1e-12;

struct SolveOptions {
  /// Convergence threshold on the KKT residual
  /// max_i ( g_i > 0 ? |grad_i| : max(0, -grad_i) ).
  double tol = 1e-6;
  int max_iter = 2000;
  /// Upper bound on the Lipschitz constant of the smooth gradient,
  /// 2*sigma_max(A)^2. Zero means: estimate by power iteration per call.
  double lipschitz = 0.0;
  /// Optional starting point in mixture space (copied, projected to >= 0).
  const Eigen::VectorXd* warm_start = nullptr;
};

struct SolveResult {
  Eigen::VectorXd f;     ///< unnormalized nonnegative mixture estimate
  double objective = 0;  ///< |G f - y|^2 + beta * |C f|_1 at the returned f
  double kkt_residual = 0;
  int iterations = 0;
  bool converged = false;
};

/// min_{g >= 0} |A g - y|^2 + beta * 1^T g by accelerated projected
/// gradient (momentum restarts whenever a step would increase the
/// objective). The step length comes from a power-iteration bound on
/// the gradient's Lipschitz constant.
SolveResult solve_nonneg_l1(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                            double beta, const SolveOptions& opts = {});

/// min_{f >= 0} |G f - y|^2 + beta * |C f|_1 for diagonal positive C,
/// via the substitution g = C f: scale the dictionary columns by 1/C_i,
/// solve the plain problem, and unscale the result.
SolveResult solve_weighted_l1(const Eigen::MatrixXd& g,
                              const Eigen::VectorXd& y,
                              const Eigen::VectorXd& weights, double beta,
                              const SolveOptions& opts = {});

/// 2 * sigma_max(A)^2 estimated by power iteration (with a small safety
/// margin), valid as a step bound for every column-shrunk variant of A.
double lipschitz_bound(const Eigen::MatrixXd& a);

/// f / sum(f) when the sum exceeds the sentinel threshold, otherwise the
/// all-zero sentinel unchanged.
Eigen::VectorXd normalize_fractions(const Eigen::VectorXd& f);

/// Indices with fractions strictly above f_th, ascending.
std::vector<int> extract_fo_indices(const Eigen::VectorXd& fractions,
                                    double f_th);

}  // namespace forni
