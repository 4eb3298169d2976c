// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include "forni/geometry.hpp"

namespace forni {

/// Eigenvalue floor applied before matrix logarithms (mm^2/s).
inline constexpr double kEigenvalueFloor = 1e-6;

/// Normalized signals are clamped into [kSignalFloor, 1] before the
/// log-linearization.
inline constexpr double kSignalFloor = 1e-6;

/// Log-linear least-squares tensor fit shared across voxels: the design
/// matrix depends only on the gradient scheme, so its factorization is
/// built once and reused.
class TensorFitter {
 public:
  /// Throws InsufficientData for K < 6 and RankDeficient when the
  /// gradient scheme cannot determine all six tensor components.
  explicit TensorFitter(const GradientScheme& scheme);

  /// Fits one voxel from K normalized signals (clamped internally) and
  /// returns the SPD-repaired tensor.
  Eigen::Matrix3d fit(const Eigen::VectorXd& y) const;

 private:
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
  int k_ = 0;
};

Eigen::Matrix3d fit_tensor(const Eigen::VectorXd& y,
                           const GradientScheme& scheme);

/// Clamps eigenvalues to `floor` and recomposes.
Eigen::Matrix3d spd_repair(const Eigen::Matrix3d& d,
                           double floor = kEigenvalueFloor);

/// Matrix logarithm of an SPD matrix via eigendecomposition. Throws
/// NumericError when an eigenvalue is not positive.
Eigen::Matrix3d spd_log(const Eigen::Matrix3d& d);

/// d(A, B) = sqrt(Trace((log A - log B)^2)) — the Frobenius norm of the
/// difference of matrix logarithms.
double log_euclidean_distance(const Eigen::Matrix3d& a,
                              const Eigen::Matrix3d& b);

/// Same metric evaluated on precomputed matrix logarithms.
double log_euclidean_distance_from_logs(const Eigen::Matrix3d& log_a,
                                        const Eigen::Matrix3d& log_b);

/// w = exp(-mu * d(A, B)^2), in (0, 1].
double voxel_similarity(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b,
                        double mu);

double voxel_similarity_from_logs(const Eigen::Matrix3d& log_a,
                                  const Eigen::Matrix3d& log_b, double mu);

struct FaMd {
  double fa = 0.0;
  double md = 0.0;
};

/// Fractional anisotropy and mean diffusivity from the eigenvalues.
FaMd fa_md(const Eigen::Matrix3d& d);

}  // namespace forni
