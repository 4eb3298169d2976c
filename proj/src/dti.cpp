// SPDX-License-Identifier: Apache-2.0

#include "forni/dti.hpp"

#include <algorithm>
#include <cmath>

#include "forni/errors.hpp"

namespace forni {

namespace {

// Row layout of the 6-component design: Dxx, Dxy, Dxz, Dyy, Dyz, Dzz.
Eigen::MatrixXd design_matrix(const GradientScheme& scheme) {
  const int K = scheme.k();
  Eigen::MatrixXd a(K, 6);
  for (int k = 0; k < K; ++k) {
    const Eigen::Vector3d& q = scheme.entries[k].dir;
    const double b = scheme.entries[k].b;
    a(k, 0) = b * q.x() * q.x();
    a(k, 1) = 2.0 * b * q.x() * q.y();
    a(k, 2) = 2.0 * b * q.x() * q.z();
    a(k, 3) = b * q.y() * q.y();
    a(k, 4) = 2.0 * b * q.y() * q.z();
    a(k, 5) = b * q.z() * q.z();
  }
  return a;
}

}  // namespace

TensorFitter::TensorFitter(const GradientScheme& scheme) : k_(scheme.k()) {
  if (k_ < 6) {
    throw InsufficientData(
        "fit_tensor: need at least 6 diffusion-weighted measurements, got " +
        std::to_string(k_));
  }
  qr_.compute(design_matrix(scheme));
  if (qr_.rank() < 6) {
    throw RankDeficient("fit_tensor: degenerate gradient scheme (rank " +
                        std::to_string(qr_.rank()) + " < 6)");
  }
}

Eigen::Matrix3d TensorFitter::fit(const Eigen::VectorXd& y) const {
  if (y.size() != k_) {
    throw InvalidArgument("fit_tensor: signal count does not match scheme");
  }
  Eigen::VectorXd rhs(k_);
  for (int k = 0; k < k_; ++k) {
    const double s = std::clamp(y[k], kSignalFloor, 1.0);
    rhs[k] = -std::log(s);
  }
  const Eigen::VectorXd c = qr_.solve(rhs);
  Eigen::Matrix3d d;
  d << c[0], c[1], c[2],
       c[1], c[3], c[4],
       c[2], c[4], c[5];
  return spd_repair(d);
}

Eigen::Matrix3d fit_tensor(const Eigen::VectorXd& y,
                           const GradientScheme& scheme) {
  return TensorFitter(scheme).fit(y);
}

Eigen::Matrix3d spd_repair(const Eigen::Matrix3d& d, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(d);
  Eigen::Vector3d l = es.eigenvalues();
  for (int i = 0; i < 3; ++i) l[i] = std::max(l[i], floor);
  return es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::Matrix3d spd_log(const Eigen::Matrix3d& d) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(d);
  Eigen::Vector3d l = es.eigenvalues();
  for (int i = 0; i < 3; ++i) {
    if (!(l[i] > 0.0)) {
      throw NumericError("spd_log: matrix is not positive definite");
    }
    l[i] = std::log(l[i]);
  }
  return es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose();
}

double log_euclidean_distance(const Eigen::Matrix3d& a,
                              const Eigen::Matrix3d& b) {
  return log_euclidean_distance_from_logs(spd_log(a), spd_log(b));
}

double log_euclidean_distance_from_logs(const Eigen::Matrix3d& log_a,
                                        const Eigen::Matrix3d& log_b) {
  // Trace(M^2) = |M|_F^2 for symmetric M.
  return (log_a - log_b).norm();
}

double voxel_similarity(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b,
                        double mu) {
  if (!(mu >= 0.0)) throw InvalidArgument("voxel_similarity: mu must be >= 0");
  const double d = log_euclidean_distance(a, b);
  return std::exp(-mu * d * d);
}

double voxel_similarity_from_logs(const Eigen::Matrix3d& log_a,
                                  const Eigen::Matrix3d& log_b, double mu) {
  const double d = log_euclidean_distance_from_logs(log_a, log_b);
  return std::exp(-mu * d * d);
}

FaMd fa_md(const Eigen::Matrix3d& d) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(d);
  const Eigen::Vector3d l = es.eigenvalues();
  FaMd out;
  out.md = l.mean();
  const double num = (l.array() - out.md).matrix().squaredNorm();
  const double den = l.squaredNorm();
  out.fa = den > 0.0 ? std::sqrt(1.5 * num / den) : 0.0;
  return out;
}

}  // namespace forni
