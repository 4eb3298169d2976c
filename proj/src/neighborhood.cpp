// SPDX-License-Identifier: Apache-2.0

#include "forni/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forni/errors.hpp"

namespace forni {

Eigen::VectorXd basis_neighbor_similarity(
    double w, const std::vector<Eigen::Vector3d>& neighbor_fos,
    const TensorBasis& basis) {
  const int n = basis.n();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  if (neighbor_fos.empty()) return r;
  for (int i = 0; i < n; ++i) {
    double best = 0.0;
    for (const Eigen::Vector3d& fo : neighbor_fos) {
      best = std::max(best, std::abs(basis.directions[i].v.dot(fo)));
    }
    r[i] = w * best;
  }
  return r;
}

Eigen::VectorXd aggregate_similarity(
    const std::vector<NeighborContribution>& neighbors,
    const TensorBasis& basis) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(basis.n());
  for (const NeighborContribution& nb : neighbors) {
    if (nb.fos.empty()) continue;
    r += basis_neighbor_similarity(nb.w, nb.fos, basis);
  }
  return r;
}

std::vector<int> extract_likely_fos(const Eigen::VectorXd& r,
                                    const TensorBasis& basis,
                                    double theta_r_deg) {
  if (!(theta_r_deg > 0.0)) {
    throw InvalidArgument("extract_likely_fos: theta_r must be > 0");
  }
  const int n = basis.n();
  const double theta = deg_to_rad(theta_r_deg);
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    bool is_max = true;
    for (int j = 0; j < n && is_max; ++j) {
      if (j == i) continue;
      if (angle_between(basis.directions[i].v, basis.directions[j].v) <= theta &&
          r[i] < r[j]) {
        is_max = false;
      }
    }
    if (is_max) out.push_back(i);
  }
  return out;
}

Eigen::VectorXd build_weights(const std::vector<Eigen::Vector3d>& likely_fos,
                              const TensorBasis& basis, double alpha) {
  if (!(alpha >= 0.0) || alpha >= 1.0) {
    throw InvalidArgument("build_weights: alpha must lie in [0, 1)");
  }
  const int n = basis.n();
  if (likely_fos.empty()) return Eigen::VectorXd::Ones(n);
  Eigen::VectorXd c(n);
  double cmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double best = 0.0;
    for (const Eigen::Vector3d& u : likely_fos) {
      best = std::max(best, std::abs(basis.directions[i].v.dot(u)));
    }
    c[i] = 1.0 - alpha * best;
    cmin = std::min(cmin, c[i]);
  }
  return c / cmin;
}

BasisCache::BasisCache(const TensorBasis& basis, double theta_r_deg) {
  if (!(theta_r_deg > 0.0)) {
    throw InvalidArgument("BasisCache: theta_r must be > 0");
  }
  const int n = basis.n();
  abs_dot.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      abs_dot(i, j) = std::abs(basis.directions[i].v.dot(basis.directions[j].v));
    }
  }
  const double theta = deg_to_rad(theta_r_deg);
  theta_neighbors.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (angle_between(basis.directions[i].v, basis.directions[j].v) <= theta) {
        theta_neighbors[i].push_back(j);
      }
    }
  }
}

void accumulate_similarity_indexed(double w, const std::vector<int>& fo_indices,
                                   const BasisCache& cache,
                                   Eigen::VectorXd& r) {
  if (fo_indices.empty()) return;
  const int n = cache.n();
  for (int i = 0; i < n; ++i) {
    double best = 0.0;
    for (const int j : fo_indices) best = std::max(best, cache.abs_dot(i, j));
    r[i] += w * best;
  }
}

std::vector<int> extract_likely_fos_cached(const Eigen::VectorXd& r,
                                           const BasisCache& cache) {
  const int n = cache.n();
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    bool is_max = true;
    for (const int j : cache.theta_neighbors[i]) {
      if (r[i] < r[j]) {
        is_max = false;
        break;
      }
    }
    if (is_max) out.push_back(i);
  }
  return out;
}

Eigen::VectorXd build_weights_indexed(const std::vector<int>& likely_indices,
                                      const BasisCache& cache, double alpha) {
  const int n = cache.n();
  if (likely_indices.empty()) return Eigen::VectorXd::Ones(n);
  Eigen::VectorXd c(n);
  double cmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double best = 0.0;
    for (const int p : likely_indices) best = std::max(best, cache.abs_dot(i, p));
    c[i] = 1.0 - alpha * best;
    cmin = std::min(cmin, c[i]);
  }
  return c / cmin;
}

}  // namespace forni
