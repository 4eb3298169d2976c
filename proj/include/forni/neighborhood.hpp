// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "forni/geometry.hpp"

namespace forni {

/// r(i) = w * max_j |v_i . fo_j| for one neighbor; the zero vector when
/// the neighbor has no orientations.
Eigen::VectorXd basis_neighbor_similarity(
    double w, const std::vector<Eigen::Vector3d>& neighbor_fos,
    const TensorBasis& basis);

struct NeighborContribution {
  double w = 0.0;                       // voxel similarity in (0, 1]
  std::vector<Eigen::Vector3d> fos;     // that neighbor's orientations
};

/// R(i) = sum of basis-neighbor similarities over the contributing
/// neighbors. Missing neighbors simply do not appear in the list.
Eigen::VectorXd aggregate_similarity(
    const std::vector<NeighborContribution>& neighbors,
    const TensorBasis& basis);

/// Indices i whose R(i) is maximal among all directions within
/// theta_r degrees (ties included, so a constant profile returns all N).
std::vector<int> extract_likely_fos(const Eigen::VectorXd& r,
                                    const TensorBasis& basis,
                                    double theta_r_deg);

/// Diagonal weights C_i = (1 - alpha max_p |v_i . u_p|) normalized by the
/// smallest entry, so min_i C_i = 1. An empty likely set yields uniform
/// weights. Requires alpha in [0, 1).
Eigen::VectorXd build_weights(const std::vector<Eigen::Vector3d>& likely_fos,
                              const TensorBasis& basis, double alpha);

/// Precomputed pairwise geometry of a basis, shared across voxels:
/// the |v_i . v_j| table and, per direction, the list of directions
/// within theta_r degrees.
struct BasisCache {
  BasisCache(const TensorBasis& basis, double theta_r_deg);

  Eigen::MatrixXd abs_dot;                        // N x N
  std::vector<std::vector<int>> theta_neighbors;  // excludes i itself

  int n() const { return static_cast<int>(abs_dot.rows()); }
};

/// Index-based variants used in the sweep inner loop; they produce
/// exactly the same values as the general forms above when the
/// orientations are basis directions.
void accumulate_similarity_indexed(double w, const std::vector<int>& fo_indices,
                                   const BasisCache& cache, Eigen::VectorXd& r);
std::vector<int> extract_likely_fos_cached(const Eigen::VectorXd& r,
                                           const BasisCache& cache);
Eigen::VectorXd build_weights_indexed(const std::vector<int>& likely_indices,
                                      const BasisCache& cache, double alpha);

}  // namespace forni
