// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "forni/geometry.hpp"
#include "forni/volume.hpp"

namespace forni {

struct EstimationConfig {
  double alpha = 0.8;       ///< neighbor influence, in [0, 1); 0 = voxelwise
  double beta = 0.5;        ///< sparsity penalty, > 0
  double mu = 3.0;          ///< tensor-distance sharpness, >= 0
  double f_th = 0.1;        ///< mixture-fraction threshold for orientations
  double theta_r_deg = 20.0;///< local-maximum radius for likely orientations
  int np = 8;               ///< voxels solved jointly per group
  int t_max = 10;           ///< maximum sweeps over the volume
  double eps_conv = 0.001;  ///< stop when <= this fraction of voxels change
  double solver_tol = 1e-6;
  int solver_max_iter = 2000;
  int workers = 0;          ///< worker threads per group; <= 0 picks
                            ///< min(np, hardware concurrency)
  double init_beta = -1.0;  ///< beta for the voxelwise init pass; < 0 = beta
  bool collect_voxel_diagnostics = false;
};

/// One entry of a sparse nonnegative vector over the basis.
struct SparseEntry {
  int index;
  double value;
};
using SparseVec = std::vector<SparseEntry>;

/// Estimated orientations and mixture fractions for the masked voxels of
/// one grid. Voxels are kept in sweep order: ascending linear index,
/// i.e. lexicographic (z, y, x) with x fastest.
struct FOField {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::int64_t> voxels;           // masked linear indices
  std::vector<std::vector<int>> fo_indices;   // sorted basis indices
  std::vector<SparseVec> fractions;           // normalized; empty = sentinel

  std::size_t size() const { return voxels.size(); }
};

struct SweepStats {
  int sweep = 0;               // 0 is the voxelwise init pass
  double objective = 0.0;      // sum of per-voxel subproblem objectives
  double changed_fraction = 0.0;
  int unconverged = 0;
  double seconds = 0.0;
};

struct VoxelDiagnostic {
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct EstimateResult {
  FOField field;
  std::vector<SweepStats> sweeps;
  std::vector<VoxelDiagnostic> voxel_diagnostics;  // when requested
  int unconverged_voxels = 0;   // from the final sweep
  bool converged = false;       // early-terminated before t_max
};

/// Joint orientation estimation over a masked volume: a voxelwise init
/// pass (unless `init` is given), then Gauss-Seidel sweeps in groups of
/// `np` voxels whose subproblems run concurrently. The output does not
/// depend on the worker count.
///
/// `y` is the normalized 4D signal volume (K channels matching
/// scheme.entries) and `mask` a 3D volume, nonzero = inside.
EstimateResult estimate(const Volume& y, const Volume& mask,
                        const TensorBasis& basis, const Eigen::MatrixXd& g,
                        const GradientScheme& scheme,
                        const EstimationConfig& config,
                        const FOField* init = nullptr);

/// One voxelwise pass with uniform weights and decoupled subproblems —
/// the initialization of `estimate` and the alpha = 0 baseline. Uses
/// config.init_beta when set, config.beta otherwise.
EstimateResult cfari_pass(const Volume& y, const Volume& mask,
                          const TensorBasis& basis, const Eigen::MatrixXd& g,
                          const GradientScheme& scheme,
                          const EstimationConfig& config);

/// Masked linear voxel indices in sweep order.
std::vector<std::int64_t> masked_voxels(const Volume& mask);

/// Dense normalized fraction vector of one voxel (zeros for the sentinel).
Eigen::VectorXd dense_fractions(const FOField& field, std::size_t slot, int n);

}  // namespace forni
