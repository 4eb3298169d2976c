// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "forni/geometry.hpp"
#include "forni/volume.hpp"

namespace forni {

/// b-values below this count as baselines (s/mm^2).
inline constexpr double kBaselineBThreshold = 50.0;

/// One raw gradient-table row, in acquisition order.
struct GradientRow {
  Eigen::Vector3d dir{0.0, 0.0, 0.0};
  double b = 0.0;
};

/// Whitespace-separated b-values, any line structure.
std::vector<double> read_bvals(const std::string& path);

/// Gradient directions: either three rows of K values or K rows of
/// three values (auto-detected; rows win the 3x3 tie).
std::vector<Eigen::Vector3d> read_bvecs(const std::string& path);

void write_bvals(const std::string& path, const std::vector<GradientRow>& rows);
void write_bvecs(const std::string& path, const std::vector<GradientRow>& rows);

struct DwiData {
  Volume y;               ///< normalized signals, one channel per weighted entry
  Volume s0;              ///< mean baseline signal
  GradientScheme scheme;  ///< weighted entries in acquisition order
};

/// Loads a 4D DWI volume with its gradient table, averages the
/// baselines into S0, and normalizes the weighted signals into
/// [kSignalFloor, 1].
DwiData load_dwi(const std::string& dwi_path, const std::string& bval_path,
                 const std::string& bvec_path);

/// Voxels whose mean baseline exceeds 10% of the volume's 98th
/// percentile baseline.
Volume default_mask_from_s0(const Volume& s0);

}  // namespace forni
