// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "forni/estimate.hpp"
#include "forni/geometry.hpp"

namespace forni {

/// Orientation slots per voxel in the serialized form.
inline constexpr int kFoMaxSlots = 5;

/// An orientation field on disk is the companion pair
///   <stem>_dirs.nii   4D float32, 3 * kFoMaxSlots channels, zero-padded
///   <stem>_count.nii  3D float32 orientation counts
/// with a JSON sidecar <stem>_meta.json.
struct FOFieldPaths {
  std::string dirs, count, meta;
  explicit FOFieldPaths(const std::string& stem)
      : dirs(stem + "_dirs.nii"),
        count(stem + "_count.nii"),
        meta(stem + "_meta.json") {}
};

/// Saves a dense grid of direction sets. Throws when a voxel carries
/// more than kFoMaxSlots orientations.
void save_fo_sets(const std::string& stem, const std::array<int, 3>& dims,
                  const std::vector<std::vector<Eigen::Vector3d>>& fos,
                  const nlohmann::json& meta);

/// Saves an estimated field by resolving basis indices to directions.
void save_fo_field(const std::string& stem, const FOField& field,
                   const TensorBasis& basis, const nlohmann::json& extra_meta);

struct LoadedFOField {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::vector<Eigen::Vector3d>> fos;  // dense grid, x fastest
  nlohmann::json meta;
};

/// Loads and validates a field: counts must match the stored triples and
/// each triple must be unit-norm within 1e-6.
LoadedFOField load_fo_field(const std::string& stem);

/// Dense mixture-fraction volume (one channel per basis direction).
Volume fractions_volume(const FOField& field, int n_basis);

}  // namespace forni
