// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "forni/geometry.hpp"
#include "forni/volume.hpp"

namespace forni {

/// Axis-aligned box of voxels sharing one fiber direction.
struct SlabTract {
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{0, 0, 0};  // exclusive
  Eigen::Vector3d direction{1.0, 0.0, 0.0};
};

/// Circular-arc tract in an xy-plane band: voxels whose center lies in
/// the annulus [radius_inner, radius_outer) within the angular range,
/// carrying the local tangent as fiber direction.
struct ArcTract {
  std::array<double, 2> center{0.0, 0.0};  // voxel units, xy
  double radius_inner = 0.0;
  double radius_outer = 0.0;
  double angle_start_deg = 0.0;
  double angle_end_deg = 90.0;
  int z_lo = 0;
  int z_hi = 0;  // exclusive
};

/// Declarative description of the simulated tract geometry, tensor
/// parameters, gradient scheme and signal level.
struct PhantomSpec {
  std::array<int, 3> dims{40, 40, 20};
  std::array<double, 3> voxel_mm{2.0, 2.0, 2.0};
  double lambda1 = 2.0e-3;  // mm^2/s
  double lambda2 = 0.5e-3;
  double s0 = 1000.0;
  int gradient_count = 60;
  double b_value = 1000.0;  // s/mm^2
  int baseline_count = 1;
  bool isotropic_background = false;
  std::vector<SlabTract> slabs;
  std::vector<ArcTract> arcs;

  /// Five tracts on a 40x40x20 grid: straight slabs along x, y and z,
  /// one 45-degree in-plane diagonal slab, and an in-plane quarter arc,
  /// overlapping into two- and three-crossing regions.
  static PhantomSpec default_spec();

  static PhantomSpec load(const std::string& path);
  void save(const std::string& path) const;
};

/// Fiber directions closer than this merge during rasterization.
inline constexpr double kMergeAngleDeg = 5.0;

/// Mean diffusivity of the optional isotropic background (mm^2/s).
inline constexpr double kBackgroundMd = 1.0e-3;

/// Per-voxel true fiber directions with equal mixture fractions.
struct GroundTruth {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::vector<Eigen::Vector3d>> fos;  // x fastest, dense grid

  Volume mask() const;
  std::int64_t occupied() const;
};

/// Throws DataError when a primitive leaves the grid or more than three
/// directions survive merging at a voxel.
GroundTruth rasterize(const PhantomSpec& spec);

/// Gradient table for the spec: `gradient_count` unit directions at
/// b_value plus the baseline count. 60 directions come from the order-4
/// octahedron tessellation with the six axis vertices removed.
GradientScheme phantom_gradients(const PhantomSpec& spec);

/// Noise-free signal volume: channels are the baselines first, then the
/// weighted measurements in scheme order.
Volume synthesize(const GroundTruth& truth, const PhantomSpec& spec,
                  const GradientScheme& scheme);

struct NoiseModel {
  double snr = 20.0;       // sigma = S0 / snr
  std::uint64_t seed = 0;
};

/// In-place Rician corruption: S' = sqrt((S + n1)^2 + n2^2) with
/// iid Gaussian n1, n2 of standard deviation sigma. The noise stream is
/// keyed by (seed, voxel, channel), so the output is reproducible and
/// independent of traversal order.
void add_rician(Volume& vol, double sigma, std::uint64_t seed);

}  // namespace forni
