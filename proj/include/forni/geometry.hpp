// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "forni/errors.hpp"

namespace forni {

/// A direction on the unit sphere with antipodal identification:
/// v and -v denote the same direction. The stored representative is
/// canonical (first nonzero component positive), so equal directions
/// compare equal componentwise.
struct UnitDirection {
  Eigen::Vector3d v{0.0, 0.0, 0.0};

  /// Normalizes and canonicalizes. Throws InvalidArgument on (near-)zero
  /// input.
  static UnitDirection canonical(const Eigen::Vector3d& raw);

  double dot(const UnitDirection& o) const { return v.dot(o.v); }
  double abs_dot(const UnitDirection& o) const { return std::abs(v.dot(o.v)); }
};

/// Angle in radians between two directions under antipodal identification.
/// Clamps the dot product so roundoff cannot produce NaN.
double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

inline double deg_to_rad(double d) { return d * (EIGEN_PI / 180.0); }
inline double rad_to_deg(double r) { return r * (180.0 / EIGEN_PI); }

/// Antipodally-unique vertex set of an octahedron whose faces are each
/// subdivided into order^2 congruent triangles, vertices projected onto
/// the unit sphere. Returns 2*order^2 + 1 directions sorted by their
/// integer lattice coordinates; order 12 gives 289.
std::vector<UnitDirection> tessellate_octahedron(int order);

/// The fixed prolate tensor basis: N directions, shared eigenvalues
/// (lambda1 >= lambda2 = lambda3 > 0), and the assembled tensors
/// D_i = (lambda1 - lambda2) v_i v_i^T + lambda2 I.
struct TensorBasis {
  std::vector<UnitDirection> directions;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<Eigen::Matrix3d> tensors;
  int tessellation_order = 0;  // 0 when built from explicit directions

  int n() const { return static_cast<int>(directions.size()); }
};

TensorBasis build_basis(std::vector<UnitDirection> directions, double lambda1,
                        double lambda2);

/// build_basis over an order-`order` octahedron tessellation.
TensorBasis make_tessellated_basis(int order, double lambda1, double lambda2);

/// Diffusion gradient table. `entries` holds the K diffusion-weighted
/// measurements (b > 0); baseline (b = 0) acquisitions are counted
/// separately and only used for signal normalization.
struct GradientScheme {
  struct Entry {
    Eigen::Vector3d dir{0.0, 0.0, 0.0};  // unit gradient direction
    double b = 0.0;                      // s/mm^2
  };
  std::vector<Entry> entries;
  int baseline_count = 0;

  int k() const { return static_cast<int>(entries.size()); }
};

/// K x N attenuation dictionary, G_ki = exp(-b_k q_k^T D_i q_k) over the
/// diffusion-weighted entries. Every entry lies in (0, 1].
Eigen::MatrixXd build_dictionary(const TensorBasis& basis,
                                 const GradientScheme& scheme);

/// CSV dumps with 17 significant digits, for cross-implementation checks.
void write_directions_csv(const std::string& path,
                          const std::vector<UnitDirection>& dirs);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

}  // namespace forni
