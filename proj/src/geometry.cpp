// SPDX-License-Identifier: Apache-2.0

#include "forni/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>

namespace forni {

UnitDirection UnitDirection::canonical(const Eigen::Vector3d& raw) {
  const double norm = raw.norm();
  if (!(norm > 1e-12) || !raw.allFinite()) {
    throw InvalidArgument("UnitDirection: zero or non-finite vector");
  }
  Eigen::Vector3d v = raw / norm;
  for (int i = 0; i < 3; ++i) {
    if (v[i] != 0.0) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  UnitDirection d;
  d.v = v;
  return d;
}

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double c = std::min(1.0, std::abs(a.dot(b)));
  return std::acos(c);
}

std::vector<UnitDirection> tessellate_octahedron(int order) {
  if (order < 1) throw InvalidArgument("tessellate_octahedron: order must be >= 1");

  // Subdividing each octahedron face into order^2 triangles places the
  // vertices exactly on the integer lattice |a|+|b|+|c| = order, so the
  // mesh never needs to be built: enumerate the lattice shell directly.
  // Antipodal identification keeps the representative whose first
  // nonzero component is positive.
  std::set<std::array<int, 3>> unique;
  for (int a = -order; a <= order; ++a) {
    for (int b = -(order - std::abs(a)); b <= order - std::abs(a); ++b) {
      const int rem = order - std::abs(a) - std::abs(b);
      for (const int c : {-rem, rem}) {
        std::array<int, 3> p{a, b, c};
        for (int i = 0; i < 3; ++i) {
          if (p[i] != 0) {
            if (p[i] < 0) {
              p = {-p[0], -p[1], -p[2]};
            }
            break;
          }
        }
        unique.insert(p);
        if (rem == 0) break;  // c = -0 and c = 0 coincide
      }
    }
  }

  std::vector<UnitDirection> dirs;
  dirs.reserve(unique.size());
  for (const auto& p : unique) {
    dirs.push_back(UnitDirection::canonical(
        Eigen::Vector3d(double(p[0]), double(p[1]), double(p[2]))));
  }
  return dirs;
}

TensorBasis build_basis(std::vector<UnitDirection> directions, double lambda1,
                        double lambda2) {
  if (!(lambda2 > 0.0) || !(lambda1 >= lambda2)) {
    throw InvalidArgument("build_basis: need lambda1 >= lambda2 > 0");
  }
  TensorBasis basis;
  basis.lambda1 = lambda1;
  basis.lambda2 = lambda2;
  basis.tensors.reserve(directions.size());
  for (const UnitDirection& d : directions) {
    basis.tensors.push_back((lambda1 - lambda2) * (d.v * d.v.transpose()) +
                            lambda2 * Eigen::Matrix3d::Identity());
  }
  basis.directions = std::move(directions);
  return basis;
}

TensorBasis make_tessellated_basis(int order, double lambda1, double lambda2) {
  TensorBasis basis = build_basis(tessellate_octahedron(order), lambda1, lambda2);
  basis.tessellation_order = order;
  return basis;
}

Eigen::MatrixXd build_dictionary(const TensorBasis& basis,
                                 const GradientScheme& scheme) {
  if (scheme.k() < 1) {
    throw InvalidArgument("build_dictionary: scheme has no weighted entries");
  }
  const int K = scheme.k();
  const int N = basis.n();
  Eigen::MatrixXd G(K, N);
  for (int k = 0; k < K; ++k) {
    const auto& e = scheme.entries[k];
    if (!(e.b > 0.0)) {
      throw InvalidArgument("build_dictionary: weighted entry with b <= 0");
    }
    for (int i = 0; i < N; ++i) {
      const double q = e.dir.dot(basis.tensors[i] * e.dir);
      G(k, i) = std::exp(-e.b * q);
    }
  }
  return G;
}

namespace {

FILE* open_or_throw(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot open for writing: " + path);
  return f;
}

}  // namespace

void write_directions_csv(const std::string& path,
                          const std::vector<UnitDirection>& dirs) {
  FILE* f = open_or_throw(path);
  for (const auto& d : dirs) {
    std::fprintf(f, "%.17g,%.17g,%.17g\n", d.v.x(), d.v.y(), d.v.z());
  }
  std::fclose(f);
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  FILE* f = open_or_throw(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::fprintf(f, "%s%.17g", c ? "," : "", m(r, c));
    }
    std::fputc('\n', f);
  }
  std::fclose(f);
}

}  // namespace forni
