// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "forni/errors.hpp"

namespace forni {

/// Dense float32 volume, 3D or 4D. Storage order matches the on-disk
/// layout: x fastest, then y, z, and channel slowest.
struct Volume {
  std::array<int, 4> dim{0, 0, 0, 1};         // nx, ny, nz, nc
  std::array<float, 3> voxel_mm{1.f, 1.f, 1.f};
  // Affine rows (x/y/z world coordinate per voxel index); defaults to a
  // voxel-size scaling. Carried through I/O, never interpreted.
  std::array<std::array<float, 4>, 3> affine{{{1, 0, 0, 0},
                                              {0, 1, 0, 0},
                                              {0, 0, 1, 0}}};
  std::vector<float> data;

  static Volume zeros(int nx, int ny, int nz, int nc = 1) {
    Volume v;
    v.dim = {nx, ny, nz, nc};
    v.data.assign(std::size_t(nx) * ny * nz * nc, 0.f);
    return v;
  }

  std::int64_t nvox() const {
    return std::int64_t(dim[0]) * dim[1] * dim[2];
  }
  bool is_3d() const { return dim[3] == 1; }

  std::int64_t index(int x, int y, int z) const {
    return x + std::int64_t(dim[0]) * (y + std::int64_t(dim[1]) * z);
  }

  float& at(int x, int y, int z, int c = 0) {
    return data[index(x, y, z) + std::int64_t(c) * nvox()];
  }
  float at(int x, int y, int z, int c = 0) const {
    return data[index(x, y, z) + std::int64_t(c) * nvox()];
  }

  float& at_linear(std::int64_t voxel, int c = 0) {
    return data[voxel + std::int64_t(c) * nvox()];
  }
  float at_linear(std::int64_t voxel, int c = 0) const {
    return data[voxel + std::int64_t(c) * nvox()];
  }
};

inline bool same_grid(const Volume& a, const Volume& b) {
  return a.dim[0] == b.dim[0] && a.dim[1] == b.dim[1] && a.dim[2] == b.dim[2];
}

}  // namespace forni
