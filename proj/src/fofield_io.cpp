// SPDX-License-Identifier: Apache-2.0

#include "forni/fofield_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <fstream>

#include "forni/errors.hpp"
#include "forni/nifti.hpp"

namespace forni {

void save_fo_sets(const std::string& stem, const std::array<int, 3>& dims,
                  const std::vector<std::vector<Eigen::Vector3d>>& fos,
                  const nlohmann::json& meta) {
  const auto [nx, ny, nz] = dims;
  const std::size_t nvox = std::size_t(nx) * ny * nz;
  if (fos.size() != nvox) {
    throw InvalidArgument("save_fo_sets: grid does not match direction sets");
  }
  Volume dirs = Volume::zeros(nx, ny, nz, 3 * kFoMaxSlots);
  Volume count = Volume::zeros(nx, ny, nz);
  for (std::size_t v = 0; v < nvox; ++v) {
    const auto& set = fos[v];
    if (set.size() > std::size_t(kFoMaxSlots)) {
      throw DataError("save_fo_sets: voxel with more than " +
                      std::to_string(kFoMaxSlots) + " orientations");
    }
    count.data[v] = float(set.size());
    for (std::size_t j = 0; j < set.size(); ++j) {
      for (int c = 0; c < 3; ++c) {
        dirs.at_linear(std::int64_t(v), int(3 * j) + c) = float(set[j][c]);
      }
    }
  }

  const FOFieldPaths paths(stem);
  write_volume(paths.dirs, dirs);
  write_volume(paths.count, count);

  nlohmann::json j = meta;
  j["format"] = "fo-field";
  j["format_version"] = 1;
  j["f_max"] = kFoMaxSlots;
  j["grid"] = dims;
  std::ofstream out(paths.meta);
  if (!out) throw DataError("cannot write metadata: " + paths.meta);
  out << j.dump(2) << "\n";
}

void save_fo_field(const std::string& stem, const FOField& field,
                   const TensorBasis& basis, const nlohmann::json& extra_meta) {
  const auto [nx, ny, nz] = field.dims;
  std::vector<std::vector<Eigen::Vector3d>> fos(std::size_t(nx) * ny * nz);
  std::int64_t truncated = 0;
  for (std::size_t s = 0; s < field.size(); ++s) {
    std::vector<int> indices = field.fo_indices[s];
    if (indices.size() > std::size_t(kFoMaxSlots)) {
      // Degenerate noisy voxels can push more fractions over the
      // threshold than the file has slots; keep the largest ones.
      ++truncated;
      std::map<int, double> fraction;
      for (const SparseEntry& e : field.fractions[s]) {
        fraction[e.index] = e.value;
      }
      std::stable_sort(indices.begin(), indices.end(),
                       [&](int a, int b) { return fraction[a] > fraction[b]; });
      indices.resize(std::size_t(kFoMaxSlots));
      std::sort(indices.begin(), indices.end());
    }
    auto& set = fos[std::size_t(field.voxels[s])];
    for (const int i : indices) set.push_back(basis.directions[i].v);
  }
  nlohmann::json meta = extra_meta;
  meta["truncated_voxels"] = truncated;
  save_fo_sets(stem, field.dims, fos, meta);
}

LoadedFOField load_fo_field(const std::string& stem) {
  const FOFieldPaths paths(stem);
  const Volume dirs = read_volume(paths.dirs);
  const Volume count = read_volume(paths.count);
  if (!same_grid(dirs, count) || !count.is_3d()) {
    throw DataError(stem + ": direction/count grids do not match");
  }
  if (dirs.dim[3] % 3 != 0) {
    throw DataError(paths.dirs + ": channel count is not a multiple of 3");
  }
  const int slots = dirs.dim[3] / 3;

  LoadedFOField out;
  out.dims = {dirs.dim[0], dirs.dim[1], dirs.dim[2]};
  const std::int64_t nvox = dirs.nvox();
  out.fos.resize(std::size_t(nvox));
  for (std::int64_t v = 0; v < nvox; ++v) {
    auto& set = out.fos[std::size_t(v)];
    for (int j = 0; j < slots; ++j) {
      const Eigen::Vector3d d(dirs.at_linear(v, 3 * j),
                              dirs.at_linear(v, 3 * j + 1),
                              dirs.at_linear(v, 3 * j + 2));
      if (d.isZero()) continue;
      if (std::abs(d.norm() - 1.0) > 1e-6) {
        throw DataError(paths.dirs + ": non-unit orientation at voxel " +
                        std::to_string(v));
      }
      // Renormalize away the float32 quantization so angles between
      // identical stored directions are exactly zero.
      set.push_back(d.normalized());
    }
    if (float(set.size()) != count.data[std::size_t(v)]) {
      throw DataError(stem + ": count volume disagrees with stored triples " +
                      "at voxel " + std::to_string(v));
    }
  }

  std::ifstream meta(paths.meta);
  if (meta) {
    try {
      meta >> out.meta;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(paths.meta + ": " + e.what());
    }
  }
  return out;
}

Volume fractions_volume(const FOField& field, int n_basis) {
  const auto [nx, ny, nz] = field.dims;
  Volume vol = Volume::zeros(nx, ny, nz, n_basis);
  for (std::size_t s = 0; s < field.size(); ++s) {
    for (const SparseEntry& e : field.fractions[s]) {
      vol.at_linear(field.voxels[s], e.index) = float(e.value);
    }
  }
  return vol;
}

}  // namespace forni
