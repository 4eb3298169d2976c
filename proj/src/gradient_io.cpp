// SPDX-License-Identifier: Apache-2.0

#include "forni/gradient_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "forni/dti.hpp"
#include "forni/errors.hpp"
#include "forni/nifti.hpp"

namespace forni {

namespace {

std::vector<std::vector<double>> read_token_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open gradient table: " + path);
  std::vector<std::vector<double>> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<double> tokens;
    double v;
    while (ss >> v) tokens.push_back(v);
    if (!ss.eof() && ss.fail()) {
      throw DataError(path + ": non-numeric token on line " +
                      std::to_string(lines.size() + 1));
    }
    if (!tokens.empty()) lines.push_back(std::move(tokens));
  }
  return lines;
}

}  // namespace

std::vector<double> read_bvals(const std::string& path) {
  std::vector<double> out;
  for (const auto& line : read_token_lines(path)) {
    out.insert(out.end(), line.begin(), line.end());
  }
  if (out.empty()) throw DataError(path + ": no b-values found");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 0.0) {
      throw DataError(path + ": negative b-value at index " +
                      std::to_string(i));
    }
  }
  return out;
}

std::vector<Eigen::Vector3d> read_bvecs(const std::string& path) {
  const auto lines = read_token_lines(path);
  if (lines.empty()) throw DataError(path + ": no gradient directions found");

  const bool three_rows =
      lines.size() == 3 && lines[0].size() == lines[1].size() &&
      lines[1].size() == lines[2].size();
  std::vector<Eigen::Vector3d> out;
  if (three_rows) {
    for (std::size_t k = 0; k < lines[0].size(); ++k) {
      out.emplace_back(lines[0][k], lines[1][k], lines[2][k]);
    }
    return out;
  }
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].size() != 3) {
      throw DataError(path + ": expected 3 rows of K values or K rows of 3");
    }
    out.emplace_back(lines[k][0], lines[k][1], lines[k][2]);
  }
  return out;
}

void write_bvals(const std::string& path,
                 const std::vector<GradientRow>& rows) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write bvals: " + path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::fprintf(f, "%s%.17g", i ? " " : "", rows[i].b);
  }
  std::fputc('\n', f);
  std::fclose(f);
}

void write_bvecs(const std::string& path,
                 const std::vector<GradientRow>& rows) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write bvecs: " + path);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::fprintf(f, "%s%.17g", i ? " " : "", rows[i].dir[c]);
    }
    std::fputc('\n', f);
  }
  std::fclose(f);
}

DwiData load_dwi(const std::string& dwi_path, const std::string& bval_path,
                 const std::string& bvec_path) {
  Volume raw = read_volume(dwi_path);
  const std::vector<double> bvals = read_bvals(bval_path);
  const std::vector<Eigen::Vector3d> bvecs = read_bvecs(bvec_path);

  const std::size_t n = std::size_t(raw.dim[3]);
  if (bvals.size() != n || bvecs.size() != n) {
    throw DataError("gradient table does not match volume: " + dwi_path +
                    " has " + std::to_string(n) + " volumes, " + bval_path +
                    " has " + std::to_string(bvals.size()) + ", " + bvec_path +
                    " has " + std::to_string(bvecs.size()));
  }

  std::vector<int> baselines, weighted;
  for (std::size_t k = 0; k < n; ++k) {
    (bvals[k] < kBaselineBThreshold ? baselines : weighted).push_back(int(k));
  }
  if (baselines.empty()) {
    throw DataError(dwi_path + ": no baseline (b=0) measurement for S0");
  }
  if (weighted.empty()) {
    throw DataError(dwi_path + ": no diffusion-weighted measurements");
  }

  DwiData out;
  out.scheme.baseline_count = static_cast<int>(baselines.size());
  for (const int k : weighted) {
    const double norm = bvecs[k].norm();
    if (!(norm > 1e-12)) {
      throw DataError(bvec_path + ": zero direction for weighted volume " +
                      std::to_string(k));
    }
    out.scheme.entries.push_back({bvecs[k] / norm, bvals[k]});
  }

  const std::int64_t nvox = raw.nvox();
  out.s0 = Volume::zeros(raw.dim[0], raw.dim[1], raw.dim[2]);
  out.s0.voxel_mm = raw.voxel_mm;
  out.s0.affine = raw.affine;
  for (std::int64_t v = 0; v < nvox; ++v) {
    double sum = 0.0;
    for (const int k : baselines) sum += double(raw.at_linear(v, k));
    out.s0.data[v] = float(sum / double(baselines.size()));
  }

  out.y = Volume::zeros(raw.dim[0], raw.dim[1], raw.dim[2],
                        int(weighted.size()));
  out.y.voxel_mm = raw.voxel_mm;
  out.y.affine = raw.affine;
  for (std::size_t c = 0; c < weighted.size(); ++c) {
    for (std::int64_t v = 0; v < nvox; ++v) {
      const double s0 = double(out.s0.data[v]);
      const double ratio =
          s0 > 0.0 ? double(raw.at_linear(v, weighted[c])) / s0 : 0.0;
      out.y.at_linear(v, int(c)) =
          float(std::clamp(ratio, kSignalFloor, 1.0));
    }
  }
  return out;
}

Volume default_mask_from_s0(const Volume& s0) {
  std::vector<float> sorted = s0.data;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t idx = std::size_t(
      std::llround(0.98 * double(sorted.size() - 1)));
  const float threshold = 0.10f * sorted[idx];
  Volume mask = Volume::zeros(s0.dim[0], s0.dim[1], s0.dim[2]);
  mask.voxel_mm = s0.voxel_mm;
  mask.affine = s0.affine;
  for (std::size_t i = 0; i < s0.data.size(); ++i) {
    mask.data[i] = s0.data[i] > threshold ? 1.f : 0.f;
  }
  return mask;
}

}  // namespace forni
