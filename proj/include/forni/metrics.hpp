// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace forni {

/// Symmetric worst-case angular discrepancy between two direction sets,
/// in degrees: the larger of (mean over estimated of the smallest angle
/// to any true direction) and the same with the roles swapped. Angles
/// use the absolute dot product, so antipodal pairs count as equal.
/// Both sets empty gives 0; exactly one empty gives 90.
double e_fo_degrees(const std::vector<Eigen::Vector3d>& estimated,
                    const std::vector<Eigen::Vector3d>& truth);

struct RegionStats {
  std::string label;
  std::int64_t count = 0;
  double mean_deg = 0.0;
  double std_deg = 0.0;  // population standard deviation
};

struct ErrorReport {
  std::vector<RegionStats> regions;  // per label, then "overall" last
  std::int64_t evaluated = 0;
  std::int64_t unmatched = 0;  // voxels where exactly one set was empty
  std::string std_convention = "population";
};

/// Groups per-voxel errors by integer label; empty regions are omitted.
/// `errors` and `labels` are parallel arrays.
ErrorReport aggregate_errors(const std::vector<double>& errors,
                             const std::vector<int>& labels);

void write_report_csv(const std::string& path, const ErrorReport& report);
void write_report_json(const std::string& path, const ErrorReport& report);

}  // namespace forni
