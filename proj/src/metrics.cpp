// SPDX-License-Identifier: Apache-2.0

#include "forni/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "forni/errors.hpp"
#include "forni/geometry.hpp"

namespace forni {

double e_fo_degrees(const std::vector<Eigen::Vector3d>& estimated,
                    const std::vector<Eigen::Vector3d>& truth) {
  if (estimated.empty() && truth.empty()) return 0.0;
  if (estimated.empty() || truth.empty()) return 90.0;

  const auto mean_min_angle = [](const std::vector<Eigen::Vector3d>& from,
                                 const std::vector<Eigen::Vector3d>& to) {
    double sum = 0.0;
    for (const Eigen::Vector3d& a : from) {
      double best = EIGEN_PI;
      for (const Eigen::Vector3d& b : to) {
        best = std::min(best, angle_between(a, b));
      }
      sum += best;
    }
    return sum / double(from.size());
  };

  const double fwd = mean_min_angle(estimated, truth);
  const double bwd = mean_min_angle(truth, estimated);
  return rad_to_deg(std::max(fwd, bwd));
}

ErrorReport aggregate_errors(const std::vector<double>& errors,
                             const std::vector<int>& labels) {
  if (errors.size() != labels.size()) {
    throw InvalidArgument("aggregate_errors: errors/labels size mismatch");
  }
  ErrorReport report;
  report.evaluated = static_cast<std::int64_t>(errors.size());

  std::map<int, std::pair<std::int64_t, double>> acc;  // count, sum
  for (std::size_t i = 0; i < errors.size(); ++i) {
    auto& a = acc[labels[i]];
    ++a.first;
    a.second += errors[i];
  }
  std::map<int, double> sq;  // sum of squared deviations
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const auto& a = acc[labels[i]];
    const double d = errors[i] - a.second / double(a.first);
    sq[labels[i]] += d * d;
  }
  for (const auto& [label, a] : acc) {
    RegionStats r;
    r.label = std::to_string(label);
    r.count = a.first;
    r.mean_deg = a.second / double(a.first);
    r.std_deg = std::sqrt(sq[label] / double(a.first));
    report.regions.push_back(r);
  }

  if (!errors.empty()) {
    RegionStats all;
    all.label = "overall";
    all.count = report.evaluated;
    double sum = 0.0;
    for (const double e : errors) sum += e;
    all.mean_deg = sum / double(errors.size());
    double dev = 0.0;
    for (const double e : errors) dev += (e - all.mean_deg) * (e - all.mean_deg);
    all.std_deg = std::sqrt(dev / double(errors.size()));
    report.regions.push_back(all);
  }
  return report;
}

void write_report_csv(const std::string& path, const ErrorReport& report) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write report: " + path);
  std::fprintf(f, "label,count,mean_deg,std_deg\n");
  for (const RegionStats& r : report.regions) {
    std::fprintf(f, "%s,%lld,%.10g,%.10g\n", r.label.c_str(),
                 static_cast<long long>(r.count), r.mean_deg, r.std_deg);
  }
  std::fclose(f);
}

void write_report_json(const std::string& path, const ErrorReport& report) {
  nlohmann::json regions = nlohmann::json::array();
  for (const RegionStats& r : report.regions) {
    regions.push_back({{"label", r.label},
                       {"count", r.count},
                       {"mean_deg", r.mean_deg},
                       {"std_deg", r.std_deg}});
  }
  const nlohmann::json j = {{"regions", regions},
                            {"evaluated_voxels", report.evaluated},
                            {"unmatched_voxels", report.unmatched},
                            {"std_convention", report.std_convention}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace forni
