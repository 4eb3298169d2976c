// SPDX-License-Identifier: Apache-2.0

#include "forni/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "forni/errors.hpp"

namespace forni {

using nlohmann::json;

PhantomSpec PhantomSpec::default_spec() {
  PhantomSpec s;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  s.slabs = {
      {{0, 15, 5}, {40, 21, 10}, {1.0, 0.0, 0.0}},
      {{15, 0, 5}, {21, 40, 10}, {0.0, 1.0, 0.0}},
      {{16, 16, 0}, {20, 20, 16}, {0.0, 0.0, 1.0}},
      {{28, 0, 5}, {34, 40, 10}, {inv_sqrt2, inv_sqrt2, 0.0}},
  };
  s.arcs = {{{2.0, 2.0}, 24.0, 29.0, 5.0, 85.0, 11, 15}};
  return s;
}

PhantomSpec PhantomSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open phantom spec: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("phantom spec " + path + ": " + e.what());
  }
  PhantomSpec s;
  s.slabs.clear();
  s.arcs.clear();
  try {
    if (j.contains("grid")) j.at("grid").get_to(s.dims);
    if (j.contains("voxel_size_mm")) j.at("voxel_size_mm").get_to(s.voxel_mm);
    if (j.contains("lambda1")) s.lambda1 = j.at("lambda1").get<double>();
    if (j.contains("lambda2")) s.lambda2 = j.at("lambda2").get<double>();
    if (j.contains("s0")) s.s0 = j.at("s0").get<double>();
    if (j.contains("gradients")) {
      const json& g = j.at("gradients");
      if (g.contains("count")) s.gradient_count = g.at("count").get<int>();
      if (g.contains("b_value")) s.b_value = g.at("b_value").get<double>();
      if (g.contains("baselines")) s.baseline_count = g.at("baselines").get<int>();
    }
    if (j.contains("isotropic_background")) {
      s.isotropic_background = j.at("isotropic_background").get<bool>();
    }
    for (const json& t : j.value("tracts", json::array())) {
      const std::string type = t.at("type").get<std::string>();
      if (type == "slab") {
        SlabTract slab;
        t.at("lo").get_to(slab.lo);
        t.at("hi").get_to(slab.hi);
        std::array<double, 3> d{};
        t.at("direction").get_to(d);
        slab.direction = Eigen::Vector3d(d[0], d[1], d[2]);
        s.slabs.push_back(slab);
      } else if (type == "arc") {
        ArcTract arc;
        t.at("center").get_to(arc.center);
        arc.radius_inner = t.at("radius_inner").get<double>();
        arc.radius_outer = t.at("radius_outer").get<double>();
        arc.angle_start_deg = t.at("angle_start_deg").get<double>();
        arc.angle_end_deg = t.at("angle_end_deg").get<double>();
        arc.z_lo = t.at("z_lo").get<int>();
        arc.z_hi = t.at("z_hi").get<int>();
        s.arcs.push_back(arc);
      } else {
        throw DataError("phantom spec: unknown tract type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw DataError("phantom spec " + path + ": " + e.what());
  }
  return s;
}

void PhantomSpec::save(const std::string& path) const {
  json tracts = json::array();
  for (const SlabTract& t : slabs) {
    tracts.push_back({{"type", "slab"},
                      {"lo", t.lo},
                      {"hi", t.hi},
                      {"direction", {t.direction.x(), t.direction.y(),
                                     t.direction.z()}}});
  }
  for (const ArcTract& a : arcs) {
    tracts.push_back({{"type", "arc"},
                      {"center", a.center},
                      {"radius_inner", a.radius_inner},
                      {"radius_outer", a.radius_outer},
                      {"angle_start_deg", a.angle_start_deg},
                      {"angle_end_deg", a.angle_end_deg},
                      {"z_lo", a.z_lo},
                      {"z_hi", a.z_hi}});
  }
  const json j = {{"grid", dims},
                  {"voxel_size_mm", voxel_mm},
                  {"lambda1", lambda1},
                  {"lambda2", lambda2},
                  {"s0", s0},
                  {"gradients",
                   {{"count", gradient_count},
                    {"b_value", b_value},
                    {"baselines", baseline_count}}},
                  {"isotropic_background", isotropic_background},
                  {"tracts", tracts}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write phantom spec: " + path);
  out << j.dump(2) << "\n";
}

Volume GroundTruth::mask() const {
  Volume m = Volume::zeros(dims[0], dims[1], dims[2]);
  for (std::size_t i = 0; i < fos.size(); ++i) {
    m.data[i] = fos[i].empty() ? 0.f : 1.f;
  }
  return m;
}

std::int64_t GroundTruth::occupied() const {
  std::int64_t n = 0;
  for (const auto& f : fos) n += f.empty() ? 0 : 1;
  return n;
}

GroundTruth rasterize(const PhantomSpec& spec) {
  const auto [nx, ny, nz] = spec.dims;
  for (const SlabTract& t : spec.slabs) {
    for (int i = 0; i < 3; ++i) {
      if (t.lo[i] < 0 || t.hi[i] > spec.dims[i] || t.lo[i] >= t.hi[i]) {
        throw DataError("phantom spec: slab does not fit in grid");
      }
    }
    if (!(t.direction.norm() > 1e-12)) {
      throw DataError("phantom spec: slab with zero direction");
    }
  }
  for (const ArcTract& a : spec.arcs) {
    if (a.z_lo < 0 || a.z_hi > nz || a.z_lo >= a.z_hi ||
        !(a.radius_inner >= 0.0) || !(a.radius_outer > a.radius_inner)) {
      throw DataError("phantom spec: arc does not fit in grid");
    }
  }

  GroundTruth truth;
  truth.dims = spec.dims;
  truth.fos.assign(std::size_t(nx) * ny * nz, {});

  const double merge = deg_to_rad(kMergeAngleDeg);
  const auto add_dir = [&](std::vector<Eigen::Vector3d>& set,
                           const Eigen::Vector3d& raw) {
    const Eigen::Vector3d d = raw.normalized();
    for (const Eigen::Vector3d& have : set) {
      if (angle_between(have, d) < merge) return;
    }
    set.push_back(d);
  };

  std::int64_t idx = 0;
  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x, ++idx) {
        auto& set = truth.fos[idx];
        for (const SlabTract& t : spec.slabs) {
          if (x >= t.lo[0] && x < t.hi[0] && y >= t.lo[1] && y < t.hi[1] &&
              z >= t.lo[2] && z < t.hi[2]) {
            add_dir(set, t.direction);
          }
        }
        for (const ArcTract& a : spec.arcs) {
          if (z < a.z_lo || z >= a.z_hi) continue;
          const double dx = (x + 0.5) - a.center[0];
          const double dy = (y + 0.5) - a.center[1];
          const double rho = std::hypot(dx, dy);
          if (rho < a.radius_inner || rho >= a.radius_outer) continue;
          double phi = rad_to_deg(std::atan2(dy, dx));
          if (phi < 0.0) phi += 360.0;
          if (phi < a.angle_start_deg || phi > a.angle_end_deg) continue;
          add_dir(set, Eigen::Vector3d(-dy / rho, dx / rho, 0.0));
        }
        if (set.size() > 3) {
          throw DataError(
              "phantom spec: more than 3 crossing directions at voxel (" +
              std::to_string(x) + "," + std::to_string(y) + "," +
              std::to_string(z) + ")");
        }
      }
    }
  }
  return truth;
}

namespace {

// Full-sphere vertices of the order-n octahedron subdivision (4n^2 + 2
// signed lattice points), sorted by their integer coordinates.
std::vector<Eigen::Vector3d> full_shell(int order) {
  std::set<std::array<int, 3>> pts;
  for (int a = -order; a <= order; ++a) {
    for (int b = -(order - std::abs(a)); b <= order - std::abs(a); ++b) {
      const int rem = order - std::abs(a) - std::abs(b);
      pts.insert({a, b, rem});
      pts.insert({a, b, -rem});
    }
  }
  std::vector<Eigen::Vector3d> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    out.push_back(
        Eigen::Vector3d(double(p[0]), double(p[1]), double(p[2])).normalized());
  }
  return out;
}

bool is_axis(const Eigen::Vector3d& v) {
  int nonzero = 0;
  for (int i = 0; i < 3; ++i) nonzero += v[i] != 0.0 ? 1 : 0;
  return nonzero == 1;
}

}  // namespace

GradientScheme phantom_gradients(const PhantomSpec& spec) {
  const int count = spec.gradient_count;
  if (count < 6) throw DataError("phantom: need at least 6 gradient directions");
  if (spec.baseline_count < 1) {
    throw DataError("phantom: need at least one baseline acquisition");
  }
  if (!(spec.b_value > 0.0)) throw DataError("phantom: b_value must be > 0");

  std::vector<Eigen::Vector3d> dirs;
  for (int order = 1; order < 64; ++order) {
    const int full = 4 * order * order + 2;
    if (full - 6 == count) {  // drop the six +-axis vertices
      for (const Eigen::Vector3d& v : full_shell(order)) {
        if (!is_axis(v)) dirs.push_back(v);
      }
      break;
    }
    if (full == count) {
      dirs = full_shell(order);
      break;
    }
    if (full >= count + 6) {
      // Greedy max-min-angle subset of the next shell that fits.
      const std::vector<Eigen::Vector3d> shell = full_shell(order);
      std::vector<int> chosen{0};
      std::vector<double> best(shell.size(),
                               std::numeric_limits<double>::infinity());
      while (static_cast<int>(chosen.size()) < count) {
        const Eigen::Vector3d& last = shell[chosen.back()];
        int arg = -1;
        double arg_angle = -1.0;
        for (std::size_t i = 0; i < shell.size(); ++i) {
          best[i] = std::min(best[i], angle_between(shell[i], last));
          if (best[i] > arg_angle) {
            arg_angle = best[i];
            arg = static_cast<int>(i);
          }
        }
        chosen.push_back(arg);
      }
      for (const int i : chosen) dirs.push_back(shell[i]);
      break;
    }
  }
  if (static_cast<int>(dirs.size()) != count) {
    throw DataError("phantom: cannot build gradient table of size " +
                    std::to_string(count));
  }

  GradientScheme scheme;
  scheme.baseline_count = spec.baseline_count;
  scheme.entries.reserve(count);
  for (const Eigen::Vector3d& v : dirs) {
    scheme.entries.push_back({v, spec.b_value});
  }
  return scheme;
}

Volume synthesize(const GroundTruth& truth, const PhantomSpec& spec,
                  const GradientScheme& scheme) {
  const auto [nx, ny, nz] = truth.dims;
  const int K = scheme.k();
  const int nb = scheme.baseline_count;
  Volume vol = Volume::zeros(nx, ny, nz, nb + K);
  for (int i = 0; i < 3; ++i) {
    vol.voxel_mm[i] = float(spec.voxel_mm[i]);
    vol.affine[i] = {0, 0, 0, 0};
    vol.affine[i][i] = float(spec.voxel_mm[i]);
  }

  const Eigen::Matrix3d iso = kBackgroundMd * Eigen::Matrix3d::Identity();
  const std::int64_t nvox = vol.nvox();
  for (std::int64_t v = 0; v < nvox; ++v) {
    const auto& fos = truth.fos[v];
    if (fos.empty() && !spec.isotropic_background) continue;
    for (int c = 0; c < nb; ++c) vol.at_linear(v, c) = float(spec.s0);
    for (int k = 0; k < K; ++k) {
      const Eigen::Vector3d& q = scheme.entries[k].dir;
      const double b = scheme.entries[k].b;
      double atten = 0.0;
      if (fos.empty()) {
        atten = std::exp(-b * q.dot(iso * q));
      } else {
        const double frac = 1.0 / double(fos.size());
        for (const Eigen::Vector3d& d : fos) {
          const double qd = q.dot(d);
          const double quad =
              (spec.lambda1 - spec.lambda2) * qd * qd + spec.lambda2;
          atten += frac * std::exp(-b * quad);
        }
      }
      vol.at_linear(v, nb + k) = float(spec.s0 * atten);
    }
  }
  return vol;
}

namespace {

struct CounterRng {
  std::uint64_t s;

  CounterRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    s = mix(seed ^ (a * 0x9E3779B97F4A7C15ull));
    s = mix(s ^ (b * 0xC2B2AE3D27D4EB4Full));
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    s += 0x9E3779B97F4A7C15ull;
    return mix(s);
  }

  double uniform01() {  // (0, 1]
    return double((next() >> 11) + 1) * 0x1.0p-53;
  }
};

}  // namespace

void add_rician(Volume& vol, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("add_rician: sigma must be >= 0");
  if (sigma == 0.0) return;
  const std::int64_t nvox = vol.nvox();
  const double two_pi = 2.0 * EIGEN_PI;
  for (int c = 0; c < vol.dim[3]; ++c) {
    for (std::int64_t v = 0; v < nvox; ++v) {
      CounterRng rng(seed, std::uint64_t(v), std::uint64_t(c));
      const double u1 = rng.uniform01();
      const double u2 = rng.uniform01();
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double n1 = r * std::cos(two_pi * u2);
      const double n2 = r * std::sin(two_pi * u2);
      const double s = double(vol.at_linear(v, c));
      vol.at_linear(v, c) =
          float(std::hypot(s + sigma * n1, sigma * n2));
    }
  }
}

}  // namespace forni
