// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "forni/dti.hpp"
#include "forni/errors.hpp"
#include "forni/phantom.hpp"

using namespace forni;

namespace {

PhantomSpec slab_only_spec() {
  PhantomSpec s;
  s.dims = {10, 8, 4};
  s.slabs = {{{0, 2, 1}, {10, 6, 3}, {1.0, 0.0, 0.0}}};
  s.arcs.clear();
  s.gradient_count = 20;
  return s;
}

}  // namespace

TEST_CASE("a single straight slab rasterizes to one orientation") {
  const GroundTruth truth = rasterize(slab_only_spec());
  std::int64_t occupied = 0;
  for (const auto& fos : truth.fos) {
    if (fos.empty()) continue;
    ++occupied;
    REQUIRE(fos.size() == 1);
    CHECK((fos[0] - Eigen::Vector3d(1, 0, 0)).norm() == 0.0);
  }
  CHECK(occupied == 10 * 4 * 2);
  CHECK(truth.occupied() == occupied);
}

TEST_CASE("two orthogonal slabs cross with two orientations") {
  PhantomSpec s = slab_only_spec();
  s.slabs.push_back({{3, 0, 1}, {6, 8, 3}, {0.0, 1.0, 0.0}});
  const GroundTruth truth = rasterize(s);
  int crossing = 0;
  for (int z = 1; z < 3; ++z) {
    for (int y = 2; y < 6; ++y) {
      for (int x = 3; x < 6; ++x) {
        const auto& fos = truth.fos[truth.fos.size() == 0 ? 0 :
            std::size_t(x + 10 * (y + 8 * z))];
        REQUIRE(fos.size() == 2);
        ++crossing;
      }
    }
  }
  CHECK(crossing == 3 * 4 * 2);
}

TEST_CASE("arc voxels carry the local tangent") {
  PhantomSpec s;
  s.dims = {16, 16, 2};
  s.slabs.clear();
  s.arcs = {{{2.0, 2.0}, 10.0, 11.0, 0.0, 90.0, 0, 1}};
  const GroundTruth truth = rasterize(s);

  // A voxel center exactly on the 45-degree ray: (x+0.5-2) == (y+0.5-2).
  bool found = false;
  for (int d = 0; d < 16 && !found; ++d) {
    const double rho = (d + 0.5 - 2.0) * std::sqrt(2.0);
    if (rho >= 10.0 && rho < 11.0) {
      const auto& fos = truth.fos[std::size_t(d + 16 * d)];
      REQUIRE(fos.size() == 1);
      const double inv = 1.0 / std::sqrt(2.0);
      CHECK(std::abs(fos[0].x() + inv) <= 1e-12);
      CHECK(std::abs(fos[0].y() - inv) <= 1e-12);
      CHECK(fos[0].z() == 0.0);
      found = true;
    }
  }
  CHECK(found);

  // Every arc tangent is a unit vector in the plane.
  for (const auto& fos : truth.fos) {
    for (const auto& d : fos) {
      CHECK(std::abs(d.norm() - 1.0) <= 1e-12);
      CHECK(d.z() == 0.0);
    }
  }
}

TEST_CASE("directions closer than the merge angle collapse") {
  PhantomSpec s = slab_only_spec();
  // 3 degrees apart from the x slab: merged.
  const double a3 = 3.0 * EIGEN_PI / 180.0;
  s.slabs.push_back(
      {{0, 2, 1}, {10, 6, 3}, {std::cos(a3), std::sin(a3), 0.0}});
  GroundTruth truth = rasterize(s);
  for (const auto& fos : truth.fos) {
    if (!fos.empty()) CHECK(fos.size() == 1);
  }

  // 7 degrees apart: kept separate.
  const double a7 = 7.0 * EIGEN_PI / 180.0;
  s.slabs.back().direction = {std::cos(a7), std::sin(a7), 0.0};
  truth = rasterize(s);
  for (const auto& fos : truth.fos) {
    if (!fos.empty()) CHECK(fos.size() == 2);
  }
}

TEST_CASE("more than three crossing tracts is a spec error") {
  PhantomSpec s = slab_only_spec();
  s.slabs.push_back({{0, 2, 1}, {10, 6, 3}, {0.0, 1.0, 0.0}});
  s.slabs.push_back({{0, 2, 1}, {10, 6, 3}, {0.0, 0.0, 1.0}});
  s.slabs.push_back(
      {{0, 2, 1}, {10, 6, 3}, {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0}});
  CHECK_THROWS_AS(rasterize(s), DataError);
}

TEST_CASE("primitives must fit the grid") {
  PhantomSpec s = slab_only_spec();
  s.slabs[0].hi = {11, 6, 3};
  CHECK_THROWS_AS(rasterize(s), DataError);
}

TEST_CASE("synthesized attenuations match the analytic values") {
  PhantomSpec s;
  s.dims = {3, 1, 1};
  s.slabs = {{{0, 0, 0}, {1, 1, 1}, {1.0, 0.0, 0.0}},   // single x tract
             {{1, 0, 0}, {2, 1, 1}, {1.0, 0.0, 0.0}},   // x and y crossing
             {{1, 0, 0}, {2, 1, 1}, {0.0, 1.0, 0.0}}};
  s.arcs.clear();
  const GroundTruth truth = rasterize(s);

  GradientScheme scheme;
  scheme.baseline_count = 1;
  scheme.entries = {{{1, 0, 0}, 1000.0}};
  const Volume vol = synthesize(truth, s, scheme);

  // Baseline first, then the weighted channel.
  CHECK(vol.at(0, 0, 0, 0) == float(s.s0));
  CHECK(vol.at(0, 0, 0, 1) ==
        doctest::Approx(float(s.s0 * std::exp(-2.0))).epsilon(1e-6));
  CHECK(vol.at(1, 0, 0, 1) ==
        doctest::Approx(float(s.s0 * 0.5 * (std::exp(-2.0) + std::exp(-0.5))))
            .epsilon(1e-6));
  // Background voxels stay dark without the isotropic flag.
  CHECK(vol.at(2, 0, 0, 0) == 0.f);
  CHECK(vol.at(2, 0, 0, 1) == 0.f);

  PhantomSpec iso = s;
  iso.isotropic_background = true;
  const Volume viso = synthesize(truth, iso, scheme);
  CHECK(viso.at(2, 0, 0, 0) == float(s.s0));
  CHECK(viso.at(2, 0, 0, 1) ==
        doctest::Approx(float(s.s0 * std::exp(-1000.0 * kBackgroundMd)))
            .epsilon(1e-6));
}

TEST_CASE("rician noise is reproducible, positive, and vanishes with sigma") {
  Volume vol = Volume::zeros(20, 20, 5, 2);
  for (auto& v : vol.data) v = 100.f;

  Volume zero_sigma = vol;
  add_rician(zero_sigma, 0.0, 7);
  CHECK(zero_sigma.data == vol.data);

  Volume a = vol, b = vol, c = vol;
  add_rician(a, 10.0, 7);
  add_rician(b, 10.0, 7);
  add_rician(c, 10.0, 8);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
  for (const float v : a.data) CHECK(v >= 0.f);
}

TEST_CASE("zero-signal noise follows the rayleigh mean") {
  Volume vol = Volume::zeros(100, 100, 10);
  const double sigma = 3.0;
  add_rician(vol, sigma, 12345);
  double mean = 0.0;
  for (const float v : vol.data) mean += v;
  mean /= double(vol.data.size());
  const double rayleigh = sigma * std::sqrt(EIGEN_PI / 2.0);
  CHECK(std::abs(mean - rayleigh) <= 0.02 * rayleigh);
}

TEST_CASE("default phantom has one, two, and three crossing regions") {
  const PhantomSpec spec = PhantomSpec::default_spec();
  const GroundTruth truth = rasterize(spec);
  std::int64_t count[4] = {0, 0, 0, 0};
  for (const auto& fos : truth.fos) count[fos.size()] += 1;
  CHECK(count[1] > 0);
  CHECK(count[2] > 0);
  CHECK(count[3] > 0);
  CHECK(truth.occupied() == count[1] + count[2] + count[3]);
  // Keep the default small enough for single-core estimation runs.
  CHECK(truth.occupied() < 6000);
  MESSAGE("default phantom voxels: total ", truth.occupied(), " single ",
          count[1], " double ", count[2], " triple ", count[3]);
}

TEST_CASE("default gradient table has 60 spread directions at b=1000") {
  const PhantomSpec spec = PhantomSpec::default_spec();
  const GradientScheme scheme = phantom_gradients(spec);
  CHECK(scheme.baseline_count == 1);
  REQUIRE(scheme.k() == 60);
  for (const auto& e : scheme.entries) {
    CHECK(e.b == 1000.0);
    CHECK(std::abs(e.dir.norm() - 1.0) <= 1e-12);
    int nonzero = 0;
    for (int i = 0; i < 3; ++i) nonzero += e.dir[i] != 0.0 ? 1 : 0;
    CHECK(nonzero > 1);  // the six axis vertices are excluded
  }
  // Usable for tensor fitting.
  CHECK_NOTHROW(TensorFitter{scheme});
}

TEST_CASE("noise-free tract voxels fit the advertised tensor shape") {
  const PhantomSpec spec = PhantomSpec::default_spec();
  const GroundTruth truth = rasterize(spec);
  const GradientScheme scheme = phantom_gradients(spec);
  const Volume vol = synthesize(truth, spec, scheme);
  const TensorFitter fitter(scheme);

  int seen = 0;
  for (std::size_t v = 0; v < truth.fos.size() && seen < 25; ++v) {
    if (truth.fos[v].size() != 1) continue;
    ++seen;
    Eigen::VectorXd y(scheme.k());
    for (int k = 0; k < scheme.k(); ++k) {
      y[k] = vol.at_linear(std::int64_t(v), scheme.baseline_count + k) /
             vol.at_linear(std::int64_t(v), 0);
    }
    const FaMd s = fa_md(fitter.fit(y));
    CHECK(std::abs(s.fa - 0.71) <= 0.005);
    CHECK(std::abs(s.md - 1.0e-3) <= 1e-6);
  }
  CHECK(seen == 25);
}

TEST_CASE("phantom spec round-trips through json") {
  const PhantomSpec spec = PhantomSpec::default_spec();
  const std::string path = "phantom_spec_test.json";
  spec.save(path);
  const PhantomSpec loaded = PhantomSpec::load(path);
  std::filesystem::remove(path);
  CHECK(loaded.dims == spec.dims);
  CHECK(loaded.lambda1 == spec.lambda1);
  CHECK(loaded.lambda2 == spec.lambda2);
  CHECK(loaded.s0 == spec.s0);
  CHECK(loaded.gradient_count == spec.gradient_count);
  CHECK(loaded.baseline_count == spec.baseline_count);
  REQUIRE(loaded.slabs.size() == spec.slabs.size());
  REQUIRE(loaded.arcs.size() == spec.arcs.size());
  for (std::size_t i = 0; i < spec.slabs.size(); ++i) {
    CHECK(loaded.slabs[i].lo == spec.slabs[i].lo);
    CHECK(loaded.slabs[i].hi == spec.slabs[i].hi);
    CHECK((loaded.slabs[i].direction - spec.slabs[i].direction).norm() == 0.0);
  }
  CHECK(loaded.arcs[0].radius_inner == spec.arcs[0].radius_inner);
  CHECK(loaded.arcs[0].z_lo == spec.arcs[0].z_lo);
}
