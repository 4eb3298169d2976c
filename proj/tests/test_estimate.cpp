// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "forni/errors.hpp"
#include "forni/estimate.hpp"
#include "forni/geometry.hpp"
#include "forni/metrics.hpp"
#include "forni/sparse_solver.hpp"

using namespace forni;

namespace {

struct SmallProblem {
  TensorBasis basis;
  GradientScheme scheme;
  Eigen::MatrixXd g;
  Volume y;     // normalized signals
  Volume mask;
};

// A 6x6x2 volume: columns left of the strip carry a tract along x, the
// strip itself crosses x and y, the rest runs along y; optional noise.
SmallProblem small_problem(double noise_sigma, std::uint64_t seed) {
  SmallProblem p;
  p.basis = make_tessellated_basis(6, 2e-3, 5e-4);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  p.scheme.baseline_count = 1;
  for (int k = 0; k < 30; ++k) {
    Eigen::Vector3d q(gauss(rng), gauss(rng), gauss(rng));
    while (q.norm() < 1e-3) q = {gauss(rng), gauss(rng), gauss(rng)};
    p.scheme.entries.push_back({q.normalized(), 1000.0});
  }
  p.g = build_dictionary(p.basis, p.scheme);

  int ix = -1, iy = -1;
  for (int i = 0; i < p.basis.n(); ++i) {
    if ((p.basis.directions[i].v - Eigen::Vector3d(1, 0, 0)).norm() == 0.0)
      ix = i;
    if ((p.basis.directions[i].v - Eigen::Vector3d(0, 1, 0)).norm() == 0.0)
      iy = i;
  }

  const int nx = 6, ny = 6, nz = 2;
  p.y = Volume::zeros(nx, ny, nz, p.scheme.k());
  p.mask = Volume::zeros(nx, ny, nz);
  for (int z = 0; z < nz; ++z) {
    for (int yv = 0; yv < ny; ++yv) {
      for (int x = 0; x < nx; ++x) {
        Eigen::VectorXd sig;
        if (x < 2) {
          sig = p.g.col(ix);
        } else if (x == 2) {
          sig = 0.5 * p.g.col(ix) + 0.5 * p.g.col(iy);
        } else {
          sig = p.g.col(iy);
        }
        for (int k = 0; k < p.scheme.k(); ++k) {
          double v = sig[k] + noise_sigma * gauss(rng);
          p.y.at(x, yv, z, k) = float(std::clamp(v, 1e-6, 1.0));
        }
        p.mask.at(x, yv, z) = 1.f;
      }
    }
  }
  return p;
}

bool fields_identical(const FOField& a, const FOField& b) {
  if (a.dims != b.dims || a.voxels != b.voxels) return false;
  if (a.fo_indices != b.fo_indices) return false;
  if (a.fractions.size() != b.fractions.size()) return false;
  for (std::size_t s = 0; s < a.fractions.size(); ++s) {
    if (a.fractions[s].size() != b.fractions[s].size()) return false;
    for (std::size_t e = 0; e < a.fractions[s].size(); ++e) {
      if (a.fractions[s][e].index != b.fractions[s][e].index) return false;
      if (a.fractions[s][e].value != b.fractions[s][e].value) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("masked voxel order is lexicographic in (z, y, x)") {
  Volume mask = Volume::zeros(3, 2, 2);
  mask.at(2, 1, 0) = 1.f;
  mask.at(0, 0, 1) = 1.f;
  mask.at(1, 0, 0) = 1.f;
  const auto voxels = masked_voxels(mask);
  REQUIRE(voxels.size() == 3);
  CHECK(voxels[0] == mask.index(1, 0, 0));
  CHECK(voxels[1] == mask.index(2, 1, 0));
  CHECK(voxels[2] == mask.index(0, 0, 1));
}

TEST_CASE("alpha zero matches a voxelwise pass bitwise") {
  const SmallProblem p = small_problem(0.05, 11);
  EstimationConfig cfg;
  cfg.alpha = 0.0;
  cfg.workers = 1;
  const EstimateResult full =
      estimate(p.y, p.mask, p.basis, p.g, p.scheme, cfg);
  const EstimateResult pass =
      cfari_pass(p.y, p.mask, p.basis, p.g, p.scheme, cfg);
  CHECK(fields_identical(full.field, pass.field));
  // Decoupled subproblems reach a fixed point after one sweep.
  CHECK(full.converged);
  CHECK(full.sweeps.size() == 2);  // init pass + one confirming sweep
  CHECK(full.sweeps.back().changed_fraction == 0.0);
}

TEST_CASE("output is independent of the worker count") {
  const SmallProblem p = small_problem(0.05, 13);
  EstimationConfig cfg;
  cfg.t_max = 3;
  cfg.np = 4;

  EstimationConfig cfg1 = cfg, cfg3 = cfg, cfg8 = cfg;
  cfg1.workers = 1;
  cfg3.workers = 3;
  cfg8.workers = 8;
  const EstimateResult r1 = estimate(p.y, p.mask, p.basis, p.g, p.scheme, cfg1);
  const EstimateResult r3 = estimate(p.y, p.mask, p.basis, p.g, p.scheme, cfg3);
  const EstimateResult r8 = estimate(p.y, p.mask, p.basis, p.g, p.scheme, cfg8);
  CHECK(fields_identical(r1.field, r3.field));
  CHECK(fields_identical(r1.field, r8.field));
  REQUIRE(r1.sweeps.size() == r3.sweeps.size());
  for (std::size_t s = 0; s < r1.sweeps.size(); ++s) {
    CHECK(r1.sweeps[s].objective == r3.sweeps[s].objective);
    CHECK(r1.sweeps[s].changed_fraction == r3.sweeps[s].changed_fraction);
  }
}

TEST_CASE("repeated runs are bit-identical") {
  const SmallProblem p = small_problem(0.08, 17);
  EstimationConfig cfg;
  cfg.t_max = 3;
  const EstimateResult a = estimate(p.y, p.mask, p.basis, p.g, p.scheme, cfg);
  const EstimateResult b = estimate(p.y, p.mask, p.basis, p.g, p.scheme, cfg);
  CHECK(fields_identical(a.field, b.field));
}

TEST_CASE("an isolated voxel reduces to the voxelwise solve bitwise") {
  const SmallProblem p = small_problem(0.05, 19);
  Volume lone = Volume::zeros(6, 6, 2);
  lone.at(3, 3, 1) = 1.f;
  EstimationConfig cfg;  // alpha 0.8; without neighbors it must not matter
  cfg.workers = 1;
  const EstimateResult joint =
      estimate(p.y, lone, p.basis, p.g, p.scheme, cfg);
  const EstimateResult pass =
      cfari_pass(p.y, lone, p.basis, p.g, p.scheme, cfg);
  CHECK(fields_identical(joint.field, pass.field));
}

TEST_CASE("group size does not change the reached objective much") {
  const SmallProblem p = small_problem(0.08, 23);
  EstimationConfig base;
  base.t_max = 8;

  EstimationConfig np1 = base, np8 = base;
  np1.np = 1;
  np8.np = 8;
  const EstimateResult r1 = estimate(p.y, p.mask, p.basis, p.g, p.scheme, np1);
  const EstimateResult r8 = estimate(p.y, p.mask, p.basis, p.g, p.scheme, np8);
  const double o1 = r1.sweeps.back().objective;
  const double o8 = r8.sweeps.back().objective;
  CHECK(std::abs(o1 - o8) <= 0.01 * std::max(o1, o8));
}

TEST_CASE("neighborhood weighting does not hurt accuracy on the noisy strip") {
  const SmallProblem p = small_problem(0.08, 29);
  EstimationConfig forni;
  forni.t_max = 6;
  EstimationConfig cfari = forni;
  cfari.alpha = 0.0;

  const EstimateResult rf = estimate(p.y, p.mask, p.basis, p.g, p.scheme, forni);
  const EstimateResult rc = cfari_pass(p.y, p.mask, p.basis, p.g, p.scheme, cfari);

  const auto mean_efo = [&](const FOField& field) {
    double sum = 0.0;
    for (std::size_t s = 0; s < field.size(); ++s) {
      const std::int64_t id = field.voxels[s];
      const int x = int(id % 6);
      std::vector<Eigen::Vector3d> truth;
      if (x < 2) {
        truth = {Eigen::Vector3d(1, 0, 0)};
      } else if (x == 2) {
        truth = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0)};
      } else {
        truth = {Eigen::Vector3d(0, 1, 0)};
      }
      std::vector<Eigen::Vector3d> est;
      for (const int i : field.fo_indices[s]) {
        est.push_back(p.basis.directions[i].v);
      }
      sum += e_fo_degrees(est, truth);
    }
    return sum / double(field.size());
  };
  CHECK(mean_efo(rf.field) <= mean_efo(rc.field) + 0.5);
}

TEST_CASE("estimate validates its inputs") {
  const SmallProblem p = small_problem(0.0, 31);
  EstimationConfig cfg;

  Volume empty_mask = Volume::zeros(6, 6, 2);
  CHECK_THROWS_AS(estimate(p.y, empty_mask, p.basis, p.g, p.scheme, cfg),
                  InvalidArgument);

  EstimationConfig bad = cfg;
  bad.alpha = 1.0;
  CHECK_THROWS_AS(estimate(p.y, p.mask, p.basis, p.g, p.scheme, bad),
                  InvalidArgument);
  bad = cfg;
  bad.beta = 0.0;
  CHECK_THROWS_AS(estimate(p.y, p.mask, p.basis, p.g, p.scheme, bad),
                  InvalidArgument);
  bad = cfg;
  bad.np = 0;
  CHECK_THROWS_AS(estimate(p.y, p.mask, p.basis, p.g, p.scheme, bad),
                  InvalidArgument);

  Volume wrong_mask = Volume::zeros(5, 6, 2);
  CHECK_THROWS_AS(estimate(p.y, wrong_mask, p.basis, p.g, p.scheme, cfg),
                  InvalidArgument);

  // An init field over a different voxel set is rejected.
  FOField init;
  init.dims = {6, 6, 2};
  init.voxels = {0};
  init.fo_indices = {{}};
  init.fractions = {{}};
  CHECK_THROWS_AS(estimate(p.y, p.mask, p.basis, p.g, p.scheme, cfg, &init),
                  InvalidArgument);
}

TEST_CASE("a provided init field replaces the init pass") {
  const SmallProblem p = small_problem(0.05, 37);
  EstimationConfig cfg;
  cfg.t_max = 4;
  EstimationConfig cfg_init = cfg;
  cfg_init.init_beta = 0.3;
  const EstimateResult init =
      cfari_pass(p.y, p.mask, p.basis, p.g, p.scheme, cfg_init);
  const EstimateResult with_init =
      estimate(p.y, p.mask, p.basis, p.g, p.scheme, cfg, &init.field);
  // No init pass is recorded when a field is supplied.
  CHECK(with_init.sweeps.front().sweep == 1);
  CHECK(with_init.field.size() == std::size_t(p.mask.nvox()));
}

TEST_CASE("paper defaults are the config defaults") {
  const EstimationConfig cfg;
  CHECK(cfg.alpha == 0.8);
  CHECK(cfg.beta == 0.5);
  CHECK(cfg.mu == 3.0);
  CHECK(cfg.f_th == 0.1);
  CHECK(cfg.theta_r_deg == 20.0);
  CHECK(cfg.np == 8);
}
