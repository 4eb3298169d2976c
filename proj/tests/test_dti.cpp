// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "forni/dti.hpp"
#include "forni/errors.hpp"
#include "forni/geometry.hpp"

using namespace forni;

namespace {

GradientScheme spread_scheme(int count, double b = 1000.0) {
  GradientScheme scheme;
  scheme.baseline_count = 1;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < count; ++k) {
    Eigen::Vector3d q(gauss(rng), gauss(rng), gauss(rng));
    while (q.norm() < 1e-3) q = {gauss(rng), gauss(rng), gauss(rng)};
    scheme.entries.push_back({q.normalized(), b});
  }
  return scheme;
}

Eigen::VectorXd signals_for(const Eigen::Matrix3d& d,
                            const GradientScheme& scheme) {
  Eigen::VectorXd y(scheme.k());
  for (int k = 0; k < scheme.k(); ++k) {
    const auto& e = scheme.entries[k];
    y[k] = std::exp(-e.b * e.dir.dot(d * e.dir));
  }
  return y;
}

Eigen::Matrix3d random_spd(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::Matrix3d a;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a(r, c) = gauss(rng);
  }
  return a * a.transpose() + 0.1 * Eigen::Matrix3d::Identity();
}

}  // namespace

TEST_CASE("noise-free tensor recovery over 60 well-spread directions") {
  const GradientScheme scheme = spread_scheme(60);
  const Eigen::Matrix3d truth =
      Eigen::Vector3d(2e-3, 5e-4, 5e-4).asDiagonal();
  const Eigen::Matrix3d fit = fit_tensor(signals_for(truth, scheme), scheme);
  CHECK((fit - truth).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("isotropic signals fit an isotropic tensor") {
  const GradientScheme scheme = spread_scheme(30);
  const double d0 = 1e-3;
  const Eigen::Matrix3d truth = d0 * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d fit = fit_tensor(signals_for(truth, scheme), scheme);
  CHECK((fit - truth).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("zero signals are clamped to the floor before the log") {
  const GradientScheme scheme = spread_scheme(20);
  const Eigen::Matrix3d truth =
      Eigen::Vector3d(2e-3, 5e-4, 5e-4).asDiagonal();
  Eigen::VectorXd y = signals_for(truth, scheme);
  Eigen::VectorXd y_floor = y;
  y[3] = 0.0;
  y_floor[3] = kSignalFloor;
  const Eigen::Matrix3d a = fit_tensor(y, scheme);
  const Eigen::Matrix3d b = fit_tensor(y_floor, scheme);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit_tensor input validation") {
  CHECK_THROWS_AS(fit_tensor(Eigen::VectorXd::Ones(5), spread_scheme(5)),
                  InsufficientData);

  GradientScheme degenerate;
  degenerate.baseline_count = 1;
  for (int k = 0; k < 8; ++k) {
    degenerate.entries.push_back({{1, 0, 0}, 1000.0});
  }
  CHECK_THROWS_AS(fit_tensor(Eigen::VectorXd::Ones(8), degenerate),
                  RankDeficient);
}

TEST_CASE("fit_tensor is scale-equivariant in b") {
  const GradientScheme scheme = spread_scheme(40);
  GradientScheme scaled = scheme;
  const double s = 2.5;
  for (auto& e : scaled.entries) e.b *= s;
  const Eigen::Matrix3d truth =
      Eigen::Vector3d(1.5e-3, 6e-4, 4e-4).asDiagonal();
  const Eigen::VectorXd y = signals_for(truth, scheme);
  const Eigen::Matrix3d fit = fit_tensor(y, scaled);
  CHECK((s * fit - truth).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("log-euclidean distance analytic cases") {
  const Eigen::Matrix3d a = 2e-3 * Eigen::Matrix3d::Identity();
  CHECK(log_euclidean_distance(a, a) == 0.0);

  // Scalar multiples of the identity: d = sqrt(3) |ln(a/b)|.
  const Eigen::Matrix3d b = std::exp(1.0) * a;
  CHECK(log_euclidean_distance(b, a) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("log-euclidean distance is rotation invariant") {
  std::mt19937_64 rng(3);
  const Eigen::Matrix3d a = random_spd(rng);
  const Eigen::Matrix3d b = random_spd(rng);
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(1.2, Eigen::Vector3d(3, -1, 2).normalized())
          .toRotationMatrix();
  const double d0 = log_euclidean_distance(a, b);
  const double d1 = log_euclidean_distance(rot * a * rot.transpose(),
                                           rot * b * rot.transpose());
  CHECK(std::abs(d1 - d0) <= 1e-10);
}

TEST_CASE("log-euclidean distance is symmetric and satisfies the triangle "
          "inequality") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Matrix3d a = random_spd(rng);
    const Eigen::Matrix3d b = random_spd(rng);
    const Eigen::Matrix3d c = random_spd(rng);
    const double ab = log_euclidean_distance(a, b);
    const double ba = log_euclidean_distance(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab <= log_euclidean_distance(a, c) + log_euclidean_distance(c, b) +
                    1e-12);
  }
}

TEST_CASE("spd_log rejects indefinite input") {
  Eigen::Matrix3d m = Eigen::Vector3d(1.0, 1.0, -0.5).asDiagonal();
  CHECK_THROWS_AS(spd_log(m), NumericError);
}

TEST_CASE("voxel similarity values") {
  const Eigen::Matrix3d a = 1e-3 * Eigen::Matrix3d::Identity();
  CHECK(voxel_similarity(a, a, 3.0) == 1.0);
  CHECK(voxel_similarity(a, a, 0.0) == 1.0);

  // d = sqrt(3) gives w = exp(-3 mu).
  const Eigen::Matrix3d b = std::exp(1.0) * a;
  CHECK(voxel_similarity(a, b, 3.0) ==
        doctest::Approx(std::exp(-9.0)).epsilon(1e-10));

  // mu = 0 makes the weighting isotropic.
  std::mt19937_64 rng(5);
  CHECK(voxel_similarity(random_spd(rng), random_spd(rng), 0.0) == 1.0);
}

TEST_CASE("voxel similarity decreases with distance and mu") {
  const Eigen::Matrix3d a = 1e-3 * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d b = 1.5e-3 * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d c = 3e-3 * Eigen::Matrix3d::Identity();
  CHECK(voxel_similarity(a, c, 3.0) < voxel_similarity(a, b, 3.0));
  CHECK(voxel_similarity(a, b, 4.0) < voxel_similarity(a, b, 3.0));
}

TEST_CASE("fa and md of the phantom tensor") {
  const Eigen::Matrix3d d = Eigen::Vector3d(2e-3, 5e-4, 5e-4).asDiagonal();
  const FaMd s = fa_md(d);
  CHECK(s.md == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(s.fa == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(s.fa == doctest::Approx(0.71).epsilon(0.01));

  const FaMd iso = fa_md(1e-3 * Eigen::Matrix3d::Identity());
  CHECK(iso.fa == 0.0);
}
