// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "forni/estimate.hpp"
#include "forni/metrics.hpp"

namespace forni {

/// Subcommand bodies shared between the command-line tool and the test
/// harness. All of them throw forni errors on failure.

struct PhantomArgs {
  std::string spec_path;  // empty: built-in default spec
  std::string out_dir;
  double snr = 20.0;      // <= 0 disables noise
  std::uint64_t seed = 1;
  bool noise_free = false;
  std::string dump_spec_path;  // optional: write the effective spec
};

/// Emits dwi.nii, dwi.bval, dwi.bvec, mask.nii and the ground-truth
/// field (stem "truth") into out_dir.
void run_phantom(const PhantomArgs& args);

struct EstimateArgs {
  std::string dwi, bval, bvec;
  std::string mask_path;  // empty: baseline-intensity default mask
  EstimationConfig config;
  int basis_order = 12;
  double lambda1 = 2.0e-3;
  double lambda2 = 0.5e-3;
  std::string init = "cfari";
  std::string out_dir;
  bool write_fractions = false;
  bool dump_voxel_diagnostics = false;
};

/// Runs the estimator and writes the field (stem "fo"), diagnostics.json
/// and the optional fraction volume into out_dir. Returns the in-memory
/// result.
EstimateResult run_estimate(const EstimateArgs& args);

struct DtiArgs {
  std::string dwi, bval, bvec;
  std::string mask_path;  // empty: baseline-intensity default mask
  std::string out_dir;
};

/// Emits tensor.nii (Dxx, Dxy, Dxz, Dyy, Dyz, Dzz), fa.nii and md.nii.
void run_dti(const DtiArgs& args);

struct EvaluateArgs {
  std::string est_stem;
  std::string truth_stem;
  std::string regions_path;  // empty: label voxels by true FO count
  std::string out_csv;
  std::string error_map_path;  // optional 3D error volume
};

/// Per-voxel errors over the ground-truth-occupied mask, aggregated per
/// region label; writes CSV plus a JSON twin next to it.
ErrorReport run_evaluate(const EvaluateArgs& args);

}  // namespace forni
