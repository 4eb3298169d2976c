// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "forni/errors.hpp"
#include "forni/pipeline.hpp"
#include "forni/version.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

void add_phantom(CLI::App& app, forni::PhantomArgs& args) {
  CLI::App* cmd = app.add_subcommand(
      "phantom", "Generate the digital crossing phantom");
  cmd->add_option("--spec", args.spec_path,
                  "Phantom spec file (JSON); omit for the built-in layout");
  cmd->add_option("--snr", args.snr, "Rician SNR on the baseline; 0 disables")
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "Noise seed")->capture_default_str();
  cmd->add_flag("--noise-free", args.noise_free, "Disable noise");
  cmd->add_option("--dump-spec", args.dump_spec_path,
                  "Also write the effective spec as JSON");
  cmd->add_option("--out-dir", args.out_dir, "Output directory")->required();
}

void add_estimate(CLI::App& app, forni::EstimateArgs& args) {
  CLI::App* cmd = app.add_subcommand(
      "estimate", "Estimate fiber orientations (alpha 0 = voxelwise baseline)");
  cmd->add_option("--dwi", args.dwi, "4D DWI volume (NIfTI-1)")->required();
  cmd->add_option("--bval", args.bval, "b-values text file")->required();
  cmd->add_option("--bvec", args.bvec, "Gradient directions text file")
      ->required();
  cmd->add_option("--mask", args.mask_path,
                  "Binary mask volume; omit for a baseline-intensity mask");
  forni::EstimationConfig& c = args.config;
  cmd->add_option("--alpha", c.alpha, "Neighbor influence in [0,1)")
      ->capture_default_str();
  cmd->add_option("--beta", c.beta, "Sparsity penalty")->capture_default_str();
  cmd->add_option("--mu", c.mu, "Voxel-similarity sharpness")
      ->capture_default_str();
  cmd->add_option("--fth", c.f_th, "Mixture-fraction threshold")
      ->capture_default_str();
  cmd->add_option("--theta-r", c.theta_r_deg,
                  "Local-maximum radius in degrees")
      ->capture_default_str();
  cmd->add_option("--np", c.np, "Voxels solved jointly per group")
      ->capture_default_str();
  cmd->add_option("--max-iter", c.t_max, "Maximum sweeps")
      ->capture_default_str();
  cmd->add_option("--eps-conv", c.eps_conv,
                  "Stop when this fraction of voxels changes orientations")
      ->capture_default_str();
  cmd->add_option("--workers", c.workers,
                  "Worker threads per group (0: min(np, hardware))")
      ->capture_default_str();
  cmd->add_option("--solver-tol", c.solver_tol, "Subproblem KKT tolerance")
      ->capture_default_str();
  cmd->add_option("--solver-max-iter", c.solver_max_iter,
                  "Subproblem iteration cap")
      ->capture_default_str();
  cmd->add_option("--basis-order", args.basis_order,
                  "Octahedron tessellation order (12 gives 289 directions)")
      ->capture_default_str();
  cmd->add_option("--lambda1", args.lambda1, "Basis tensor lambda1 (mm^2/s)")
      ->capture_default_str();
  cmd->add_option("--lambda2", args.lambda2, "Basis tensor lambda2 (mm^2/s)")
      ->capture_default_str();
  cmd->add_option("--init", args.init, "Initialization method")
      ->capture_default_str();
  cmd->add_option("--init-beta", c.init_beta,
                  "beta for the init pass (default: --beta)");
  cmd->add_flag("--write-fractions", args.write_fractions,
                "Also write the mixture-fraction volume");
  cmd->add_flag("--dump-voxel-diagnostics", args.dump_voxel_diagnostics,
                "Also write per-voxel solver diagnostics (CSV)");
  cmd->add_option("--out-dir", args.out_dir, "Output directory")->required();
}

void add_dti(CLI::App& app, forni::DtiArgs& args) {
  CLI::App* cmd =
      app.add_subcommand("dti", "Fit a single diffusion tensor per voxel");
  cmd->add_option("--dwi", args.dwi, "4D DWI volume (NIfTI-1)")->required();
  cmd->add_option("--bval", args.bval, "b-values text file")->required();
  cmd->add_option("--bvec", args.bvec, "Gradient directions text file")
      ->required();
  cmd->add_option("--mask", args.mask_path, "Binary mask volume");
  cmd->add_option("--out-dir", args.out_dir, "Output directory")->required();
}

void add_evaluate(CLI::App& app, forni::EvaluateArgs& args) {
  CLI::App* cmd = app.add_subcommand(
      "evaluate", "Angular error of an estimated field against ground truth");
  cmd->add_option("--est", args.est_stem, "Estimated field stem")->required();
  cmd->add_option("--truth", args.truth_stem, "Ground-truth field stem")
      ->required();
  cmd->add_option("--regions", args.regions_path,
                  "Region-label volume; omit to label by true FO count");
  cmd->add_option("--error-map", args.error_map_path,
                  "Also write the per-voxel error volume");
  cmd->add_option("--out", args.out_csv, "Report CSV path")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiber orientation estimation on a fixed prolate tensor basis "
               "with neighborhood-informed weighting"};
  app.set_version_flag("--version", forni::kVersion);
  app.require_subcommand(1);

  forni::PhantomArgs phantom_args;
  forni::EstimateArgs estimate_args;
  forni::DtiArgs dti_args;
  forni::EvaluateArgs evaluate_args;
  add_phantom(app, phantom_args);
  add_estimate(app, estimate_args);
  add_dti(app, dti_args);
  add_evaluate(app, evaluate_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (app.got_subcommand("phantom")) {
      forni::run_phantom(phantom_args);
    } else if (app.got_subcommand("estimate")) {
      forni::run_estimate(estimate_args);
    } else if (app.got_subcommand("dti")) {
      forni::run_dti(dti_args);
    } else if (app.got_subcommand("evaluate")) {
      forni::run_evaluate(evaluate_args);
    }
  } catch (const forni::InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const forni::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumeric;
  } catch (const forni::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  }
  return kOk;
}
