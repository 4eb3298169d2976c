// SPDX-License-Identifier: Apache-2.0

#include "forni/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "forni/dti.hpp"
#include "forni/errors.hpp"
#include "forni/fofield_io.hpp"
#include "forni/gradient_io.hpp"
#include "forni/nifti.hpp"
#include "forni/phantom.hpp"
#include "forni/version.hpp"

namespace forni {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string joined(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

json config_json(const EstimationConfig& c) {
  return {{"alpha", c.alpha},
          {"beta", c.beta},
          {"mu", c.mu},
          {"f_th", c.f_th},
          {"theta_r_deg", c.theta_r_deg},
          {"np", c.np},
          {"t_max", c.t_max},
          {"eps_conv", c.eps_conv},
          {"solver_tol", c.solver_tol},
          {"solver_max_iter", c.solver_max_iter},
          {"init_beta", c.init_beta < 0.0 ? c.beta : c.init_beta},
          {"neighborhood", 26}};
}

Volume load_mask_or_default(const std::string& mask_path, const DwiData& dwi) {
  if (mask_path.empty()) return default_mask_from_s0(dwi.s0);
  Volume mask = read_volume(mask_path);
  if (!same_grid(mask, dwi.s0) || !mask.is_3d()) {
    throw DataError(mask_path + ": mask grid does not match DWI volume");
  }
  return mask;
}

}  // namespace

void run_phantom(const PhantomArgs& args) {
  if (args.out_dir.empty()) throw InvalidArgument("phantom: out dir required");
  const PhantomSpec spec = args.spec_path.empty()
                               ? PhantomSpec::default_spec()
                               : PhantomSpec::load(args.spec_path);
  fs::create_directories(args.out_dir);
  if (!args.dump_spec_path.empty()) spec.save(args.dump_spec_path);

  const GroundTruth truth = rasterize(spec);
  const GradientScheme scheme = phantom_gradients(spec);
  Volume dwi = synthesize(truth, spec, scheme);

  const bool noisy = !args.noise_free && args.snr > 0.0;
  if (noisy) add_rician(dwi, spec.s0 / args.snr, args.seed);

  write_volume(joined(args.out_dir, "dwi.nii"), dwi);

  std::vector<GradientRow> rows;
  for (int i = 0; i < scheme.baseline_count; ++i) {
    rows.push_back({Eigen::Vector3d::Zero(), 0.0});
  }
  for (const auto& e : scheme.entries) rows.push_back({e.dir, e.b});
  write_bvals(joined(args.out_dir, "dwi.bval"), rows);
  write_bvecs(joined(args.out_dir, "dwi.bvec"), rows);

  write_volume(joined(args.out_dir, "mask.nii"), truth.mask());

  json meta = {{"kind", "ground-truth"},
               {"software_version", kVersion},
               {"snr", noisy ? args.snr : 0.0},
               {"seed", args.seed},
               {"lambda1", spec.lambda1},
               {"lambda2", spec.lambda2}};
  save_fo_sets(joined(args.out_dir, "truth"), truth.dims, truth.fos, meta);
}

EstimateResult run_estimate(const EstimateArgs& args) {
  if (args.out_dir.empty()) throw InvalidArgument("estimate: out dir required");
  if (args.init != "cfari") {
    throw InvalidArgument("estimate: unsupported init '" + args.init +
                          "' (available: cfari)");
  }
  const DwiData dwi = load_dwi(args.dwi, args.bval, args.bvec);
  const Volume mask = load_mask_or_default(args.mask_path, dwi);

  const TensorBasis basis =
      make_tessellated_basis(args.basis_order, args.lambda1, args.lambda2);
  const Eigen::MatrixXd g = build_dictionary(basis, dwi.scheme);

  EstimationConfig config = args.config;
  config.collect_voxel_diagnostics |= args.dump_voxel_diagnostics;
  EstimateResult result =
      estimate(dwi.y, mask, basis, g, dwi.scheme, config, nullptr);

  fs::create_directories(args.out_dir);
  json meta = {{"kind", "estimate"},
               {"software_version", kVersion},
               {"basis",
                {{"tessellation_order", args.basis_order},
                 {"n", basis.n()},
                 {"lambda1", args.lambda1},
                 {"lambda2", args.lambda2}}},
               {"config", config_json(config)}};
  save_fo_field(joined(args.out_dir, "fo"), result.field, basis, meta);

  if (args.write_fractions) {
    Volume fractions = fractions_volume(result.field, basis.n());
    fractions.voxel_mm = dwi.y.voxel_mm;
    fractions.affine = dwi.y.affine;
    write_volume(joined(args.out_dir, "fractions.nii"), fractions);
  }

  json sweeps = json::array();
  for (const SweepStats& s : result.sweeps) {
    sweeps.push_back({{"sweep", s.sweep},
                      {"objective", s.objective},
                      {"changed_fraction", s.changed_fraction},
                      {"unconverged", s.unconverged},
                      {"seconds", s.seconds}});
  }
  const json diag = {{"sweeps", sweeps},
                     {"converged", result.converged},
                     {"unconverged_voxels", result.unconverged_voxels},
                     {"masked_voxels", result.field.size()}};
  std::ofstream out(joined(args.out_dir, "diagnostics.json"));
  if (!out) throw DataError("cannot write diagnostics.json");
  out << diag.dump(2) << "\n";

  if (args.dump_voxel_diagnostics) {
    FILE* f = std::fopen(joined(args.out_dir, "voxel_diagnostics.csv").c_str(),
                         "w");
    if (!f) throw DataError("cannot write voxel_diagnostics.csv");
    std::fprintf(f, "voxel,objective,kkt_residual,iterations,converged\n");
    for (std::size_t s = 0; s < result.voxel_diagnostics.size(); ++s) {
      const VoxelDiagnostic& d = result.voxel_diagnostics[s];
      std::fprintf(f, "%lld,%.10g,%.3g,%d,%d\n",
                   static_cast<long long>(result.field.voxels[s]), d.objective,
                   d.kkt_residual, d.iterations, d.converged ? 1 : 0);
    }
    std::fclose(f);
  }
  return result;
}

void run_dti(const DtiArgs& args) {
  if (args.out_dir.empty()) throw InvalidArgument("dti: out dir required");
  const DwiData dwi = load_dwi(args.dwi, args.bval, args.bvec);
  const Volume mask = load_mask_or_default(args.mask_path, dwi);

  const TensorFitter fitter(dwi.scheme);
  const int K = dwi.scheme.k();

  Volume tensor = Volume::zeros(mask.dim[0], mask.dim[1], mask.dim[2], 6);
  Volume fa = Volume::zeros(mask.dim[0], mask.dim[1], mask.dim[2]);
  Volume md = Volume::zeros(mask.dim[0], mask.dim[1], mask.dim[2]);
  for (Volume* v : {&tensor, &fa, &md}) {
    v->voxel_mm = dwi.y.voxel_mm;
    v->affine = dwi.y.affine;
  }

  Eigen::VectorXd y(K);
  const std::int64_t nvox = mask.nvox();
  for (std::int64_t v = 0; v < nvox; ++v) {
    if (mask.data[v] == 0.f) continue;
    for (int k = 0; k < K; ++k) y[k] = double(dwi.y.at_linear(v, k));
    const Eigen::Matrix3d d = fitter.fit(y);
    const float upper[6] = {float(d(0, 0)), float(d(0, 1)), float(d(0, 2)),
                            float(d(1, 1)), float(d(1, 2)), float(d(2, 2))};
    for (int c = 0; c < 6; ++c) tensor.at_linear(v, c) = upper[c];
    const FaMd s = fa_md(d);
    fa.data[v] = float(s.fa);
    md.data[v] = float(s.md);
  }

  fs::create_directories(args.out_dir);
  write_volume(joined(args.out_dir, "tensor.nii"), tensor);
  write_volume(joined(args.out_dir, "fa.nii"), fa);
  write_volume(joined(args.out_dir, "md.nii"), md);
}

ErrorReport run_evaluate(const EvaluateArgs& args) {
  if (args.out_csv.empty()) throw InvalidArgument("evaluate: output required");
  const LoadedFOField est = load_fo_field(args.est_stem);
  const LoadedFOField truth = load_fo_field(args.truth_stem);
  if (est.dims != truth.dims) {
    throw DataError("evaluate: estimate and truth grids differ");
  }

  const Volume* regions = nullptr;
  Volume regions_storage;
  if (!args.regions_path.empty()) {
    regions_storage = read_volume(args.regions_path);
    if (regions_storage.dim[0] != truth.dims[0] ||
        regions_storage.dim[1] != truth.dims[1] ||
        regions_storage.dim[2] != truth.dims[2] || !regions_storage.is_3d()) {
      throw DataError(args.regions_path + ": region grid does not match");
    }
    regions = &regions_storage;
  }

  std::vector<double> errors;
  std::vector<int> labels;
  std::int64_t unmatched = 0;
  Volume error_map =
      Volume::zeros(truth.dims[0], truth.dims[1], truth.dims[2]);
  std::set<int> labels_declared, labels_used;
  const std::size_t nvox = truth.fos.size();
  for (std::size_t v = 0; v < nvox; ++v) {
    if (regions) labels_declared.insert(int(std::lround(regions->data[v])));
    if (truth.fos[v].empty()) continue;  // evaluate over the true mask
    const double e = e_fo_degrees(est.fos[v], truth.fos[v]);
    errors.push_back(e);
    labels.push_back(regions
                         ? int(std::lround(regions->data[v]))
                         : int(truth.fos[v].size()));
    labels_used.insert(labels.back());
    if (est.fos[v].empty()) ++unmatched;
    error_map.data[v] = float(e);
  }
  if (errors.empty()) {
    throw DataError("evaluate: ground truth has no occupied voxels");
  }
  for (const int label : labels_declared) {
    if (!labels_used.count(label)) {
      std::fprintf(stderr,
                   "warning: region %d has no evaluated voxels; omitted\n",
                   label);
    }
  }

  ErrorReport report = aggregate_errors(errors, labels);
  report.unmatched = unmatched;

  write_report_csv(args.out_csv, report);
  std::string json_path = args.out_csv;
  if (json_path.size() > 4 && json_path.ends_with(".csv")) {
    json_path.replace(json_path.size() - 4, 4, ".json");
  } else {
    json_path += ".json";
  }
  write_report_json(json_path, report);

  if (!args.error_map_path.empty()) {
    write_volume(args.error_map_path, error_map);
  }
  return report;
}

}  // namespace forni
