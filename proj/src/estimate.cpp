// SPDX-License-Identifier: Apache-2.0

#include "forni/estimate.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>

#include "forni/dti.hpp"
#include "forni/neighborhood.hpp"
#include "forni/sparse_solver.hpp"

namespace forni {

namespace {

// Runs an index range on a fixed set of workers with static striping.
// The assignment of indices to workers never affects the result: every
// index writes only its own output slot.
class WorkerPool {
 public:
  explicit WorkerPool(int workers) {
    const int w = std::max(1, workers);
    for (int i = 1; i < w; ++i) {
      threads_.emplace_back([this, i] { worker_loop(i); });
    }
  }

  ~WorkerPool() {
    {
      std::lock_guard lk(m_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int width() const { return static_cast<int>(threads_.size()) + 1; }

  void run(int begin, int end, const std::function<void(int)>& fn) {
    if (end <= begin) return;
    if (threads_.empty()) {
      for (int i = begin; i < end; ++i) fn(i);
      return;
    }
    {
      std::lock_guard lk(m_);
      fn_ = &fn;
      begin_ = begin;
      end_ = end;
      remaining_ = static_cast<int>(threads_.size());
      ++generation_;
    }
    cv_.notify_all();
    const int w = width();
    try {
      for (int i = begin; i < end; i += w) fn(i);
    } catch (...) {
      std::lock_guard lk(m_);
      if (!failure_) failure_ = std::current_exception();
    }
    std::unique_lock lk(m_);
    done_cv_.wait(lk, [this] { return remaining_ == 0; });
    fn_ = nullptr;
    if (failure_) {
      auto e = failure_;
      failure_ = nullptr;
      std::rethrow_exception(e);
    }
  }

 private:
  void worker_loop(int stripe) {
    std::uint64_t seen = 0;
    while (true) {
      const std::function<void(int)>* fn = nullptr;
      int begin = 0, end = 0;
      {
        std::unique_lock lk(m_);
        cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        fn = fn_;
        begin = begin_;
        end = end_;
      }
      const int w = width();
      try {
        for (int i = begin + stripe; i < end; i += w) (*fn)(i);
      } catch (...) {
        std::lock_guard lk(m_);
        if (!failure_) failure_ = std::current_exception();
      }
      {
        std::lock_guard lk(m_);
        if (--remaining_ == 0) done_cv_.notify_one();
      }
    }
  }

  std::mutex m_;
  std::condition_variable cv_, done_cv_;
  std::vector<std::thread> threads_;
  const std::function<void(int)>* fn_ = nullptr;
  int begin_ = 0, end_ = 0;
  int remaining_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr failure_;
};

SparseVec to_sparse(const Eigen::VectorXd& f) {
  SparseVec out;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (f[i] > 0.0) out.push_back({static_cast<int>(i), f[i]});
  }
  return out;
}

Eigen::VectorXd to_dense(const SparseVec& f, int n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (const auto& e : f) out[e.index] = e.value;
  return out;
}

struct NeighborRef {
  int slot;
  double w;
};

void validate_config(const EstimationConfig& c) {
  if (!(c.alpha >= 0.0) || c.alpha >= 1.0) {
    throw InvalidArgument("estimate: alpha must lie in [0, 1)");
  }
  if (!(c.beta > 0.0)) throw InvalidArgument("estimate: beta must be > 0");
  if (!(c.mu >= 0.0)) throw InvalidArgument("estimate: mu must be >= 0");
  if (c.np < 1) throw InvalidArgument("estimate: np must be >= 1");
  if (!(c.theta_r_deg > 0.0)) {
    throw InvalidArgument("estimate: theta_r must be > 0");
  }
  if (!(c.f_th >= 0.0)) throw InvalidArgument("estimate: f_th must be >= 0");
  if (c.t_max < 1) throw InvalidArgument("estimate: t_max must be >= 1");
  if (!(c.eps_conv >= 0.0)) {
    throw InvalidArgument("estimate: eps_conv must be >= 0");
  }
}

}  // namespace

std::vector<std::int64_t> masked_voxels(const Volume& mask) {
  std::vector<std::int64_t> out;
  const std::int64_t n = mask.nvox();
  for (std::int64_t i = 0; i < n; ++i) {
    if (mask.data[i] != 0.f) out.push_back(i);
  }
  return out;
}

Eigen::VectorXd dense_fractions(const FOField& field, std::size_t slot, int n) {
  return to_dense(field.fractions[slot], n);
}

EstimateResult cfari_pass(const Volume& y, const Volume& mask,
                          const TensorBasis& basis, const Eigen::MatrixXd& g,
                          const GradientScheme& scheme,
                          const EstimationConfig& config) {
  validate_config(config);
  if (!same_grid(y, mask) || !mask.is_3d()) {
    throw InvalidArgument("cfari_pass: mask grid does not match signal volume");
  }
  const int K = scheme.k();
  const int N = basis.n();
  if (y.dim[3] != K || g.rows() != K || g.cols() != N) {
    throw InvalidArgument("cfari_pass: dictionary/scheme/signal mismatch");
  }
  const std::vector<std::int64_t> voxels = masked_voxels(mask);
  const int M = static_cast<int>(voxels.size());
  if (M == 0) throw InvalidArgument("cfari_pass: empty mask");

  std::vector<Eigen::VectorXd> sig(M);
  for (int s = 0; s < M; ++s) {
    Eigen::VectorXd v(K);
    for (int k = 0; k < K; ++k) v[k] = double(y.at_linear(voxels[s], k));
    if (!v.allFinite()) {
      throw InvalidArgument("cfari_pass: non-finite signal inside mask");
    }
    sig[s] = std::move(v);
  }

  const double lip = lipschitz_bound(g);
  const double beta0 = config.init_beta < 0.0 ? config.beta : config.init_beta;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);

  const int workers =
      config.workers > 0
          ? config.workers
          : std::min(config.np,
                     std::max(1, int(std::thread::hardware_concurrency())));
  WorkerPool pool(workers);

  EstimateResult result;
  result.field.dims = {mask.dim[0], mask.dim[1], mask.dim[2]};
  result.field.voxels = voxels;
  result.field.fo_indices.resize(M);
  result.field.fractions.resize(M);
  std::vector<double> vox_obj(M, 0.0);
  std::vector<VoxelDiagnostic> vox_diag(M);

  const auto t0 = std::chrono::steady_clock::now();
  pool.run(0, M, [&](int s) {
    SolveOptions opts;
    opts.tol = config.solver_tol;
    opts.max_iter = config.solver_max_iter;
    opts.lipschitz = lip;
    const SolveResult res = solve_weighted_l1(g, sig[s], ones, beta0, opts);
    const Eigen::VectorXd norm = normalize_fractions(res.f);
    result.field.fo_indices[s] = extract_fo_indices(norm, config.f_th);
    result.field.fractions[s] = to_sparse(norm);
    vox_obj[s] = res.objective;
    vox_diag[s] = {res.objective, res.kkt_residual, res.iterations,
                   res.converged};
  });

  SweepStats st;
  st.sweep = 0;
  for (int s = 0; s < M; ++s) st.objective += vox_obj[s];
  st.changed_fraction = 1.0;
  for (int s = 0; s < M; ++s) st.unconverged += vox_diag[s].converged ? 0 : 1;
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
                   .count();
  result.sweeps.push_back(st);
  result.unconverged_voxels = st.unconverged;
  result.converged = st.unconverged == 0;
  if (config.collect_voxel_diagnostics) result.voxel_diagnostics = vox_diag;
  return result;
}

EstimateResult estimate(const Volume& y, const Volume& mask,
                        const TensorBasis& basis, const Eigen::MatrixXd& g,
                        const GradientScheme& scheme,
                        const EstimationConfig& config, const FOField* init) {
  validate_config(config);
  if (!same_grid(y, mask) || !mask.is_3d()) {
    throw InvalidArgument("estimate: mask grid does not match signal volume");
  }
  const int K = scheme.k();
  const int N = basis.n();
  if (y.dim[3] != K) {
    throw InvalidArgument("estimate: signal channel count != scheme entries");
  }
  if (g.rows() != K || g.cols() != N) {
    throw InvalidArgument("estimate: dictionary does not match scheme/basis");
  }

  const std::vector<std::int64_t> voxels = masked_voxels(mask);
  const int M = static_cast<int>(voxels.size());
  if (M == 0) throw InvalidArgument("estimate: empty mask");

  const int nx = mask.dim[0], ny = mask.dim[1], nz = mask.dim[2];

  // Per-voxel signal vectors.
  std::vector<Eigen::VectorXd> sig(M);
  for (int s = 0; s < M; ++s) {
    Eigen::VectorXd v(K);
    for (int k = 0; k < K; ++k) v[k] = double(y.at_linear(voxels[s], k));
    if (!v.allFinite()) {
      throw InvalidArgument("estimate: non-finite signal inside mask");
    }
    sig[s] = std::move(v);
  }

  // Slot lookup for neighbor resolution.
  std::vector<int> slot_of(mask.nvox(), -1);
  for (int s = 0; s < M; ++s) slot_of[voxels[s]] = s;

  // Single-tensor fits feed the voxel similarity; they are computed once
  // and held fixed over the sweeps.
  TensorFitter fitter(scheme);
  std::vector<Eigen::Matrix3d> log_tensor(M);
  for (int s = 0; s < M; ++s) log_tensor[s] = spd_log(fitter.fit(sig[s]));

  // 26-connected neighbor lists with precomputed similarities.
  std::vector<std::vector<NeighborRef>> neighbors(M);
  for (int s = 0; s < M; ++s) {
    const std::int64_t id = voxels[s];
    const int x = int(id % nx);
    const int yv = int((id / nx) % ny);
    const int z = int(id / (std::int64_t(nx) * ny));
    auto& list = neighbors[s];
    list.reserve(26);
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const int xx = x + dx, yy = yv + dy, zz = z + dz;
          if (xx < 0 || xx >= nx || yy < 0 || yy >= ny || zz < 0 || zz >= nz) {
            continue;
          }
          const int t = slot_of[mask.index(xx, yy, zz)];
          if (t < 0) continue;
          list.push_back(
              {t, voxel_similarity_from_logs(log_tensor[s], log_tensor[t],
                                             config.mu)});
        }
      }
    }
  }

  const BasisCache cache(basis, config.theta_r_deg);
  const double lip = lipschitz_bound(g);

  // Committed state.
  std::vector<std::vector<int>> fo(M);
  std::vector<SparseVec> fhat(M);   // unnormalized solver outputs (warm starts)
  std::vector<SparseVec> fnorm(M);  // normalized fractions
  std::vector<double> vox_obj(M, 0.0);
  std::vector<VoxelDiagnostic> vox_diag(M);

  const int workers =
      config.workers > 0
          ? config.workers
          : std::min(config.np,
                     std::max(1, int(std::thread::hardware_concurrency())));
  WorkerPool pool(workers);

  EstimateResult result;

  const auto solve_voxel = [&](int s, const Eigen::VectorXd& weights,
                               double beta, const Eigen::VectorXd* warm,
                               std::vector<int>& out_fo, SparseVec& out_fhat,
                               SparseVec& out_fnorm, double& out_obj,
                               VoxelDiagnostic& out_diag) {
    SolveOptions opts;
    opts.tol = config.solver_tol;
    opts.max_iter = config.solver_max_iter;
    opts.lipschitz = lip;
    opts.warm_start = warm;
    const SolveResult res = solve_weighted_l1(g, sig[s], weights, beta, opts);
    const Eigen::VectorXd norm = normalize_fractions(res.f);
    out_fo = extract_fo_indices(norm, config.f_th);
    out_fhat = to_sparse(res.f);
    out_fnorm = to_sparse(norm);
    out_obj = res.objective;
    out_diag = {res.objective, res.kkt_residual, res.iterations, res.converged};
  };

  const auto now = [] { return std::chrono::steady_clock::now(); };
  const auto secs = [](auto a, auto b) {
    return std::chrono::duration<double>(b - a).count();
  };

  if (init) {
    if (init->dims != std::array<int, 3>{nx, ny, nz} ||
        init->voxels != voxels) {
      throw InvalidArgument("estimate: init field does not cover the mask");
    }
    fo = init->fo_indices;
    fhat = init->fractions;  // normalized values still make a valid start
    fnorm = init->fractions;
  } else {
    // Voxelwise init pass: uniform weights, decoupled subproblems.
    const double beta0 = config.init_beta < 0.0 ? config.beta : config.init_beta;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);
    const auto t0 = now();
    pool.run(0, M, [&](int s) {
      solve_voxel(s, ones, beta0, nullptr, fo[s], fhat[s], fnorm[s], vox_obj[s],
                  vox_diag[s]);
    });
    SweepStats st;
    st.sweep = 0;
    for (int s = 0; s < M; ++s) st.objective += vox_obj[s];
    st.changed_fraction = 1.0;
    for (int s = 0; s < M; ++s) st.unconverged += vox_diag[s].converged ? 0 : 1;
    st.seconds = secs(t0, now());
    result.sweeps.push_back(st);
  }

  // Group staging buffers (Jacobi inside a group, Gauss-Seidel across).
  std::vector<std::vector<int>> stage_fo(config.np);
  std::vector<SparseVec> stage_fhat(config.np);
  std::vector<SparseVec> stage_fnorm(config.np);
  std::vector<double> stage_obj(config.np);
  std::vector<VoxelDiagnostic> stage_diag(config.np);

  for (int t = 1; t <= config.t_max; ++t) {
    const auto t0 = now();
    std::int64_t changed = 0;
    for (int gb = 0; gb < M; gb += config.np) {
      const int ge = std::min(gb + config.np, M);
      pool.run(gb, ge, [&](int s) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(N);
        for (const NeighborRef& nb : neighbors[s]) {
          accumulate_similarity_indexed(nb.w, fo[nb.slot], cache, r);
        }
        Eigen::VectorXd weights;
        if ((r.array() == 0.0).all()) {
          // No orientation information in the neighborhood: solve exactly
          // as the voxelwise pass would.
          weights = Eigen::VectorXd::Ones(N);
        } else {
          weights = build_weights_indexed(extract_likely_fos_cached(r, cache),
                                          cache, config.alpha);
        }
        const Eigen::VectorXd warm = to_dense(fhat[s], N);
        const int b = s - gb;
        solve_voxel(s, weights, config.beta, &warm, stage_fo[b], stage_fhat[b],
                    stage_fnorm[b], stage_obj[b], stage_diag[b]);
      });
      for (int s = gb; s < ge; ++s) {
        const int b = s - gb;
        if (stage_fo[b] != fo[s]) ++changed;
        fo[s] = std::move(stage_fo[b]);
        fhat[s] = std::move(stage_fhat[b]);
        fnorm[s] = std::move(stage_fnorm[b]);
        vox_obj[s] = stage_obj[b];
        vox_diag[s] = stage_diag[b];
      }
    }

    SweepStats st;
    st.sweep = t;
    for (int s = 0; s < M; ++s) st.objective += vox_obj[s];
    st.changed_fraction = double(changed) / double(M);
    for (int s = 0; s < M; ++s) st.unconverged += vox_diag[s].converged ? 0 : 1;
    st.seconds = secs(t0, now());
    result.sweeps.push_back(st);

    if (st.changed_fraction <= config.eps_conv) {
      result.converged = true;
      break;
    }
  }

  result.unconverged_voxels = 0;
  for (int s = 0; s < M; ++s) {
    result.unconverged_voxels += vox_diag[s].converged ? 0 : 1;
  }
  if (config.collect_voxel_diagnostics) result.voxel_diagnostics = vox_diag;

  result.field.dims = {nx, ny, nz};
  result.field.voxels = voxels;
  result.field.fo_indices = std::move(fo);
  result.field.fractions = std::move(fnorm);
  return result;
}

}  // namespace forni
