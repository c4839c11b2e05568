#pragma once

#include <span>
#include <vector>

#include "ubgrad/cost.hpp"
#include "ubgrad/model.hpp"
#include "ubgrad/rng.hpp"

namespace ubgrad {

struct KernelConfig {
  double proposal_std = 0.2;  // componentwise random-walk std
  int n_mcmc_steps = 5;       // steps per kernel application
  int n_init_sweeps = 10;     // kernel applications during initialization
};

/// Particle population targeting eta_theta^s at schedule level s. Each
/// particle carries its forward observations at levels s and s+1; every
/// gamma / phi / potential value the sampler needs derives from these caches
/// without further solves.
struct ParticleEnsemble {
  int level = 0;
  int n = 0;
  int dim = 0;
  int m_obs = 0;
  std::vector<double> u;         // n x dim
  std::vector<double> obs_cur;   // n x m_obs: G^s(u_i)
  std::vector<double> obs_next;  // n x m_obs: G^{s+1}(u_i)

  std::span<double> particle(int i) {
    return {u.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> particle(int i) const {
    return {u.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> observations_cur(int i) const {
    return {obs_cur.data() + static_cast<std::size_t>(i) * m_obs,
            static_cast<std::size_t>(m_obs)};
  }
  std::span<const double> observations_next(int i) const {
    return {obs_next.data() + static_cast<std::size_t>(i) * m_obs,
            static_cast<std::size_t>(m_obs)};
  }
};

/// Normalized weights from log weights via max subtraction. Throws
/// std::runtime_error if every weight vanishes.
std::vector<double> normalized_weights(std::span<const double> log_weights);

/// N independent categorical draws with mass proportional to exp(log_weights).
std::vector<int> multinomial_resample(std::span<const double> log_weights,
                                      int n_draws, RngStream& rng);

/// Reflect into [-1, 1].
double reflect_unit(double x);

/// In-place random-walk Metropolis targeting eta_theta^level: n_mcmc_steps
/// componentwise Gaussian proposals reflected at the box boundary, accepted
/// with min(1, gamma(u')/gamma(u)). obs and log_target track the particle's
/// level-`level` observations and log gamma value.
void mcmc_move(const ModelSpec& spec, double theta, int level,
               const KernelConfig& cfg, std::span<double> u,
               std::vector<double>& obs, double& log_target, RngStream& rng);

/// Level-0 initialization: i.i.d. prior draws, importance weighting by
/// gamma_theta^0, multinomial resampling, then n_init_sweeps kernel
/// applications. Fills both observation caches.
ParticleEnsemble init_level0(const ModelSpec& spec, double theta, int n,
                             const KernelConfig& cfg, RngStream& rng,
                             CostLedger& ledger);

/// One resample-move step from level s-1 to s with potentials
/// G_theta^{s-1}(u) evaluated on the cached observations.
ParticleEnsemble advance(const ModelSpec& spec, double theta,
                         const ParticleEnsemble& prev, const KernelConfig& cfg,
                         RngStream& rng, CostLedger& ledger);

/// Fixed-N multilevel SMC: ensembles for s = 0 .. max(target_level - 1, 0).
std::vector<ParticleEnsemble> run_mlsmc(const ModelSpec& spec, double theta,
                                        int n, int target_level,
                                        const KernelConfig& cfg, RngStream& rng,
                                        CostLedger& ledger);

/// log G_theta^s(u_i) from the ensemble caches.
double log_potential(const ModelSpec& spec, double theta,
                     const ParticleEnsemble& ens, int i);

}  // namespace ubgrad
