#include "ubgrad/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ubgrad {

std::vector<double> normalized_weights(std::span<const double> log_weights) {
  const double mx = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(mx)) {
    throw std::runtime_error("normalized_weights: all weights degenerate");
  }
  std::vector<double> w(log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - mx);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

std::vector<int> multinomial_resample(std::span<const double> log_weights,
                                      int n_draws, RngStream& rng) {
  const std::vector<double> w = normalized_weights(log_weights);
  std::vector<double> cdf(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  std::vector<int> idx(n_draws);
  for (int i = 0; i < n_draws; ++i) {
    const double v = rng.uniform();
    idx[i] = static_cast<int>(
        std::upper_bound(cdf.begin(), cdf.end(), v) - cdf.begin());
  }
  return idx;
}

double reflect_unit(double x) {
  while (x > 1.0 || x < -1.0) {
    x = (x > 1.0) ? 2.0 - x : -2.0 - x;
  }
  return x;
}

void mcmc_move(const ModelSpec& spec, double theta, int level,
               const KernelConfig& cfg, std::span<double> u,
               std::vector<double>& obs, double& log_target, RngStream& rng) {
  const int k = spec.latent_dim;
  std::vector<double> prop(k);
  for (int step = 0; step < cfg.n_mcmc_steps; ++step) {
    for (int d = 0; d < k; ++d) {
      prop[d] = reflect_unit(u[d] + cfg.proposal_std * rng.normal());
    }
    auto prop_obs = forward_observations(spec, prop, spec.mesh(level));
    const double lg =
        log_gamma_from_misfit(spec, theta, misfit_sq(spec, prop_obs));
    if (std::log(1.0 - rng.uniform()) < lg - log_target) {
      std::copy(prop.begin(), prop.end(), u.begin());
      obs = std::move(prop_obs);
      log_target = lg;
    }
  }
}

namespace {

void fill_obs_next(const ModelSpec& spec, ParticleEnsemble& ens) {
  for (int i = 0; i < ens.n; ++i) {
    const auto obs =
        forward_observations(spec, ens.particle(i), spec.mesh(ens.level + 1));
    std::copy(obs.begin(), obs.end(),
              ens.obs_next.begin() + static_cast<std::size_t>(i) * ens.m_obs);
  }
}

void charge_level(CostLedger& ledger, const ModelSpec& spec, int level, int n) {
  ledger.record_solve(spec.mesh(level).l, n);
  ledger.record_solve(spec.mesh(level).l + 1, n);
}

}  // namespace

ParticleEnsemble init_level0(const ModelSpec& spec, double theta, int n,
                             const KernelConfig& cfg, RngStream& rng,
                             CostLedger& ledger) {
  if (n < 1) throw std::invalid_argument("init_level0: n must be >= 1");
  const int k = spec.latent_dim;
  const int m = spec.obs_count();

  // Prior draws and their level-0 targets.
  std::vector<double> draws(static_cast<std::size_t>(n) * k);
  std::vector<double> obs(static_cast<std::size_t>(n) * m);
  std::vector<double> logw(n);
  std::vector<double> cur(k);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < k; ++d) cur[d] = rng.uniform(-1.0, 1.0);
    std::copy(cur.begin(), cur.end(),
              draws.begin() + static_cast<std::size_t>(i) * k);
    const auto oi = forward_observations(spec, cur, spec.mesh(0));
    std::copy(oi.begin(), oi.end(),
              obs.begin() + static_cast<std::size_t>(i) * m);
    logw[i] = log_gamma_from_misfit(spec, theta, misfit_sq(spec, oi));
  }

  std::vector<int> anc;
  try {
    anc = multinomial_resample(logw, n, rng);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("init_level0: degenerate initialization weights");
  }

  ParticleEnsemble ens;
  ens.level = 0;
  ens.n = n;
  ens.dim = k;
  ens.m_obs = m;
  ens.u.resize(static_cast<std::size_t>(n) * k);
  ens.obs_cur.resize(static_cast<std::size_t>(n) * m);
  ens.obs_next.resize(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    const int a = anc[i];
    std::copy_n(draws.begin() + static_cast<std::size_t>(a) * k, k,
                ens.u.begin() + static_cast<std::size_t>(i) * k);
    std::copy_n(obs.begin() + static_cast<std::size_t>(a) * m, m,
                ens.obs_cur.begin() + static_cast<std::size_t>(i) * m);
  }

  std::vector<double> obs_i(m);
  for (int i = 0; i < n; ++i) {
    auto oi = ens.observations_cur(i);
    obs_i.assign(oi.begin(), oi.end());
    double lg = log_gamma_from_misfit(spec, theta, misfit_sq(spec, obs_i));
    for (int sweep = 0; sweep < cfg.n_init_sweeps; ++sweep) {
      mcmc_move(spec, theta, 0, cfg, ens.particle(i), obs_i, lg, rng);
    }
    std::copy(obs_i.begin(), obs_i.end(),
              ens.obs_cur.begin() + static_cast<std::size_t>(i) * m);
  }

  fill_obs_next(spec, ens);
  charge_level(ledger, spec, 0, n);
  return ens;
}

double log_potential(const ModelSpec& spec, double theta,
                     const ParticleEnsemble& ens, int i) {
  return -0.5 * theta *
         (misfit_sq(spec, ens.observations_next(i)) -
          misfit_sq(spec, ens.observations_cur(i)));
}

ParticleEnsemble advance(const ModelSpec& spec, double theta,
                         const ParticleEnsemble& prev, const KernelConfig& cfg,
                         RngStream& rng, CostLedger& ledger) {
  const int n = prev.n;
  const int k = prev.dim;
  const int m = prev.m_obs;
  std::vector<double> logpot(n);
  for (int i = 0; i < n; ++i) logpot[i] = log_potential(spec, theta, prev, i);

  std::vector<int> anc;
  try {
    anc = multinomial_resample(logpot, n, rng);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("advance: all level-ratio potentials degenerate");
  }

  ParticleEnsemble ens;
  ens.level = prev.level + 1;
  ens.n = n;
  ens.dim = k;
  ens.m_obs = m;
  ens.u.resize(static_cast<std::size_t>(n) * k);
  ens.obs_cur.resize(static_cast<std::size_t>(n) * m);
  ens.obs_next.resize(static_cast<std::size_t>(n) * m);

  std::vector<double> obs_i(m);
  for (int i = 0; i < n; ++i) {
    const int a = anc[i];
    std::copy_n(prev.u.begin() + static_cast<std::size_t>(a) * k, k,
                ens.u.begin() + static_cast<std::size_t>(i) * k);
    // The ancestor's level-(s+1) observations are this particle's
    // level-s observations at the new level.
    auto oa = prev.observations_next(a);
    obs_i.assign(oa.begin(), oa.end());
    double lg = log_gamma_from_misfit(spec, theta, misfit_sq(spec, obs_i));
    mcmc_move(spec, theta, ens.level, cfg, ens.particle(i), obs_i, lg, rng);
    std::copy(obs_i.begin(), obs_i.end(),
              ens.obs_cur.begin() + static_cast<std::size_t>(i) * m);
  }

  fill_obs_next(spec, ens);
  charge_level(ledger, spec, ens.level, n);
  return ens;
}

std::vector<ParticleEnsemble> run_mlsmc(const ModelSpec& spec, double theta,
                                        int n, int target_level,
                                        const KernelConfig& cfg, RngStream& rng,
                                        CostLedger& ledger) {
  if (target_level < 0) {
    throw std::invalid_argument("run_mlsmc: target_level must be >= 0");
  }
  const int top = std::max(target_level - 1, 0);
  std::vector<ParticleEnsemble> out;
  out.reserve(top + 1);
  out.push_back(init_level0(spec, theta, n, cfg, rng, ledger));
  for (int s = 1; s <= top; ++s) {
    out.push_back(advance(spec, theta, out.back(), cfg, rng, ledger));
  }
  return out;
}

}  // namespace ubgrad
