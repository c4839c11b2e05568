#include "ubgrad/debias.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace ubgrad {

namespace {

double pp_weight(RandomizationSchedule::PpRule rule, int p) {
  if (rule == RandomizationSchedule::PpRule::Section5) {
    if (p < 4) return std::ldexp(1.0, 4 - p);
    const double lg = std::log2(static_cast<double>(p));
    return std::ldexp(1.0, -p) * p * lg * lg;
  }
  const double lg = std::log2(static_cast<double>(p) + 2.0);
  return std::ldexp(1.0, -p) * (p + 1) * lg * lg;
}

}  // namespace

RandomizationSchedule RandomizationSchedule::make(int p_max, double pl_rate,
                                                  int np_base, PpRule rule,
                                                  int l_max) {
  if (p_max < 0) throw std::invalid_argument("schedule: p_max must be >= 0");
  if (np_base < 1) throw std::invalid_argument("schedule: np_base must be >= 1");
  if (!(pl_rate > 0.0)) {
    throw std::invalid_argument("schedule: pl_rate must be positive");
  }
  RandomizationSchedule s;
  s.pl_rate = pl_rate;
  s.l_max = l_max;
  s.p_max = p_max;
  s.np_base = np_base;
  s.pp_rule = rule;
  s.pp.resize(p_max + 1);
  double z = 0.0;
  for (int p = 0; p <= p_max; ++p) {
    s.pp[p] = pp_weight(rule, p);
    z += s.pp[p];
  }
  for (double& w : s.pp) w /= z;
  s.pp_tail.resize(p_max + 1);
  double tail = 0.0;
  for (int p = p_max; p >= 0; --p) {
    tail += s.pp[p];
    s.pp_tail[p] = tail;
  }
  s.pp_tail[0] = 1.0;
  return s;
}

double RandomizationSchedule::pl(int l) const {
  if (l < 0) return 0.0;
  const double r = std::exp2(-pl_rate);
  if (l_max < 0) return (1.0 - r) * std::pow(r, l);
  if (l > l_max) return 0.0;
  return (1.0 - r) * std::pow(r, l) / (1.0 - std::pow(r, l_max + 1));
}

int sample_level(const RandomizationSchedule& sched, RngStream& rng) {
  if (sched.l_max < 0) {
    // Inverse CDF of the geometric tail P(L >= l) = r^l.
    const double u = 1.0 - rng.uniform();  // (0, 1]
    const int l = static_cast<int>(
        std::floor(std::log(u) / (-sched.pl_rate * std::log(2.0))));
    if (l > sched.l_cap) {
      throw std::runtime_error("sample_level: drew level beyond l_cap = " +
                               std::to_string(sched.l_cap));
    }
    return l;
  }
  const double u = rng.uniform();
  double acc = 0.0;
  for (int l = 0; l <= sched.l_max; ++l) {
    acc += sched.pl(l);
    if (u < acc) return l;
  }
  return sched.l_max;
}

int sample_p(const RandomizationSchedule& sched, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int p = 0; p <= sched.p_max; ++p) {
    acc += sched.pp[p];
    if (u < acc) return p;
  }
  return sched.p_max;
}

IncrementTable pooled_increment_run(const ModelSpec& spec, double theta, int l,
                                    int big_p,
                                    const RandomizationSchedule& sched,
                                    const KernelConfig& kernel, RngStream& rng,
                                    CostLedger& ledger) {
  if (l < 0 || big_p < 0 || big_p > sched.p_max) {
    throw std::invalid_argument("pooled_increment_run: invalid (l, P)");
  }
  const int dt = spec.theta_dim();

  // Per-particle statistics pooled across the P+1 independent runs: the
  // level-(l-1) potentials and the two phi values at l >= 1, phi^0 at l = 0.
  std::vector<double> log_g;
  std::vector<double> phi_fine;    // phi^l   (l >= 1) or phi^0 (l = 0)
  std::vector<double> phi_coarse;  // phi^{l-1}, l >= 1 only
  std::vector<int> run_end;        // cumulative particle counts

  int total = 0;
  for (int p = 0; p <= big_p; ++p) {
    const int n_new = sched.n_ladder(p) - (p > 0 ? sched.n_ladder(p - 1) : 0);
    RngStream run_rng = rng.substream(p);
    std::vector<ParticleEnsemble> chain;
    try {
      chain = run_mlsmc(spec, theta, n_new, l, kernel, run_rng, ledger);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " [increment run l=" +
                               std::to_string(l) + " p=" + std::to_string(p) +
                               "]");
    }
    const ParticleEnsemble& ens = chain.back();
    for (int i = 0; i < ens.n; ++i) {
      if (l >= 1) {
        log_g.push_back(log_potential(spec, theta, ens, i));
        const double mf = misfit_sq(spec, ens.observations_next(i));
        const double mc = misfit_sq(spec, ens.observations_cur(i));
        phi_fine.resize(phi_fine.size() + dt);
        grad_log_gamma_from_misfit(
            spec, theta, mf,
            {phi_fine.data() + phi_fine.size() - dt, (std::size_t)dt});
        phi_coarse.resize(phi_coarse.size() + dt);
        grad_log_gamma_from_misfit(
            spec, theta, mc,
            {phi_coarse.data() + phi_coarse.size() - dt, (std::size_t)dt});
      } else {
        const double m0 = misfit_sq(spec, ens.observations_cur(i));
        phi_fine.resize(phi_fine.size() + dt);
        grad_log_gamma_from_misfit(
            spec, theta, m0,
            {phi_fine.data() + phi_fine.size() - dt, (std::size_t)dt});
      }
    }
    total += ens.n;
    run_end.push_back(total);
  }

  // Stabilize the potential weights once across the whole pool; the shift
  // cancels in the self-normalized ratio.
  double max_lg = 0.0;
  if (l >= 1) {
    max_lg = *std::max_element(log_g.begin(), log_g.end());
    if (!std::isfinite(max_lg)) {
      throw std::runtime_error("pooled_increment_run: degenerate potentials");
    }
  }

  IncrementTable table;
  table.level = l;
  table.d_theta = dt;
  table.xi.assign(static_cast<std::size_t>(big_p + 1) * dt, 0.0);
  table.pooled.assign(static_cast<std::size_t>(big_p + 1) * dt, 0.0);

  double sum_g = 0.0;
  std::vector<double> sum_g_phi(dt, 0.0);
  std::vector<double> sum_phi_coarse(dt, 0.0);
  std::vector<double> sum_phi0(dt, 0.0);
  std::vector<double> prev_est(dt, 0.0);  // zero by convention at p = -1

  int i = 0;
  for (int p = 0; p <= big_p; ++p) {
    for (; i < run_end[p]; ++i) {
      if (l >= 1) {
        const double g = std::exp(log_g[i] - max_lg);
        sum_g += g;
        for (int d = 0; d < dt; ++d) {
          sum_g_phi[d] += g * phi_fine[static_cast<std::size_t>(i) * dt + d];
          sum_phi_coarse[d] += phi_coarse[static_cast<std::size_t>(i) * dt + d];
        }
      } else {
        for (int d = 0; d < dt; ++d) {
          sum_phi0[d] += phi_fine[static_cast<std::size_t>(i) * dt + d];
        }
      }
    }
    const double n_pool = run_end[p];
    for (int d = 0; d < dt; ++d) {
      const double est = (l >= 1)
                             ? sum_g_phi[d] / sum_g - sum_phi_coarse[d] / n_pool
                             : sum_phi0[d] / n_pool;
      table.pooled[static_cast<std::size_t>(p) * dt + d] = est;
      table.xi[static_cast<std::size_t>(p) * dt + d] = est - prev_est[d];
      prev_est[d] = est;
    }
  }
  return table;
}

std::vector<double> coupled_sum(const IncrementTable& table,
                                const RandomizationSchedule& sched) {
  std::vector<double> out(table.d_theta, 0.0);
  for (int p = 0; p < table.p_count(); ++p) {
    const auto xi = table.xi_at(p);
    for (int d = 0; d < table.d_theta; ++d) {
      out[d] += xi[d] / sched.pp_tail[p];
    }
  }
  return out;
}

std::vector<double> xi_l(const ModelSpec& spec, double theta, int l, int big_p,
                         const RandomizationSchedule& sched,
                         const KernelConfig& kernel, RngStream& rng,
                         CostLedger& ledger) {
  return coupled_sum(
      pooled_increment_run(spec, theta, l, big_p, sched, kernel, rng, ledger),
      sched);
}

GradientEstimate estimate_gradient(const ModelSpec& spec, double theta, int m,
                                   const RandomizationSchedule& sched,
                                   const KernelConfig& kernel, RngStream& rng,
                                   int n_threads) {
  if (m < 1) throw std::invalid_argument("estimate_gradient: m must be >= 1");
  const int dt = spec.theta_dim();

  struct Replicate {
    std::vector<double> term;
    std::pair<int, int> draw;
    CostLedger ledger;
  };
  std::vector<Replicate> reps(m);

  auto run_replicate = [&](int i) {
    RngStream st = rng.substream(static_cast<std::uint64_t>(i));
    const int li = sample_level(sched, st);
    const int pi = sample_p(sched, st);
    Replicate& r = reps[i];
    r.draw = {li, pi};
    r.term = coupled_sum(pooled_increment_run(spec, theta, li, pi, sched,
                                              kernel, st, r.ledger),
                         sched);
    const double inv_pl = 1.0 / sched.pl(li);
    for (double& v : r.term) v *= inv_pl;
  };

  const int workers = std::max(1, std::min(n_threads, m));
  if (workers == 1) {
    for (int i = 0; i < m; ++i) run_replicate(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < m; i = next.fetch_add(1)) {
          run_replicate(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  // Deterministic reduction in replicate order.
  GradientEstimate est;
  est.replicates = m;
  est.value.assign(dt, 0.0);
  est.draws.reserve(m);
  for (const Replicate& r : reps) {
    for (int d = 0; d < dt; ++d) est.value[d] += r.term[d];
    est.draws.push_back(r.draw);
    est.ledger.merge(r.ledger);
  }
  for (double& v : est.value) v /= m;
  est.cost_units = est.ledger.total_units;
  return est;
}

GradientEstimate mlsmc_baseline_estimate(const ModelSpec& spec, double theta,
                                         int big_l,
                                         std::span<const int> allocation,
                                         const KernelConfig& kernel,
                                         RngStream& rng) {
  if (big_l < 0 || static_cast<int>(allocation.size()) < big_l + 1) {
    throw std::invalid_argument("mlsmc_baseline_estimate: bad allocation");
  }
  const int dt = spec.theta_dim();
  GradientEstimate est;
  est.replicates = 1;
  est.value.assign(dt, 0.0);

  std::vector<double> tmp(dt);
  for (int l = 0; l <= big_l; ++l) {
    RngStream st = rng.substream(l);
    const auto chain =
        run_mlsmc(spec, theta, allocation[l], l, kernel, st, est.ledger);
    const ParticleEnsemble& ens = chain.back();
    if (l == 0) {
      std::vector<double> acc(dt, 0.0);
      for (int i = 0; i < ens.n; ++i) {
        grad_log_gamma_from_misfit(
            spec, theta, misfit_sq(spec, ens.observations_cur(i)), tmp);
        for (int d = 0; d < dt; ++d) acc[d] += tmp[d];
      }
      for (int d = 0; d < dt; ++d) est.value[d] += acc[d] / ens.n;
    } else {
      std::vector<double> lg(ens.n);
      for (int i = 0; i < ens.n; ++i) {
        lg[i] = log_potential(spec, theta, ens, i);
      }
      const double mx = *std::max_element(lg.begin(), lg.end());
      double sum_g = 0.0;
      std::vector<double> sum_g_phi(dt, 0.0), sum_phi(dt, 0.0);
      for (int i = 0; i < ens.n; ++i) {
        const double g = std::exp(lg[i] - mx);
        sum_g += g;
        grad_log_gamma_from_misfit(
            spec, theta, misfit_sq(spec, ens.observations_next(i)), tmp);
        for (int d = 0; d < dt; ++d) sum_g_phi[d] += g * tmp[d];
        grad_log_gamma_from_misfit(
            spec, theta, misfit_sq(spec, ens.observations_cur(i)), tmp);
        for (int d = 0; d < dt; ++d) sum_phi[d] += tmp[d];
      }
      for (int d = 0; d < dt; ++d) {
        est.value[d] += sum_g_phi[d] / sum_g - sum_phi[d] / ens.n;
      }
    }
  }
  est.cost_units = est.ledger.total_units;
  return est;
}

double pooled_run_cost(const ModelSpec& spec,
                       const RandomizationSchedule& sched, int l, int big_p) {
  double per_particle = 0.0;
  for (int s = 0; s <= std::max(l - 1, 0); ++s) {
    per_particle += std::ldexp(1.0, spec.mesh(s).l) +
                    std::ldexp(1.0, spec.mesh(s).l + 1);
  }
  return per_particle * sched.n_ladder(big_p);
}

double expected_single_term_cost(const ModelSpec& spec,
                                 const RandomizationSchedule& sched) {
  double cost = 0.0;
  const int l_hi = (sched.l_max >= 0) ? sched.l_max : sched.l_cap;
  for (int l = 0; l <= l_hi; ++l) {
    for (int p = 0; p <= sched.p_max; ++p) {
      cost += sched.pl(l) * sched.pp[p] * pooled_run_cost(spec, sched, l, p);
    }
  }
  return cost;
}

}  // namespace ubgrad
