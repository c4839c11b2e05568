#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ubgrad/cost.hpp"
#include "ubgrad/model.hpp"
#include "ubgrad/rng.hpp"
#include "ubgrad/smc.hpp"

namespace ubgrad {

/// The two randomization pmfs and the sample-size ladder. P_L(l) is
/// proportional to 2^(-pl_rate l), optionally truncated at l_max; P_P is a
/// pmf on {0,...,p_max}; N_p = np_base 2^p.
struct RandomizationSchedule {
  enum class PpRule {
    Section5,  // 2^(4-p) for p < 4, else 2^-p p log2(p)^2
    Remark,    // 2^-p (p+1) log2(p+2)^2
  };

  double pl_rate = 2.5;
  int l_max = -1;  // < 0: unbounded support
  int l_cap = 30;  // sampling an l beyond this aborts rather than truncating
  int p_max = 2;
  int np_base = 8;
  PpRule pp_rule = PpRule::Section5;

  std::vector<double> pp;       // P_P(p), p = 0..p_max
  std::vector<double> pp_tail;  // tail sums, pp_tail[0] = 1

  static RandomizationSchedule make(int p_max, double pl_rate = 2.5,
                                    int np_base = 8,
                                    PpRule rule = PpRule::Section5,
                                    int l_max = -1);

  double pl(int l) const;
  int n_ladder(int p) const { return np_base << p; }
};

int sample_level(const RandomizationSchedule& sched, RngStream& rng);
int sample_p(const RandomizationSchedule& sched, RngStream& rng);

/// Per-p increments Xi^{l,p} and the pooled estimates they telescope to.
/// Values are stored row-major, (p_count x d_theta).
struct IncrementTable {
  int level = 0;
  int d_theta = 1;
  std::vector<double> xi;
  std::vector<double> pooled;

  int p_count() const { return static_cast<int>(xi.size()) / d_theta; }
  std::span<const double> xi_at(int p) const {
    return {xi.data() + static_cast<std::size_t>(p) * d_theta,
            static_cast<std::size_t>(d_theta)};
  }
  std::span<const double> pooled_at(int p) const {
    return {pooled.data() + static_cast<std::size_t>(p) * d_theta,
            static_cast<std::size_t>(d_theta)};
  }
};

/// Runs P+1 independent fixed-N samplers with sizes N_p - N_{p-1} up to level
/// max(l-1, 0) and forms Xi^{l,p} from successive differences of the pooled
/// estimators: pooled means of phi^0 at l = 0, self-normalized increment
/// estimates at l >= 1.
IncrementTable pooled_increment_run(const ModelSpec& spec, double theta, int l,
                                    int big_p,
                                    const RandomizationSchedule& sched,
                                    const KernelConfig& kernel, RngStream& rng,
                                    CostLedger& ledger);

/// Xi^l = sum_p Xi^{l,p} / tail(p): the coupled-sum estimator of the level-l
/// increment (of eta^0(phi^0) itself at l = 0).
std::vector<double> coupled_sum(const IncrementTable& table,
                                const RandomizationSchedule& sched);

/// Single-pass convenience: draw nothing, run the table, return Xi^l.
std::vector<double> xi_l(const ModelSpec& spec, double theta, int l, int big_p,
                         const RandomizationSchedule& sched,
                         const KernelConfig& kernel, RngStream& rng,
                         CostLedger& ledger);

struct GradientEstimate {
  std::vector<double> value;  // d_theta
  int replicates = 0;
  std::vector<std::pair<int, int>> draws;  // (L_i, P_i)
  double cost_units = 0.0;
  CostLedger ledger;
};

/// The unbiased estimator: m independent single-term draws
/// Xi^{L_i} / P_L(L_i), averaged. Replicate i runs on rng.substream(i), so
/// the result is independent of worker-thread count.
GradientEstimate estimate_gradient(const ModelSpec& spec, double theta, int m,
                                   const RandomizationSchedule& sched,
                                   const KernelConfig& kernel, RngStream& rng,
                                   int n_threads = 1);

/// Biased MLSMC telescoping estimate up to level L with one independent
/// fixed-N run per level; allocation[l] gives N_l.
GradientEstimate mlsmc_baseline_estimate(const ModelSpec& spec, double theta,
                                         int big_l,
                                         std::span<const int> allocation,
                                         const KernelConfig& kernel,
                                         RngStream& rng);

/// Deterministic cost, in ledger units, of one pooled increment run at (l, P).
double pooled_run_cost(const ModelSpec& spec,
                       const RandomizationSchedule& sched, int l, int big_p);

/// Closed-form expected cost of a single-term draw: sum over (l, p) of
/// P_L(l) P_P(p) cost(l, p).
double expected_single_term_cost(const ModelSpec& spec,
                                 const RandomizationSchedule& sched);

}  // namespace ubgrad
