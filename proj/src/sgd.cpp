#include "ubgrad/sgd.hpp"

#include <cmath>
#include <stdexcept>

namespace ubgrad {

SGDTrace run_sgd_core(const SGDConfig& cfg, const GradientSource& grad,
                      RngStream& rng) {
  if (cfg.iterations < 0) {
    throw std::invalid_argument("run_sgd: iterations must be >= 0");
  }
  SGDTrace trace;
  trace.rows.reserve(cfg.iterations + 1);
  double xi = cfg.xi_init;
  double cost = 0.0;
  trace.rows.push_back({0, xi, std::exp(xi), 0.0, 0.0, 0.0});

  int quiet = 0;
  for (int k = 1; k <= cfg.iterations; ++k) {
    const double theta = std::exp(xi);
    RngStream st = rng.substream(static_cast<std::uint64_t>(k));
    const GradientEstimate est = grad(theta, st);
    const double alpha = (cfg.step_rule == SGDConfig::StepRule::Harmonic)
                             ? cfg.alpha1 / k
                             : cfg.alpha1;
    double step = alpha * est.value[0] * theta;
    if (cfg.sign == SGDConfig::Sign::PaperVerbatim) step = -step;
    xi += step;
    if (!std::isfinite(xi)) {
      throw std::runtime_error("run_sgd: iterate diverged at iteration " +
                               std::to_string(k));
    }
    cost += est.cost_units;
    trace.rows.push_back({k, xi, std::exp(xi), step, est.cost_units, cost});

    if (cfg.early_stop) {
      quiet = (std::abs(step) < 1e-8) ? quiet + 1 : 0;
      if (quiet >= 50) break;
    }
  }
  return trace;
}

SGDTrace run_sgd(const ModelSpec& spec, const SGDConfig& cfg,
                 const RandomizationSchedule& sched, const KernelConfig& kernel,
                 RngStream& rng) {
  return run_sgd_core(
      cfg,
      [&](double theta, RngStream& st) {
        return estimate_gradient(spec, theta, cfg.m_per_step, sched, kernel,
                                 st);
      },
      rng);
}

SGDTrace run_sgd_with_mlsmc(const ModelSpec& spec, const SGDConfig& cfg,
                            int big_l, std::span<const int> allocation,
                            const KernelConfig& kernel, RngStream& rng) {
  return run_sgd_core(
      cfg,
      [&](double theta, RngStream& st) {
        return mlsmc_baseline_estimate(spec, theta, big_l, allocation, kernel,
                                       st);
      },
      rng);
}

}  // namespace ubgrad
