#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ubgrad/debias.hpp"
#include "ubgrad/model.hpp"
#include "ubgrad/rng.hpp"

namespace ubgrad {

/// Stochastic gradient iteration on xi = log(theta). The update moves xi by
/// alpha_k * estimate * exp(xi_k); AscentOnLoglik adds the step (climbing the
/// log-likelihood towards the MLE), PaperVerbatim subtracts it.
struct SGDConfig {
  double xi_init = 0.0;
  enum class StepRule { Harmonic, Constant } step_rule = StepRule::Harmonic;
  double alpha1 = 0.1;  // alpha_k = alpha1 / k, or the constant step
  int iterations = 1000;
  int m_per_step = 1;
  enum class Sign { AscentOnLoglik, PaperVerbatim } sign = Sign::AscentOnLoglik;
  bool early_stop = false;  // stop after 50 consecutive |step| < 1e-8
};

struct SGDTraceRow {
  int iteration = 0;  // completed updates
  double xi = 0.0;
  double theta = 0.0;
  double step = 0.0;  // signed xi change of this iteration
  double cost_increment = 0.0;
  double cost_cumulative = 0.0;
};

struct SGDTrace {
  std::vector<SGDTraceRow> rows;  // rows[0] is the initial point
};

using GradientSource = std::function<GradientEstimate(double theta, RngStream&)>;

/// Iteration driver shared by every gradient backend; iteration k draws its
/// gradient on rng.substream(k). Throws std::runtime_error when an iterate
/// leaves the finite range.
SGDTrace run_sgd_core(const SGDConfig& cfg, const GradientSource& grad,
                      RngStream& rng);

/// SGD stepping with the unbiased estimator.
SGDTrace run_sgd(const ModelSpec& spec, const SGDConfig& cfg,
                 const RandomizationSchedule& sched, const KernelConfig& kernel,
                 RngStream& rng);

/// SGD stepping with the biased MLSMC estimate at fixed level big_l.
SGDTrace run_sgd_with_mlsmc(const ModelSpec& spec, const SGDConfig& cfg,
                            int big_l, std::span<const int> allocation,
                            const KernelConfig& kernel, RngStream& rng);

}  // namespace ubgrad
