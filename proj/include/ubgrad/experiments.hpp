#pragma once

#include <string>
#include <vector>

#include "ubgrad/config.hpp"
#include "ubgrad/debias.hpp"

namespace ubgrad {

struct MseRow {
  std::string method;  // "unbiased" | "mlsmc"
  std::string tag;     // variant label, e.g. "pmax=0/m=32" or "L=3"
  int replicate = 0;
  double cost_units = 0.0;
  double squared_error = 0.0;
};

struct SgdRow {
  std::string variant;
  int replicate = 0;
  double cumulative_cost = 0.0;
  double squared_error_to_mle = 0.0;
  double squared_error_to_theta_star = 0.0;  // emitted only when configured
};

/// Level allocation N_l = max(2, ceil(n0 2^(-decay l))), l = 0..L.
std::vector<int> mlsmc_allocation(int big_l, double n0, double decay);

/// Truth value of the gradient at cfg.model.theta, per [mse].reference.
double mse_reference_value(const ExperimentConfig& cfg, const ModelSpec& spec);

/// Reference MLE for the SGD study, per [sgd].reference.
double sgd_reference_mle(const ExperimentConfig& cfg, const ModelSpec& spec);

std::vector<MseRow> run_single_estimator_experiment(const ExperimentConfig& cfg);
std::vector<SgdRow> run_sgd_experiment(const ExperimentConfig& cfg);

std::string mse_csv(const ExperimentConfig& cfg,
                    const std::vector<MseRow>& rows);
std::string sgd_csv(const ExperimentConfig& cfg,
                    const std::vector<SgdRow>& rows);

/// One estimate_gradient call at the configured theta.
GradientEstimate run_estimate(const ExperimentConfig& cfg);
std::string describe_estimate(const GradientEstimate& est);

/// Ground-truth printout (closed forms for the toy model, quadrature values
/// for both variants).
std::string oracle_report(const ExperimentConfig& cfg);

/// Geometric trace-sampling grid: every iteration up to `base`, then steps
/// growing by `growth`, always including 0 and `last`.
std::vector<int> checkpoint_grid(int last, int base, double growth);

std::string fmt_double(double v);

void write_file(const std::string& path, const std::string& content);

}  // namespace ubgrad
