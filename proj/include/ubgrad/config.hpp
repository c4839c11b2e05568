#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ubgrad/debias.hpp"
#include "ubgrad/model.hpp"
#include "ubgrad/smc.hpp"

namespace ubgrad {

/// Flat key-value configuration with [section] headers, '#' comments, and a
/// fixed schema: unknown sections or keys are errors carrying the field path.

struct ModelConfig {
  std::string variant = "toy";  // toy | general
  int m_obs = 50;               // toy observation count, x_i = i/(m_obs+1)
  double theta = 2.0;           // evaluation point
  double theta_prior_sigma = 1.0;
  std::vector<double> u_true = {0.5};
  double theta_true = 2.0;  // "inf" for noise-free data
  int truth_mesh_level = 12;
  std::uint64_t data_seed = 7;
  int mesh_offset = 2;
};

struct ScheduleConfig {
  double pl_rate = 2.5;
  int p_max = 2;
  int np_base = 8;
  std::string pp_rule = "section5";  // section5 | remark
  int l_max = -1;
};

struct EstimateConfig {
  int m = 1;
};

struct MseConfig {
  std::vector<int> m_values = {8, 32, 128};
  std::vector<int> p_max_values = {0, 1, 2};
  std::vector<int> mlsmc_levels = {0, 1, 2, 3};
  double mlsmc_n0_base = 16.0;    // N_0(L) = n0_base * n0_growth^L
  double mlsmc_n0_growth = 16.0;  // matches the squared-bias decay
  double mlsmc_decay = 2.5;       // N_l = ceil(N_0(L) 2^(-decay l))
  std::string reference = "analytic";  // analytic | quadrature | mlsmc
  int reference_level = 8;             // quadrature schedule level
  int reference_mlsmc_level = 12;
  int reference_mlsmc_runs = 50;
  double reference_mlsmc_n0 = 1024.0;
};

struct SgdExpConfig {
  double xi_init = 0.0;
  std::string step_rule = "harmonic";  // harmonic | constant
  double alpha1 = 0.1;
  int iterations = 1000;
  int m_per_step = 1;
  std::string sign = "ascent";  // ascent | paper
  std::vector<double> alpha1_values;  // empty: {alpha1}
  std::vector<int> m_values;          // empty: {m_per_step}
  std::vector<int> mlsmc_levels;      // empty: no MLSMC-driven variants
  double mlsmc_n0 = 8.0;
  double mlsmc_decay = 2.5;
  int checkpoint_base = 16;  // rows at every k <= base, geometric grid after
  double checkpoint_growth = 1.189207115002721;  // 2^(1/4)
  std::string reference = "analytic";  // analytic | quadrature
  int reference_level = 8;
  bool report_theta_star = false;  // extra squared_error_to_theta_star column
};

struct OracleConfig {
  int level = 4;  // schedule level for quadrature printouts
};

struct ExperimentConfig {
  ModelConfig model;
  ScheduleConfig schedule;
  KernelConfig kernel;
  EstimateConfig estimate;
  MseConfig mse;
  SgdExpConfig sgd;
  OracleConfig oracle;

  std::string kind = "estimate";  // estimate | single-estimator-mse |
                                  // sgd-mse | oracle
  int replicates = 1;
  std::uint64_t master_seed = 1;
  std::string out;
  int threads = 1;

  std::string source_text;  // verbatim config, hashed into CSV headers

  ModelSpec build_spec() const;
  RandomizationSchedule build_schedule(int p_max_override = -1) const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// FNV-1a over the verbatim config text.
std::uint64_t config_hash(const std::string& text);

}  // namespace ubgrad
