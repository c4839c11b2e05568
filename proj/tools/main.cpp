#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "ubgrad/experiments.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file")
      ->required();
  cmd->add_option("--seed", opts.seed, "override [experiment].master_seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--out", opts.out, "override [experiment].out");
  cmd->add_option("--threads", opts.threads, "worker threads");
}

ubgrad::ExperimentConfig load(const CommonOpts& opts) {
  ubgrad::ExperimentConfig cfg = ubgrad::load_config_file(opts.config_path);
  if (opts.seed_set) cfg.master_seed = opts.seed;
  if (!opts.out.empty()) cfg.out = opts.out;
  if (opts.threads > 0) cfg.threads = opts.threads;
  return cfg;
}

void require_kind(const ubgrad::ExperimentConfig& cfg, const std::string& want) {
  if (cfg.kind != want) {
    throw std::runtime_error("config [experiment].kind is '" + cfg.kind +
                             "' but the subcommand expects '" + want + "'");
  }
}

void emit(const ubgrad::ExperimentConfig& cfg, const std::string& csv) {
  if (cfg.out.empty()) {
    std::cout << csv;
  } else {
    ubgrad::write_file(cfg.out, csv);
    std::cout << "wrote " << cfg.out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Unbiased gradient estimation for PDE-constrained Bayesian inverse "
      "problems"};
  app.require_subcommand(1);

  CommonOpts est_opts, mse_opts, sgd_opts, oracle_opts;
  CLI::App* est = app.add_subcommand(
      "estimate", "one unbiased gradient estimate at the configured theta");
  add_common(est, est_opts);
  CLI::App* mse = app.add_subcommand(
      "mse", "MSE-vs-cost study of the single estimator (CSV)");
  add_common(mse, mse_opts);
  CLI::App* sgd =
      app.add_subcommand("sgd", "SGD parameter-estimation study (CSV)");
  add_common(sgd, sgd_opts);
  CLI::App* oracle = app.add_subcommand(
      "oracle", "ground-truth values for the configured model");
  add_common(oracle, oracle_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (est->parsed()) {
      const auto cfg = load(est_opts);
      std::cout << ubgrad::describe_estimate(ubgrad::run_estimate(cfg));
    } else if (mse->parsed()) {
      const auto cfg = load(mse_opts);
      require_kind(cfg, "single-estimator-mse");
      emit(cfg, ubgrad::mse_csv(cfg, ubgrad::run_single_estimator_experiment(cfg)));
    } else if (sgd->parsed()) {
      const auto cfg = load(sgd_opts);
      require_kind(cfg, "sgd-mse");
      emit(cfg, ubgrad::sgd_csv(cfg, ubgrad::run_sgd_experiment(cfg)));
    } else if (oracle->parsed()) {
      const auto cfg = load(oracle_opts);
      std::cout << ubgrad::oracle_report(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
