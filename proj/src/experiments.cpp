#include "ubgrad/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ubgrad/oracle.hpp"
#include "ubgrad/sgd.hpp"

namespace ubgrad {

namespace {

void parallel_for(int n_tasks, int n_threads,
                  const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(n_threads, n_tasks));
  if (workers == 1) {
    for (int i = 0; i < n_tasks; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) {
        body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

std::string csv_header(const ExperimentConfig& cfg, const std::string& schema) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg.source_text)));
  return "# schema=" + schema + "\n# config_hash=" + std::string(buf) + "\n";
}

}  // namespace

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << content;
}

std::vector<int> mlsmc_allocation(int big_l, double n0, double decay) {
  std::vector<int> alloc(big_l + 1);
  for (int l = 0; l <= big_l; ++l) {
    alloc[l] = std::max(
        2, static_cast<int>(std::ceil(n0 * std::exp2(-decay * l))));
  }
  return alloc;
}

double mse_reference_value(const ExperimentConfig& cfg, const ModelSpec& spec) {
  const double theta = cfg.model.theta;
  if (cfg.mse.reference == "analytic") {
    if (spec.variant != ModelVariant::Toy) {
      throw std::runtime_error(
          "[mse].reference=analytic requires the toy model");
    }
    return toy_grad_log_marginal(theta, ToyClosedForm::from_spec(spec));
  }
  if (cfg.mse.reference == "quadrature") {
    return converged_quadrature_expectation(spec, theta,
                                            cfg.mse.reference_level)
        .mean[0];
  }
  // Mean of independent MLSMC estimates at a high level.
  const auto alloc =
      mlsmc_allocation(cfg.mse.reference_mlsmc_level,
                       cfg.mse.reference_mlsmc_n0, cfg.mse.mlsmc_decay);
  RngStream ref_rng = RngStream(cfg.master_seed).substream(0x5ef5eed);
  double acc = 0.0;
  for (int r = 0; r < cfg.mse.reference_mlsmc_runs; ++r) {
    RngStream st = ref_rng.substream(r);
    acc += mlsmc_baseline_estimate(spec, theta, cfg.mse.reference_mlsmc_level,
                                   alloc, cfg.kernel, st)
               .value[0];
  }
  return acc / cfg.mse.reference_mlsmc_runs;
}

std::vector<MseRow> run_single_estimator_experiment(const ExperimentConfig& cfg) {
  const ModelSpec spec = cfg.build_spec();
  const double theta = cfg.model.theta;
  const double truth = mse_reference_value(cfg, spec);
  const int reps = cfg.replicates;

  struct Variant {
    std::string method;
    std::string tag;
    int p_max = 0;  // unbiased
    int m = 1;
    int big_l = 0;  // mlsmc
  };
  std::vector<Variant> variants;
  for (int pm : cfg.mse.p_max_values) {
    for (int m : cfg.mse.m_values) {
      variants.push_back({"unbiased",
                          "pmax=" + std::to_string(pm) + "/m=" +
                              std::to_string(m),
                          pm, m, 0});
    }
  }
  for (int big_l : cfg.mse.mlsmc_levels) {
    variants.push_back({"mlsmc", "L=" + std::to_string(big_l), 0, 0, big_l});
  }

  std::vector<MseRow> rows(variants.size() * reps);
  RngStream root(cfg.master_seed);

  parallel_for(static_cast<int>(rows.size()), cfg.threads, [&](int task) {
    const int v = task / reps;
    const int r = task % reps;
    const Variant& var = variants[v];
    RngStream st = root.substream(v).substream(r);
    GradientEstimate est;
    if (var.method == "unbiased") {
      const RandomizationSchedule sched = cfg.build_schedule(var.p_max);
      est = estimate_gradient(spec, theta, var.m, sched, cfg.kernel, st);
    } else {
      const auto alloc = mlsmc_allocation(
          var.big_l,
          cfg.mse.mlsmc_n0_base * std::pow(cfg.mse.mlsmc_n0_growth, var.big_l),
          cfg.mse.mlsmc_decay);
      est = mlsmc_baseline_estimate(spec, theta, var.big_l, alloc, cfg.kernel,
                                    st);
    }
    const double err = est.value[0] - truth;
    rows[task] = {var.method, var.tag, r, est.cost_units, err * err};
  });
  return rows;
}

std::string mse_csv(const ExperimentConfig& cfg,
                    const std::vector<MseRow>& rows) {
  std::ostringstream out;
  out << csv_header(cfg, "single-estimator-mse v1");
  out << "method,tag,replicate,cost_units,squared_error\n";
  for (const MseRow& r : rows) {
    out << r.method << ',' << r.tag << ',' << r.replicate << ','
        << fmt_double(r.cost_units) << ',' << fmt_double(r.squared_error)
        << '\n';
  }
  return out.str();
}

double sgd_reference_mle(const ExperimentConfig& cfg, const ModelSpec& spec) {
  if (cfg.sgd.reference == "analytic") {
    if (spec.variant != ModelVariant::Toy) {
      throw std::runtime_error(
          "[sgd].reference=analytic requires the toy model");
    }
    return mle_toy(ToyClosedForm::from_spec(spec)).theta;
  }
  // Golden-section maximization of the quadrature log-normalizer.
  const int level = cfg.sgd.reference_level;
  const auto value = [&](double log_theta) {
    return converged_quadrature_expectation(spec, std::exp(log_theta), level)
        .log_normalizer;
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -10.0, hi = 10.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = value(x1), f2 = value(x2);
  while (hi - lo > 1e-8) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = value(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = value(x1);
    }
  }
  return std::exp(0.5 * (lo + hi));
}

std::vector<int> checkpoint_grid(int last, int base, double growth) {
  std::vector<int> grid;
  for (int k = 0; k <= std::min(last, base); ++k) grid.push_back(k);
  double next = base * growth;
  while (next < last) {
    const int k = static_cast<int>(std::ceil(next));
    if (k > grid.back() && k < last) grid.push_back(k);
    next *= growth;
  }
  if (last > grid.back()) grid.push_back(last);
  return grid;
}

std::vector<SgdRow> run_sgd_experiment(const ExperimentConfig& cfg) {
  const ModelSpec spec = cfg.build_spec();
  const double mle = sgd_reference_mle(cfg, spec);
  const double theta_star = cfg.model.theta_true;
  const int reps = cfg.replicates;

  struct Variant {
    std::string tag;
    bool unbiased = true;
    double alpha1 = 0.1;
    int m = 1;
    int big_l = 0;
  };
  std::vector<Variant> variants;
  const std::vector<double> alphas =
      cfg.sgd.alpha1_values.empty() ? std::vector<double>{cfg.sgd.alpha1}
                                    : cfg.sgd.alpha1_values;
  const std::vector<int> ms = cfg.sgd.m_values.empty()
                                  ? std::vector<int>{cfg.sgd.m_per_step}
                                  : cfg.sgd.m_values;
  for (double a : alphas) {
    for (int m : ms) {
      std::ostringstream tag;
      tag << "unbiased/a=" << a << "/m=" << m;
      variants.push_back({tag.str(), true, a, m, 0});
    }
  }
  for (int big_l : cfg.sgd.mlsmc_levels) {
    std::ostringstream tag;
    tag << "mlsmc/L=" << big_l << "/a=" << cfg.sgd.alpha1;
    variants.push_back({tag.str(), false, cfg.sgd.alpha1, 1, big_l});
  }

  const std::vector<int> grid = checkpoint_grid(
      cfg.sgd.iterations, cfg.sgd.checkpoint_base, cfg.sgd.checkpoint_growth);

  std::vector<std::vector<SgdRow>> per_task(variants.size() * reps);
  RngStream root(cfg.master_seed);

  parallel_for(static_cast<int>(per_task.size()), cfg.threads, [&](int task) {
    const int v = task / reps;
    const int r = task % reps;
    const Variant& var = variants[v];

    SGDConfig scfg;
    scfg.xi_init = cfg.sgd.xi_init;
    scfg.step_rule = cfg.sgd.step_rule == "constant"
                         ? SGDConfig::StepRule::Constant
                         : SGDConfig::StepRule::Harmonic;
    scfg.alpha1 = var.alpha1;
    scfg.iterations = cfg.sgd.iterations;
    scfg.m_per_step = var.m;
    scfg.sign = cfg.sgd.sign == "paper" ? SGDConfig::Sign::PaperVerbatim
                                        : SGDConfig::Sign::AscentOnLoglik;

    RngStream st = root.substream(v).substream(r);
    SGDTrace trace;
    if (var.unbiased) {
      const RandomizationSchedule sched = cfg.build_schedule();
      trace = run_sgd(spec, scfg, sched, cfg.kernel, st);
    } else {
      const auto alloc =
          mlsmc_allocation(var.big_l, cfg.sgd.mlsmc_n0, cfg.sgd.mlsmc_decay);
      trace = run_sgd_with_mlsmc(spec, scfg, var.big_l, alloc, cfg.kernel, st);
    }

    auto& out = per_task[task];
    out.reserve(grid.size());
    for (int k : grid) {
      if (k >= static_cast<int>(trace.rows.size())) break;
      const SGDTraceRow& row = trace.rows[k];
      const double em = row.theta - mle;
      const double es = row.theta - theta_star;
      out.push_back({var.tag, r, row.cost_cumulative, em * em, es * es});
    }
  });

  std::vector<SgdRow> rows;
  for (const auto& part : per_task) {
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::string sgd_csv(const ExperimentConfig& cfg,
                    const std::vector<SgdRow>& rows) {
  std::ostringstream out;
  out << csv_header(cfg, "sgd-mse v1");
  out << "variant,replicate,cumulative_cost,squared_error_to_mle";
  if (cfg.sgd.report_theta_star) out << ",squared_error_to_theta_star";
  out << '\n';
  for (const SgdRow& r : rows) {
    out << r.variant << ',' << r.replicate << ','
        << fmt_double(r.cumulative_cost) << ','
        << fmt_double(r.squared_error_to_mle);
    if (cfg.sgd.report_theta_star) {
      out << ',' << fmt_double(r.squared_error_to_theta_star);
    }
    out << '\n';
  }
  return out.str();
}

GradientEstimate run_estimate(const ExperimentConfig& cfg) {
  const ModelSpec spec = cfg.build_spec();
  const RandomizationSchedule sched = cfg.build_schedule();
  RngStream rng(cfg.master_seed);
  return estimate_gradient(spec, cfg.model.theta, cfg.estimate.m, sched,
                           cfg.kernel, rng, cfg.threads);
}

std::string describe_estimate(const GradientEstimate& est) {
  std::ostringstream out;
  out << "estimate =";
  for (double v : est.value) out << ' ' << fmt_double(v);
  out << "\nreplicates = " << est.replicates << "\ndraws =";
  for (const auto& [l, p] : est.draws) {
    out << " (L=" << l << ",P=" << p << ')';
  }
  out << "\ncost_units = " << fmt_double(est.cost_units) << '\n';
  return out.str();
}

std::string oracle_report(const ExperimentConfig& cfg) {
  const ModelSpec spec = cfg.build_spec();
  const double theta = cfg.model.theta;
  std::ostringstream out;
  if (spec.variant == ModelVariant::Toy) {
    const ToyClosedForm cf = ToyClosedForm::from_spec(spec);
    const MleResult mle = mle_toy(cf);
    out << "toy_log_marginal(theta=" << fmt_double(theta)
        << ") = " << fmt_double(toy_log_marginal(theta, cf)) << '\n';
    out << "toy_grad_log_marginal = "
        << fmt_double(toy_grad_log_marginal(theta, cf)) << '\n';
    out << "mle_theta = " << fmt_double(mle.theta)
        << (mle.interior ? "" : " (boundary)") << '\n';
  }
  const QuadratureResult q =
      converged_quadrature_expectation(spec, theta, cfg.oracle.level);
  out << "quadrature level " << cfg.oracle.level
      << ": log_normalizer = " << fmt_double(q.log_normalizer)
      << ", mean_phi = " << fmt_double(q.mean[0]) << ", nodes = " << q.nodes
      << '\n';
  return out.str();
}

}  // namespace ubgrad
