#include "ubgrad/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ubgrad {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct RawConfig {
  // section -> key -> value
  std::map<std::string, std::map<std::string, std::string>> entries;
};

RawConfig tokenize(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": key outside any [section]");
    }
    if (!raw.entries[section].emplace(key, value).second) {
      throw std::runtime_error("config: duplicate key [" + section + "]." +
                               key);
    }
  }
  return raw;
}

class SectionReader {
 public:
  SectionReader(const RawConfig& raw, std::string section)
      : section_(std::move(section)) {
    const auto it = raw.entries.find(section_);
    if (it != raw.entries.end()) kv_ = &it->second;
  }

  bool has(const std::string& key) const {
    if (kv_ && kv_->count(key)) {
      seen_.insert(key);
      return true;
    }
    return false;
  }

  std::string str(const std::string& key, const std::string& dflt) const {
    return has(key) ? kv_->at(key) : dflt;
  }

  double num(const std::string& key, double dflt) const {
    if (!has(key)) return dflt;
    return parse_double(kv_->at(key), key);
  }

  int integer(const std::string& key, int dflt) const {
    if (!has(key)) return dflt;
    const std::string& v = kv_->at(key);
    try {
      std::size_t pos = 0;
      const int out = std::stoi(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw std::runtime_error(path(key) + ": expected integer, got '" + v +
                               "'");
    }
  }

  std::uint64_t u64(const std::string& key, std::uint64_t dflt) const {
    if (!has(key)) return dflt;
    const std::string& v = kv_->at(key);
    try {
      std::size_t pos = 0;
      const std::uint64_t out = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw std::runtime_error(path(key) + ": expected unsigned integer");
    }
  }

  bool flag(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    const std::string& v = kv_->at(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::runtime_error(path(key) + ": expected true/false");
  }

  std::vector<double> num_list(const std::string& key,
                               std::vector<double> dflt) const {
    if (!has(key)) return dflt;
    std::vector<double> out;
    std::istringstream ss(kv_->at(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      out.push_back(parse_double(item, key));
    }
    return out;
  }

  std::vector<int> int_list(const std::string& key,
                            std::vector<int> dflt) const {
    if (!has(key)) return dflt;
    std::vector<int> out;
    for (double v : num_list(key, {})) out.push_back(static_cast<int>(v));
    return out;
  }

  void finish() const {
    if (!kv_) return;
    for (const auto& [key, value] : *kv_) {
      (void)value;
      if (!seen_.count(key)) {
        throw std::runtime_error("config: unknown key [" + section_ + "]." +
                                 key);
      }
    }
  }

 private:
  std::string path(const std::string& key) const {
    return "config [" + section_ + "]." + key;
  }

  double parse_double(const std::string& v, const std::string& key) const {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw std::runtime_error(path(key) + ": expected number, got '" + v +
                               "'");
    }
  }

  std::string section_;
  const std::map<std::string, std::string>* kv_ = nullptr;
  mutable std::set<std::string> seen_;
};

void check_choice(const std::string& value, const std::set<std::string>& ok,
                  const std::string& path) {
  if (!ok.count(value)) {
    throw std::runtime_error("config " + path + ": invalid value '" + value +
                             "'");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  const RawConfig raw = tokenize(text);
  for (const auto& [section, kv] : raw.entries) {
    (void)kv;
    static const std::set<std::string> known = {
        "model", "schedule", "kernel", "experiment",
        "estimate", "mse", "sgd", "oracle"};
    if (!known.count(section)) {
      throw std::runtime_error("config: unknown section [" + section + "]");
    }
  }

  ExperimentConfig cfg;
  cfg.source_text = text;

  {
    SectionReader s(raw, "model");
    cfg.model.variant = s.str("variant", cfg.model.variant);
    check_choice(cfg.model.variant, {"toy", "general"}, "[model].variant");
    cfg.model.m_obs = s.integer("m_obs", cfg.model.m_obs);
    cfg.model.theta = s.num("theta", cfg.model.theta);
    cfg.model.theta_prior_sigma =
        s.num("theta_prior_sigma", cfg.model.theta_prior_sigma);
    cfg.model.u_true = s.num_list("u_true", cfg.model.u_true);
    cfg.model.theta_true = s.num("theta_true", cfg.model.theta_true);
    cfg.model.truth_mesh_level =
        s.integer("truth_mesh_level", cfg.model.truth_mesh_level);
    cfg.model.data_seed = s.u64("data_seed", cfg.model.data_seed);
    cfg.model.mesh_offset = s.integer("mesh_offset", cfg.model.mesh_offset);
    s.finish();
  }
  {
    SectionReader s(raw, "schedule");
    cfg.schedule.pl_rate = s.num("pl_rate", cfg.schedule.pl_rate);
    cfg.schedule.p_max = s.integer("p_max", cfg.schedule.p_max);
    cfg.schedule.np_base = s.integer("np_base", cfg.schedule.np_base);
    cfg.schedule.pp_rule = s.str("pp_rule", cfg.schedule.pp_rule);
    check_choice(cfg.schedule.pp_rule, {"section5", "remark"},
                 "[schedule].pp_rule");
    cfg.schedule.l_max = s.integer("l_max", cfg.schedule.l_max);
    s.finish();
  }
  {
    SectionReader s(raw, "kernel");
    cfg.kernel.proposal_std = s.num("proposal_std", cfg.kernel.proposal_std);
    cfg.kernel.n_mcmc_steps = s.integer("n_mcmc_steps", cfg.kernel.n_mcmc_steps);
    cfg.kernel.n_init_sweeps =
        s.integer("n_init_sweeps", cfg.kernel.n_init_sweeps);
    s.finish();
  }
  {
    SectionReader s(raw, "experiment");
    cfg.kind = s.str("kind", cfg.kind);
    check_choice(cfg.kind,
                 {"estimate", "single-estimator-mse", "sgd-mse", "oracle"},
                 "[experiment].kind");
    cfg.replicates = s.integer("replicates", cfg.replicates);
    cfg.master_seed = s.u64("master_seed", cfg.master_seed);
    cfg.out = s.str("out", cfg.out);
    cfg.threads = s.integer("threads", cfg.threads);
    s.finish();
  }
  {
    SectionReader s(raw, "estimate");
    cfg.estimate.m = s.integer("m", cfg.estimate.m);
    s.finish();
  }
  {
    SectionReader s(raw, "mse");
    cfg.mse.m_values = s.int_list("m_values", cfg.mse.m_values);
    cfg.mse.p_max_values = s.int_list("p_max_values", cfg.mse.p_max_values);
    cfg.mse.mlsmc_levels = s.int_list("mlsmc_levels", cfg.mse.mlsmc_levels);
    cfg.mse.mlsmc_n0_base = s.num("mlsmc_n0_base", cfg.mse.mlsmc_n0_base);
    cfg.mse.mlsmc_n0_growth = s.num("mlsmc_n0_growth", cfg.mse.mlsmc_n0_growth);
    cfg.mse.mlsmc_decay = s.num("mlsmc_decay", cfg.mse.mlsmc_decay);
    cfg.mse.reference = s.str("reference", cfg.mse.reference);
    check_choice(cfg.mse.reference, {"analytic", "quadrature", "mlsmc"},
                 "[mse].reference");
    cfg.mse.reference_level = s.integer("reference_level", cfg.mse.reference_level);
    cfg.mse.reference_mlsmc_level =
        s.integer("reference_mlsmc_level", cfg.mse.reference_mlsmc_level);
    cfg.mse.reference_mlsmc_runs =
        s.integer("reference_mlsmc_runs", cfg.mse.reference_mlsmc_runs);
    cfg.mse.reference_mlsmc_n0 =
        s.num("reference_mlsmc_n0", cfg.mse.reference_mlsmc_n0);
    s.finish();
  }
  {
    SectionReader s(raw, "sgd");
    cfg.sgd.xi_init = s.num("xi_init", cfg.sgd.xi_init);
    cfg.sgd.step_rule = s.str("step_rule", cfg.sgd.step_rule);
    check_choice(cfg.sgd.step_rule, {"harmonic", "constant"},
                 "[sgd].step_rule");
    cfg.sgd.alpha1 = s.num("alpha1", cfg.sgd.alpha1);
    cfg.sgd.iterations = s.integer("iterations", cfg.sgd.iterations);
    cfg.sgd.m_per_step = s.integer("m_per_step", cfg.sgd.m_per_step);
    cfg.sgd.sign = s.str("sign", cfg.sgd.sign);
    check_choice(cfg.sgd.sign, {"ascent", "paper"}, "[sgd].sign");
    cfg.sgd.alpha1_values = s.num_list("alpha1_values", cfg.sgd.alpha1_values);
    cfg.sgd.m_values = s.int_list("m_values", cfg.sgd.m_values);
    cfg.sgd.mlsmc_levels = s.int_list("mlsmc_levels", cfg.sgd.mlsmc_levels);
    cfg.sgd.mlsmc_n0 = s.num("mlsmc_n0", cfg.sgd.mlsmc_n0);
    cfg.sgd.mlsmc_decay = s.num("mlsmc_decay", cfg.sgd.mlsmc_decay);
    cfg.sgd.checkpoint_base = s.integer("checkpoint_base", cfg.sgd.checkpoint_base);
    cfg.sgd.checkpoint_growth =
        s.num("checkpoint_growth", cfg.sgd.checkpoint_growth);
    cfg.sgd.reference = s.str("reference", cfg.sgd.reference);
    check_choice(cfg.sgd.reference, {"analytic", "quadrature"},
                 "[sgd].reference");
    cfg.sgd.reference_level = s.integer("reference_level", cfg.sgd.reference_level);
    cfg.sgd.report_theta_star =
        s.flag("report_theta_star", cfg.sgd.report_theta_star);
    s.finish();
  }
  {
    SectionReader s(raw, "oracle");
    cfg.oracle.level = s.integer("level", cfg.oracle.level);
    s.finish();
  }

  if (cfg.replicates < 1) {
    throw std::runtime_error("config [experiment].replicates: must be >= 1");
  }
  if (cfg.threads < 1) {
    throw std::runtime_error("config [experiment].threads: must be >= 1");
  }
  const std::size_t want_dim = (cfg.model.variant == "toy") ? 1 : 2;
  if (cfg.model.u_true.size() != want_dim) {
    throw std::runtime_error("config [model].u_true: expected " +
                             std::to_string(want_dim) + " components");
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ModelSpec ExperimentConfig::build_spec() const {
  ModelSpec spec = (model.variant == "toy")
                       ? make_toy_spec(model.m_obs, model.theta_prior_sigma)
                       : make_general_spec();
  spec.mesh_offset = model.mesh_offset;
  DataParams dp;
  dp.u_true = model.u_true;
  dp.theta_true = model.theta_true;
  dp.truth_mesh_level = model.truth_mesh_level;
  RngStream rng(model.data_seed);
  spec.y = generate_data(spec, dp, rng);
  return spec;
}

RandomizationSchedule ExperimentConfig::build_schedule(int p_max_override) const {
  return RandomizationSchedule::make(
      p_max_override >= 0 ? p_max_override : schedule.p_max, schedule.pl_rate,
      schedule.np_base,
      schedule.pp_rule == "remark" ? RandomizationSchedule::PpRule::Remark
                                   : RandomizationSchedule::PpRule::Section5,
      schedule.l_max);
}

}  // namespace ubgrad
