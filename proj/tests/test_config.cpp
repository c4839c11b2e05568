#include <doctest.h>

#include <stdexcept>
#include <string>

#include "ubgrad/config.hpp"

using namespace ubgrad;

TEST_CASE("an empty config yields the documented defaults") {
  const auto cfg = parse_config("");
  CHECK(cfg.model.variant == "toy");
  CHECK(cfg.model.m_obs == 50);
  CHECK(cfg.model.theta == 2.0);
  CHECK(cfg.schedule.pl_rate == 2.5);
  CHECK(cfg.schedule.p_max == 2);
  CHECK(cfg.schedule.np_base == 8);
  CHECK(cfg.kernel.proposal_std == 0.2);
  CHECK(cfg.kernel.n_mcmc_steps == 5);
  CHECK(cfg.kind == "estimate");
  CHECK(cfg.replicates == 1);
}

TEST_CASE("values land in their sections") {
  const std::string text = R"(
# a comment
[model]
variant = general
theta = 0.3
u_true = 0.6, -0.4
theta_true = 0.3

[schedule]
p_max = 1
np_base = 4

[experiment]
kind = single-estimator-mse
replicates = 5
master_seed = 99
threads = 2

[mse]
m_values = 4, 16
reference = quadrature
reference_level = 6
)";
  const auto cfg = parse_config(text);
  CHECK(cfg.model.variant == "general");
  CHECK(cfg.model.theta == 0.3);
  CHECK(cfg.model.u_true == std::vector<double>{0.6, -0.4});
  CHECK(cfg.schedule.p_max == 1);
  CHECK(cfg.schedule.np_base == 4);
  CHECK(cfg.kind == "single-estimator-mse");
  CHECK(cfg.replicates == 5);
  CHECK(cfg.master_seed == 99);
  CHECK(cfg.threads == 2);
  CHECK(cfg.mse.m_values == std::vector<int>{4, 16});
  CHECK(cfg.mse.reference == "quadrature");
  CHECK(cfg.mse.reference_level == 6);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_WITH_AS(parse_config("[model]\nbogus = 1\n"),
                       doctest::Contains("[model].bogus"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config("[nosuch]\nx = 1\n"),
                       doctest::Contains("[nosuch]"), std::runtime_error);
}

TEST_CASE("malformed lines and duplicates are rejected") {
  CHECK_THROWS_AS(parse_config("[model\nvariant = toy\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config("variant = toy\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config("[model]\ntheta = 1\ntheta = 2\n"),
                  std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config("[model]\ntheta = abc\n"),
                       doctest::Contains("[model].theta"), std::runtime_error);
  CHECK_THROWS_AS(parse_config("[experiment]\nkind = nonsense\n"),
                  std::runtime_error);
}

TEST_CASE("latent dimension of u_true is validated per variant") {
  CHECK_THROWS_AS(parse_config("[model]\nvariant = toy\nu_true = 0.1, 0.2\n"),
                  std::runtime_error);
  CHECK_THROWS_AS(parse_config("[model]\nvariant = general\nu_true = 0.1\n"),
                  std::runtime_error);
}

TEST_CASE("infinite true precision means noise-free data") {
  const auto cfg = parse_config("[model]\ntheta_true = inf\n");
  CHECK(std::isinf(cfg.model.theta_true));
  const auto spec = cfg.build_spec();
  const auto spec2 = cfg.build_spec();
  CHECK(spec.y == spec2.y);
}

TEST_CASE("spec building is deterministic in the data seed") {
  const auto a = parse_config("[model]\ndata_seed = 5\n").build_spec();
  const auto b = parse_config("[model]\ndata_seed = 5\n").build_spec();
  const auto c = parse_config("[model]\ndata_seed = 6\n").build_spec();
  CHECK(a.y == b.y);
  CHECK(a.y != c.y);
}

TEST_CASE("schedule building honors the p_max override") {
  const auto cfg = parse_config("[schedule]\np_max = 3\n");
  CHECK(cfg.build_schedule().p_max == 3);
  CHECK(cfg.build_schedule(1).p_max == 1);
  CHECK(cfg.build_schedule().np_base == 8);
}

TEST_CASE("config hashes separate different texts") {
  CHECK(config_hash("a") != config_hash("b"));
  CHECK(config_hash("same") == config_hash("same"));
}
