#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <limits>
#include <vector>

#include "ubgrad/model.hpp"
#include "ubgrad/rng.hpp"
#include "ubgrad/stats.hpp"

using namespace ubgrad;

namespace {

ModelSpec toy_with_data(std::uint64_t seed = 7, double theta_true = 2.0) {
  ModelSpec spec = make_toy_spec(50);
  DataParams dp{{0.5}, theta_true, 12};
  RngStream rng(seed);
  spec.y = generate_data(spec, dp, rng);
  return spec;
}

ModelSpec general_with_data(std::uint64_t seed = 7) {
  ModelSpec spec = make_general_spec();
  DataParams dp{{0.6, -0.4}, 0.3, 12};
  RngStream rng(seed);
  spec.y = generate_data(spec, dp, rng);
  return spec;
}

}  // namespace

TEST_CASE("toy observation grid is i/(M+1)") {
  const ModelSpec spec = make_toy_spec(50);
  REQUIRE(spec.observation_points.size() == 50);
  for (int i = 1; i <= 50; ++i) {
    CHECK(spec.observation_points[i - 1] == doctest::Approx(i / 51.0));
  }
}

TEST_CASE("zero residual leaves only the theta terms") {
  ModelSpec spec = general_with_data();
  const std::vector<double> u = {0.2, 0.1};
  spec.y = forward_observations(spec, u, spec.mesh(3));
  const double theta = 0.7;
  CHECK(log_gamma(spec, theta, u, 3) ==
        doctest::Approx(0.5 * spec.obs_count() * std::log(theta))
            .epsilon(1e-12));

  ModelSpec toy = toy_with_data();
  const std::vector<double> ut = {0.25};
  toy.y = forward_observations(toy, ut, toy.mesh(2));
  CHECK(log_gamma(toy, 1.0, ut, 2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("log density matches a direct recomputation") {
  const ModelSpec spec = general_with_data();
  const std::vector<double> u = {0.5, -0.3};
  const double theta = 0.3;
  const auto obs = forward_observations(spec, u, spec.mesh(1));
  double mis = 0.0;
  for (int m = 0; m < spec.obs_count(); ++m) {
    mis += (obs[m] - spec.y[m]) * (obs[m] - spec.y[m]);
  }
  const double expected = 0.5 * 2 * std::log(theta) - 0.5 * theta * mis;
  CHECK(log_gamma(spec, theta, u, 1) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("theta must be positive") {
  const ModelSpec spec = toy_with_data();
  const std::vector<double> u = {0.1};
  CHECK_THROWS_AS(log_gamma(spec, 0.0, u, 0), std::domain_error);
  CHECK_THROWS_AS(grad_log_gamma(spec, -1.0, u, 0), std::domain_error);
}

TEST_CASE("gradient matches central finite differences") {
  RngStream rng(123);
  for (const bool toy : {true, false}) {
    ModelSpec spec = toy ? toy_with_data() : general_with_data();
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<double> u(spec.latent_dim);
      for (auto& v : u) v = rng.uniform(-1.0, 1.0);
      const double theta = std::exp(rng.uniform(-1.5, 1.5));
      const int level = rep % 3;
      const double eps = 1e-5;
      const double fd = (log_gamma(spec, theta + eps, u, level) -
                         log_gamma(spec, theta - eps, u, level)) /
                        (2.0 * eps);
      const double an = grad_log_gamma(spec, theta, u, level)[0];
      CHECK(an == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("toy zero-residual gradient at theta = 1 is (M-2)/2") {
  ModelSpec toy = toy_with_data();
  const std::vector<double> u = {-0.35};
  toy.y = forward_observations(toy, u, toy.mesh(1));
  const auto g = grad_log_gamma(toy, 1.0, u, 1);
  CHECK(g[0] == doctest::Approx(0.5 * (toy.obs_count() - 2)).epsilon(1e-12));
}

TEST_CASE("toy gradient equals the general-form gradient plus the prior term") {
  const ModelSpec toy = toy_with_data();
  const double theta = 1.7, misfit = 23.0;
  std::vector<double> g(1);
  grad_log_gamma_from_misfit(toy, theta, misfit, g);
  const double general_part = 0.5 * toy.obs_count() / theta - 0.5 * misfit;
  const double s2 = toy.theta_prior_sigma * toy.theta_prior_sigma;
  CHECK(g[0] == doctest::Approx(general_part - 1.0 / theta -
                                std::log(theta) / (s2 * theta))
                    .epsilon(1e-13));
}

TEST_CASE("level ratio telescopes log gamma") {
  const ModelSpec spec = general_with_data();
  const std::vector<double> u = {0.4, 0.9};
  const double theta = 0.3;
  for (int l = 0; l <= 3; ++l) {
    CHECK(log_gamma(spec, theta, u, l) + log_level_ratio(spec, theta, u, l) ==
          doctest::Approx(log_gamma(spec, theta, u, l + 1)).epsilon(1e-12));
  }
}

TEST_CASE("level ratio tends to one at the beta rate") {
  const ModelSpec spec = general_with_data();
  const std::vector<double> u = {0.8, -0.6};
  const double theta = 0.3;
  std::vector<double> ls, logs;
  for (int l = 1; l <= 7; ++l) {
    const double dev = std::abs(std::expm1(log_level_ratio(spec, theta, u, l)));
    ls.push_back(l);
    logs.push_back(std::log2(dev));
  }
  const double slope = linreg_slope(ls, logs);
  CHECK(slope > -2.5);
  CHECK(slope < -1.5);
}

TEST_CASE("potentials stay bounded on the box") {
  const ModelSpec spec = general_with_data();
  const double theta = 0.3;
  std::vector<double> u(2);
  double prev_spread = 1e100;
  for (int l = 1; l <= 4; ++l) {
    double lo = 1e100, hi = -1e100;
    for (int i = 0; i <= 12; ++i) {
      for (int j = 0; j <= 12; ++j) {
        u[0] = -1.0 + i / 6.0;
        u[1] = -1.0 + j / 6.0;
        const double g = std::exp(log_level_ratio(spec, theta, u, l));
        lo = std::min(lo, g);
        hi = std::max(hi, g);
      }
    }
    CHECK(lo > 0.5);
    CHECK(hi < 2.5);
    const double spread = hi - lo;
    CHECK(spread < prev_spread);
    prev_spread = spread;
  }
}

TEST_CASE("data generation is reproducible and noise-free in the limit") {
  const ModelSpec spec = make_toy_spec(50);
  DataParams dp{{0.5}, 2.0, 12};
  RngStream a(99), b(99);
  CHECK(generate_data(spec, dp, a) == generate_data(spec, dp, b));

  DataParams exact{{0.5}, std::numeric_limits<double>::infinity(), 12};
  RngStream c(1);
  const auto y = generate_data(spec, exact, c);
  const auto g = forward_observations(spec, exact.u_true, MeshLevel{12});
  CHECK(y == g);
}

TEST_CASE("prior density is the normalized box indicator") {
  const ModelSpec spec = general_with_data();
  const std::vector<double> in = {0.3, -0.99};
  CHECK(log_prior_density(spec, in) == doctest::Approx(-2.0 * std::log(2.0)));
  const std::vector<double> out = {1.2, 0.0};
  CHECK(log_prior_density(spec, out) ==
        -std::numeric_limits<double>::infinity());

  // Midpoint-rule normalization check over the box.
  const int n = 64;
  double acc = 0.0;
  std::vector<double> u(2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      u[0] = -1.0 + (i + 0.5) * 2.0 / n;
      u[1] = -1.0 + (j + 0.5) * 2.0 / n;
      acc += std::exp(log_prior_density(spec, u)) * (2.0 / n) * (2.0 / n);
    }
  }
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-12));
}
