#include "ubgrad/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ubgrad {

namespace {

void check_theta(double theta) {
  if (!(theta > 0.0)) {
    throw std::domain_error("model: theta must be positive");
  }
}

}  // namespace

CoefficientField ModelSpec::coefficient(std::span<const double> u) const {
  CoefficientField c;
  c.u.assign(u.begin(), u.end());
  c.u_bar = u_bar;
  c.sigma = sigma;
  c.basis = basis;
  return c;
}

ModelSpec make_general_spec() {
  ModelSpec s;
  s.variant = ModelVariant::General;
  s.latent_dim = 2;
  s.observation_points = {0.25, 0.75};
  s.u_bar = 0.15;
  s.sigma = {0.4 / 4.0, 0.4 / 16.0};
  s.basis = {BasisFn::Sine, BasisFn::Cosine};
  s.forcing_slope = 100.0;
  return s;
}

ModelSpec make_toy_spec(int m_obs, double theta_prior_sigma) {
  ModelSpec s;
  s.variant = ModelVariant::Toy;
  s.latent_dim = 1;
  s.observation_points.resize(m_obs);
  for (int i = 1; i <= m_obs; ++i) {
    s.observation_points[i - 1] = static_cast<double>(i) / (m_obs + 1);
  }
  s.theta_prior_sigma = theta_prior_sigma;
  s.u_bar = 1.0;  // toy operator is the plain Laplacian
  s.sigma.clear();
  s.basis.clear();
  return s;
}

std::vector<double> forward_observations(const ModelSpec& spec,
                                         std::span<const double> u,
                                         MeshLevel mesh) {
  if (spec.variant == ModelVariant::Toy) {
    // p'' = u: assemble -(1 p')' = -u.
    const CoefficientField one = CoefficientField::constant(1.0);
    return observe(one, mesh, spec.observation_points,
                   Forcing::constant(-u[0]));
  }
  return observe(spec.coefficient(u), mesh, spec.observation_points,
                 Forcing::linear_ramp(spec.forcing_slope));
}

std::vector<double> generate_data(const ModelSpec& spec, const DataParams& dp,
                                  RngStream& rng) {
  std::vector<double> y = forward_observations(
      spec, dp.u_true, MeshLevel{dp.truth_mesh_level});
  if (std::isinf(dp.theta_true)) return y;
  check_theta(dp.theta_true);
  const double sd = 1.0 / std::sqrt(dp.theta_true);
  for (double& v : y) v += sd * rng.normal();
  return y;
}

double misfit_sq(const ModelSpec& spec, std::span<const double> obs) {
  double s = 0.0;
  for (int m = 0; m < spec.obs_count(); ++m) {
    const double d = obs[m] - spec.y[m];
    s += d * d;
  }
  return s;
}

double log_gamma_from_misfit(const ModelSpec& spec, double theta,
                             double misfit) {
  check_theta(theta);
  const double lt = std::log(theta);
  double v = 0.5 * spec.obs_count() * lt - 0.5 * theta * misfit;
  if (spec.variant == ModelVariant::Toy) {
    const double s2 = spec.theta_prior_sigma * spec.theta_prior_sigma;
    v += -lt - 0.5 * lt * lt / s2;
  }
  return v;
}

void grad_log_gamma_from_misfit(const ModelSpec& spec, double theta,
                                double misfit, std::span<double> out) {
  check_theta(theta);
  double v = 0.5 * spec.obs_count() / theta - 0.5 * misfit;
  if (spec.variant == ModelVariant::Toy) {
    const double s2 = spec.theta_prior_sigma * spec.theta_prior_sigma;
    v += -1.0 / theta - std::log(theta) / (s2 * theta);
  }
  out[0] = v;
}

double log_gamma(const ModelSpec& spec, double theta, std::span<const double> u,
                 int schedule_level) {
  const auto obs = forward_observations(spec, u, spec.mesh(schedule_level));
  return log_gamma_from_misfit(spec, theta, misfit_sq(spec, obs));
}

std::vector<double> grad_log_gamma(const ModelSpec& spec, double theta,
                                   std::span<const double> u,
                                   int schedule_level) {
  const auto obs = forward_observations(spec, u, spec.mesh(schedule_level));
  std::vector<double> out(spec.theta_dim());
  grad_log_gamma_from_misfit(spec, theta, misfit_sq(spec, obs), out);
  return out;
}

double log_level_ratio(const ModelSpec& spec, double theta,
                       std::span<const double> u, int schedule_level) {
  check_theta(theta);
  const auto obs_l = forward_observations(spec, u, spec.mesh(schedule_level));
  const auto obs_n =
      forward_observations(spec, u, spec.mesh(schedule_level + 1));
  return -0.5 * theta * (misfit_sq(spec, obs_n) - misfit_sq(spec, obs_l));
}

double log_prior_density(const ModelSpec& spec, std::span<const double> u) {
  for (int k = 0; k < spec.latent_dim; ++k) {
    if (!(u[k] >= -1.0 && u[k] <= 1.0)) {
      return -std::numeric_limits<double>::infinity();
    }
  }
  return -spec.latent_dim * std::log(2.0);
}

}  // namespace ubgrad
