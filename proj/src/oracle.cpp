#include "ubgrad/oracle.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace ubgrad {

namespace {

/// erf(a) - erf(b) without cancellation for same-sign arguments.
double erf_difference(double a, double b) {
  if (b <= 0.0 && a >= 0.0) return std::erf(a) + std::erf(-b);
  if (b >= 0.0) return std::erfc(b) - std::erfc(a);
  return std::erfc(-a) - std::erfc(-b);
}

struct GlTable {
  std::vector<double> x;
  std::vector<double> w;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
GlTable gl_table(int n) {
  std::unique_ptr<gsl_integration_glfixed_table,
                  decltype(&gsl_integration_glfixed_table_free)>
      t(gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n)),
        &gsl_integration_glfixed_table_free);
  if (!t) throw std::runtime_error("quadrature: node table allocation failed");
  GlTable out;
  out.x.resize(n);
  out.w.resize(n);
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(-1.0, 1.0, static_cast<std::size_t>(i),
                                  &out.x[i], &out.w[i], t.get());
  }
  return out;
}

}  // namespace

ToyClosedForm ToyClosedForm::from_spec(const ModelSpec& spec) {
  if (spec.variant != ModelVariant::Toy) {
    throw std::invalid_argument("ToyClosedForm: spec is not the toy variant");
  }
  ToyClosedForm cf;
  cf.sigma = spec.theta_prior_sigma;
  cf.y = spec.y;
  cf.m_obs = spec.obs_count();
  cf.g.resize(spec.observation_points.size());
  for (std::size_t i = 0; i < cf.g.size(); ++i) {
    const double x = spec.observation_points[i];
    cf.g[i] = 0.5 * (x * x - x);
  }
  for (std::size_t i = 0; i < cf.g.size(); ++i) {
    cf.g_norm_sq += cf.g[i] * cf.g[i];
    cf.g_dot_y += cf.g[i] * cf.y[i];
    cf.y_norm_sq += cf.y[i] * cf.y[i];
  }
  return cf;
}

double toy_log_marginal(double theta, const ToyClosedForm& cf) {
  if (!(theta > 0.0)) throw std::domain_error("toy_log_marginal: theta <= 0");
  const double r = cf.g_dot_y / cf.g_norm_sq;
  const double s = std::sqrt(0.5 * theta * cf.g_norm_sq);
  const double bracket = erf_difference(s * (1.0 - r), s * (-1.0 - r));
  if (!(bracket > 0.0) || !std::isfinite(bracket)) {
    throw std::runtime_error(
        "toy_log_marginal: erf bracket underflowed (theta = " +
        std::to_string(theta) + ")");
  }
  const double lt = std::log(theta);
  const double s2 = cf.sigma * cf.sigma;
  const double misfit_min = cf.y_norm_sq - cf.g_dot_y * cf.g_dot_y / cf.g_norm_sq;
  return 0.5 * (cf.m_obs - 3) * lt - 0.5 * theta * misfit_min -
         0.5 * lt * lt / s2 + std::log(bracket);
}

double toy_grad_log_marginal(double theta, const ToyClosedForm& cf) {
  if (!(theta > 0.0)) {
    throw std::domain_error("toy_grad_log_marginal: theta <= 0");
  }
  const double r = cf.g_dot_y / cf.g_norm_sq;
  const double gn = std::sqrt(cf.g_norm_sq);
  const double s = std::sqrt(0.5 * theta) * gn;
  const double a = s * (1.0 - r);
  const double b = s * (-1.0 - r);
  const double bracket = erf_difference(a, b);
  if (!(bracket > 0.0) || !std::isfinite(bracket)) {
    throw std::runtime_error(
        "toy_grad_log_marginal: erf bracket underflowed (theta = " +
        std::to_string(theta) + ")");
  }
  const double s2 = cf.sigma * cf.sigma;
  const double misfit_min = cf.y_norm_sq - cf.g_dot_y * cf.g_dot_y / cf.g_norm_sq;
  const double scale = gn / (2.0 * std::sqrt(2.0 * theta));
  const double dbracket =
      (2.0 / std::sqrt(std::numbers::pi)) *
      (std::exp(-a * a) * scale * (1.0 - r) -
       std::exp(-b * b) * scale * (-1.0 - r));
  return 0.5 * (cf.m_obs - 3) / theta - 0.5 * misfit_min -
         std::log(theta) / (s2 * theta) + dbracket / bracket;
}

MleResult mle_toy(const ToyClosedForm& cf) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -10.0, hi = 10.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = toy_log_marginal(std::exp(x1), cf);
  double f2 = toy_log_marginal(std::exp(x2), cf);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = toy_log_marginal(std::exp(x2), cf);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = toy_log_marginal(std::exp(x1), cf);
    }
  }
  MleResult res;
  const double xm = 0.5 * (lo + hi);
  res.theta = std::exp(xm);
  res.interior = (xm > -10.0 + 1e-6) && (xm < 10.0 - 1e-6);
  return res;
}

QuadratureResult quadrature_expectation_of(
    const ModelSpec& spec, double theta, int schedule_level, int n_nodes,
    const std::function<void(std::span<const double> u, std::span<double> out)>&
        phi,
    int phi_dim) {
  if (spec.latent_dim > 2) {
    throw std::invalid_argument("quadrature_expectation: requires K <= 2");
  }
  if (n_nodes < 8) {
    throw std::invalid_argument("quadrature_expectation: n_nodes must be >= 8");
  }
  const GlTable t = gl_table(n_nodes);
  const int k = spec.latent_dim;
  const long total = (k == 1) ? n_nodes : static_cast<long>(n_nodes) * n_nodes;

  std::vector<double> u(k), val(phi_dim);

  // Pass 1: max log gamma for stabilization.
  double max_lg = -std::numeric_limits<double>::infinity();
  for (long idx = 0; idx < total; ++idx) {
    u[0] = t.x[idx % n_nodes];
    if (k == 2) u[1] = t.x[idx / n_nodes];
    const double lg = log_gamma(spec, theta, u, schedule_level);
    if (lg > max_lg) max_lg = lg;
  }
  if (!std::isfinite(max_lg)) {
    throw std::runtime_error("quadrature_expectation: gamma not finite");
  }

  // Pass 2: accumulate w gamma and w gamma phi relative to max.
  double z = 0.0;
  std::vector<double> zphi(phi_dim, 0.0);
  for (long idx = 0; idx < total; ++idx) {
    u[0] = t.x[idx % n_nodes];
    double w = t.w[idx % n_nodes];
    if (k == 2) {
      u[1] = t.x[idx / n_nodes];
      w *= t.w[idx / n_nodes];
    }
    const double g = w * std::exp(log_gamma(spec, theta, u, schedule_level) -
                                  max_lg);
    z += g;
    phi(u, val);
    for (int d = 0; d < phi_dim; ++d) zphi[d] += g * val[d];
  }

  QuadratureResult res;
  res.nodes = n_nodes;
  res.log_normalizer = max_lg + std::log(z);
  res.mean.resize(phi_dim);
  for (int d = 0; d < phi_dim; ++d) res.mean[d] = zphi[d] / z;
  return res;
}

QuadratureResult quadrature_expectation(const ModelSpec& spec, double theta,
                                        int schedule_level, int n_nodes) {
  return quadrature_expectation_of(
      spec, theta, schedule_level, n_nodes,
      [&](std::span<const double> u, std::span<double> out) {
        const auto obs =
            forward_observations(spec, u, spec.mesh(schedule_level));
        grad_log_gamma_from_misfit(spec, theta, misfit_sq(spec, obs), out);
      },
      spec.theta_dim());
}

QuadratureResult converged_quadrature_expectation(const ModelSpec& spec,
                                                  double theta,
                                                  int schedule_level) {
  QuadratureResult prev = quadrature_expectation(spec, theta, schedule_level, 16);
  for (int n = 32; n <= 4096; n *= 2) {
    QuadratureResult cur = quadrature_expectation(spec, theta, schedule_level, n);
    double rel = std::abs(cur.log_normalizer - prev.log_normalizer) /
                 std::max(1.0, std::abs(cur.log_normalizer));
    for (int d = 0; d < static_cast<int>(cur.mean.size()); ++d) {
      rel = std::max(rel, std::abs(cur.mean[d] - prev.mean[d]) /
                              std::max(1.0, std::abs(cur.mean[d])));
    }
    if (rel < 1e-10) return cur;
    prev = cur;
  }
  throw std::runtime_error(
      "quadrature_expectation: no convergence by 4096 nodes per dimension");
}

}  // namespace ubgrad
