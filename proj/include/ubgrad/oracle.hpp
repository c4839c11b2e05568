#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ubgrad/model.hpp"

namespace ubgrad {

/// Closed-form ingredients of the toy marginal likelihood: the observation
/// map is linear, G(u) = g u with g_i = (x_i^2 - x_i)/2.
struct ToyClosedForm {
  std::vector<double> g;
  std::vector<double> y;
  double sigma = 1.0;

  double g_norm_sq = 0.0;
  double g_dot_y = 0.0;
  double y_norm_sq = 0.0;
  int m_obs = 0;

  static ToyClosedForm from_spec(const ModelSpec& spec);
};

/// log of the marginal density of theta, up to an additive constant
/// independent of theta (the sqrt(pi/2)/||g|| factor is dropped).
double toy_log_marginal(double theta, const ToyClosedForm& cf);

/// d/dtheta of toy_log_marginal; exact closed form including the erf-bracket
/// derivative.
double toy_grad_log_marginal(double theta, const ToyClosedForm& cf);

struct MleResult {
  double theta = 0.0;
  bool interior = true;  // false if the maximizer hit the search boundary
};

/// Maximizer of toy_log_marginal by golden-section search on log(theta) over
/// [-10, 10], tolerance 1e-10.
MleResult mle_toy(const ToyClosedForm& cf);

struct QuadratureResult {
  double log_normalizer = 0.0;  // log Z_theta^l = log int gamma_theta^l du
  std::vector<double> mean;     // eta_theta^l(phi_theta^l)
  int nodes = 0;                // per-dimension Gauss-Legendre node count
};

/// Tensor Gauss-Legendre over [-1,1]^K of gamma_theta^l and
/// gamma_theta^l * phi, for a caller-supplied phi. Requires K <= 2 and
/// n_nodes >= 8.
QuadratureResult quadrature_expectation_of(
    const ModelSpec& spec, double theta, int schedule_level, int n_nodes,
    const std::function<void(std::span<const double> u, std::span<double> out)>&
        phi,
    int phi_dim);

/// Tensor quadrature of the gradient integrand phi_theta^l itself.
QuadratureResult quadrature_expectation(const ModelSpec& spec, double theta,
                                        int schedule_level, int n_nodes);

/// Doubles the node count from 16 until log_normalizer and mean are stable to
/// 1e-10 relative, up to 4096 nodes per dimension; throws std::runtime_error
/// if convergence is not reached.
QuadratureResult converged_quadrature_expectation(const ModelSpec& spec,
                                                  double theta,
                                                  int schedule_level);

}  // namespace ubgrad
