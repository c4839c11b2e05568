#pragma once

#include <span>
#include <vector>

#include "ubgrad/fem.hpp"
#include "ubgrad/rng.hpp"

namespace ubgrad {

enum class ModelVariant { General, Toy };

/// Inverse-problem instance. The general variant is the elliptic problem
/// -(u_hat p')' = f with a K-term random diffusion coefficient; the toy
/// variant is p'' = u with scalar u and a log-normal prior on the noise
/// precision theta folded into the unnormalized density.
struct ModelSpec {
  ModelVariant variant = ModelVariant::General;
  int latent_dim = 2;  // K
  std::vector<double> observation_points;
  std::vector<double> y;
  double theta_prior_sigma = 1.0;  // toy only: std of log(theta)

  // Forward configuration (general variant).
  double u_bar = 0.15;
  std::vector<double> sigma;
  std::vector<BasisFn> basis;
  double forcing_slope = 100.0;  // f(x) = slope * x

  // Discretization-level indexing: schedule level 0 maps to mesh level
  // mesh_offset, schedule level s to mesh_offset + s.
  int mesh_offset = 2;

  int obs_count() const { return static_cast<int>(y.size()); }
  int theta_dim() const { return 1; }
  MeshLevel mesh(int schedule_level) const {
    return MeshLevel{schedule_level + mesh_offset};
  }
  CoefficientField coefficient(std::span<const double> u) const;
};

/// Paper configuration of the general example: K=2, u_bar=0.15,
/// sigma_k=(2/5)4^-k, sine/cosine basis, f(x)=100x, observations at
/// {0.25, 0.75}. y is left empty.
ModelSpec make_general_spec();

/// Toy configuration: K=1, m_obs observation points x_i=i/(m_obs+1). y is
/// left empty.
ModelSpec make_toy_spec(int m_obs, double theta_prior_sigma = 1.0);

/// Forward observation operator G at an explicit mesh level: one tridiagonal
/// solve plus piecewise-linear interpolation at the observation points.
std::vector<double> forward_observations(const ModelSpec& spec,
                                         std::span<const double> u,
                                         MeshLevel mesh);

struct DataParams {
  std::vector<double> u_true;
  double theta_true = 1.0;  // +infinity means noise-free data
  int truth_mesh_level = 12;
};

/// y = G^{truth}(u_true) + N(0, theta_true^{-1} I), reproducible from the
/// stream.
std::vector<double> generate_data(const ModelSpec& spec, const DataParams& dp,
                                  RngStream& rng);

double misfit_sq(const ModelSpec& spec, std::span<const double> obs);

// Density evaluations from a cached misfit ||G^l(u) - y||^2. These carry the
// full theta dependence; the latent u enters only through the misfit.
double log_gamma_from_misfit(const ModelSpec& spec, double theta,
                             double misfit);
void grad_log_gamma_from_misfit(const ModelSpec& spec, double theta,
                                double misfit, std::span<double> out);

/// log gamma_theta^l(u) for schedule level l.
double log_gamma(const ModelSpec& spec, double theta, std::span<const double> u,
                 int schedule_level);

/// phi_theta^l(u) = d/dtheta log gamma_theta^l(u), as a theta_dim vector.
std::vector<double> grad_log_gamma(const ModelSpec& spec, double theta,
                                   std::span<const double> u,
                                   int schedule_level);

/// log G_theta^l(u) = log gamma^{l+1} - log gamma^l; the theta-prior factor
/// of the toy variant cancels exactly.
double log_level_ratio(const ModelSpec& spec, double theta,
                       std::span<const double> u, int schedule_level);

/// Normalized log prior of u: -K log 2 on the box [-1,1]^K, -inf outside.
double log_prior_density(const ModelSpec& spec, std::span<const double> u);

}  // namespace ubgrad
