#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace ubgrad {

/// Dyadic uniform mesh on [0,1]: width h = 2^-l, interior nodes x_i = i*h for
/// i = 1..2^l-1, homogeneous Dirichlet boundary.
struct MeshLevel {
  int l = 0;

  double width() const { return std::ldexp(1.0, -l); }
  int interior_nodes() const { return (1 << l) - 1; }
  double node(int i) const { return i * width(); }
};

enum class BasisFn { Sine, Cosine };

/// Diffusion coefficient u_hat(x) = u_bar + sum_k u_k sigma_k phi_k(x), with
/// phi_k(x) = sin(k pi x) for odd k and cos(k pi x) for even k (1-based k).
/// Coordinates u_k live in [-1,1]; u_bar > sum_k sigma_k keeps u_hat positive.
struct CoefficientField {
  std::vector<double> u;
  double u_bar = 0.0;
  std::vector<double> sigma;
  std::vector<BasisFn> basis;

  double operator()(double x) const;

  static CoefficientField constant(double value);
};

/// Right-hand side of -(u_hat p')' = f.
struct Forcing {
  enum class Kind { LinearRamp, Constant };
  Kind kind = Kind::Constant;
  double value = 0.0;  // slope for LinearRamp (f = value * x), else constant

  static Forcing linear_ramp(double slope) { return {Kind::LinearRamp, slope}; }
  static Forcing constant(double c) { return {Kind::Constant, c}; }
};

/// Symmetric tridiagonal stiffness system A p = rhs on the interior nodes.
struct TridiagonalSystem {
  std::vector<double> sub;    // length n-1
  std::vector<double> diag;   // length n
  std::vector<double> super;  // length n-1
  std::vector<double> rhs;    // length n

  int size() const { return static_cast<int>(diag.size()); }
};

/// Piecewise-linear solution: nodal interior values, zero at both ends.
struct ForwardSolution {
  MeshLevel level;
  std::vector<double> nodal;

  double at(double x) const;
};

/// Galerkin assembly with hat functions. Stiffness entries use per-element
/// 2-point Gauss-Legendre for the coefficient integrals; the load vector is
/// exact in closed form for both forcing kinds. Throws std::domain_error if
/// the coefficient is non-positive at any quadrature point.
TridiagonalSystem assemble(const CoefficientField& coef, MeshLevel level,
                           const Forcing& f);

/// Thomas algorithm. Throws std::runtime_error on a zero pivot.
std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys);

ForwardSolution solve(const CoefficientField& coef, MeshLevel level,
                      const Forcing& f);

/// p^l evaluated at observation points (one solve per call). Points must lie
/// strictly inside (0,1).
std::vector<double> observe(const CoefficientField& coef, MeshLevel level,
                            std::span<const double> points, const Forcing& f);

}  // namespace ubgrad
