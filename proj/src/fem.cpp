#include "ubgrad/fem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ubgrad {

double CoefficientField::operator()(double x) const {
  double v = u_bar;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double arg = (static_cast<double>(k) + 1.0) * std::numbers::pi * x;
    const double phi = (basis[k] == BasisFn::Sine) ? std::sin(arg) : std::cos(arg);
    v += u[k] * sigma[k] * phi;
  }
  return v;
}

CoefficientField CoefficientField::constant(double value) {
  CoefficientField c;
  c.u_bar = value;
  return c;
}

double ForwardSolution::at(double x) const {
  const int n = level.interior_nodes();
  const double h = level.width();
  double t = x / h;
  int e = static_cast<int>(std::floor(t));
  if (e < 0) e = 0;
  if (e > n) e = n;  // last element
  const double frac = t - e;
  const double left = (e == 0) ? 0.0 : nodal[e - 1];
  const double right = (e >= n) ? 0.0 : nodal[e];
  return left + (right - left) * frac;
}

TridiagonalSystem assemble(const CoefficientField& coef, MeshLevel level,
                           const Forcing& f) {
  const int n = level.interior_nodes();
  if (n < 1) throw std::invalid_argument("assemble: mesh level must be >= 1");
  const double h = level.width();

  // Per-element coefficient integrals I_e = int_{e h}^{(e+1) h} u_hat dx.
  const double half = 0.5 * h;
  const double off = half / std::sqrt(3.0);
  std::vector<double> elem(n + 1);
  for (int e = 0; e <= n; ++e) {
    const double mid = (e + 0.5) * h;
    const double a = coef(mid - off);
    const double b = coef(mid + off);
    if (a <= 0.0 || b <= 0.0) {
      throw std::domain_error(
          "assemble: coefficient not positive on the quadrature grid");
    }
    elem[e] = half * (a + b);
  }

  TridiagonalSystem sys;
  sys.diag.resize(n);
  sys.rhs.resize(n);
  sys.sub.resize(n - 1);
  sys.super.resize(n - 1);

  const double inv_h2 = 1.0 / (h * h);
  for (int i = 0; i < n; ++i) sys.diag[i] = (elem[i] + elem[i + 1]) * inv_h2;
  for (int i = 0; i + 1 < n; ++i) {
    sys.super[i] = -elem[i + 1] * inv_h2;
    sys.sub[i] = sys.super[i];
  }

  // Load vector, exact: int f psi_i = f(x_i) h for linear f, c h for constant.
  for (int i = 0; i < n; ++i) {
    const double xi = (i + 1) * h;
    sys.rhs[i] = (f.kind == Forcing::Kind::LinearRamp) ? f.value * xi * h
                                                       : f.value * h;
  }
  return sys;
}

std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys) {
  const int n = sys.size();
  std::vector<double> c(n), x(n);
  double pivot = sys.diag[0];
  if (pivot == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
  c[0] = (n > 1) ? sys.super[0] / pivot : 0.0;
  x[0] = sys.rhs[0] / pivot;
  for (int i = 1; i < n; ++i) {
    pivot = sys.diag[i] - sys.sub[i - 1] * c[i - 1];
    if (pivot == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
    if (i + 1 < n) c[i] = sys.super[i] / pivot;
    x[i] = (sys.rhs[i] - sys.sub[i - 1] * x[i - 1]) / pivot;
  }
  for (int i = n - 2; i >= 0; --i) x[i] -= c[i] * x[i + 1];
  return x;
}

ForwardSolution solve(const CoefficientField& coef, MeshLevel level,
                      const Forcing& f) {
  return ForwardSolution{level, solve_tridiagonal(assemble(coef, level, f))};
}

std::vector<double> observe(const CoefficientField& coef, MeshLevel level,
                            std::span<const double> points, const Forcing& f) {
  for (double x : points) {
    if (!(x > 0.0 && x < 1.0)) {
      throw std::domain_error("observe: point outside (0,1)");
    }
  }
  const ForwardSolution sol = solve(coef, level, f);
  std::vector<double> out(points.size());
  for (std::size_t m = 0; m < points.size(); ++m) out[m] = sol.at(points[m]);
  return out;
}

}  // namespace ubgrad
