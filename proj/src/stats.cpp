#include "ubgrad/stats.hpp"

#include <gsl/gsl_sf_gamma.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ubgrad {

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / (static_cast<double>(v.size()) - 1.0);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double linreg_slope(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

std::pair<double, double> linreg_slope2(std::span<const double> x1,
                                        std::span<const double> x2,
                                        std::span<const double> y) {
  const double m1 = mean(x1), m2 = mean(x2), my = mean(y);
  double s11 = 0, s22 = 0, s12 = 0, s1y = 0, s2y = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = x1[i] - m1, b = x2[i] - m2, c = y[i] - my;
    s11 += a * a;
    s22 += b * b;
    s12 += a * b;
    s1y += a * c;
    s2y += b * c;
  }
  const double det = s11 * s22 - s12 * s12;
  if (det == 0.0) throw std::runtime_error("linreg_slope2: singular design");
  return {(s22 * s1y - s12 * s2y) / det, (s11 * s2y - s12 * s1y) / det};
}

double chi_square_pvalue(double stat, int dof) {
  if (stat <= 0.0) return 1.0;
  return gsl_sf_gamma_inc_Q(0.5 * dof, 0.5 * stat);
}

double chi_square_gof_pvalue(std::span<const std::int64_t> counts,
                             std::span<const double> probs) {
  const double n = static_cast<double>(
      std::accumulate(counts.begin(), counts.end(), std::int64_t{0}));
  std::vector<double> obs, expd;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * probs[i];
    if (!expd.empty() && e < 5.0) {
      expd.back() += e;
      obs.back() += static_cast<double>(counts[i]);
    } else {
      expd.push_back(e);
      obs.push_back(static_cast<double>(counts[i]));
    }
  }
  if (expd.size() < 2) throw std::runtime_error("chi_square_gof: too few bins");
  double stat = 0.0;
  for (std::size_t i = 0; i < expd.size(); ++i) {
    const double d = obs[i] - expd[i];
    stat += d * d / expd[i];
  }
  return chi_square_pvalue(stat, static_cast<int>(expd.size()) - 1);
}

}  // namespace ubgrad
