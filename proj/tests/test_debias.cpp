#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ubgrad/debias.hpp"
#include "ubgrad/model.hpp"
#include "ubgrad/oracle.hpp"
#include "ubgrad/stats.hpp"

using namespace ubgrad;

namespace {

ModelSpec toy_with_data(std::uint64_t seed = 7) {
  ModelSpec spec = make_toy_spec(50);
  DataParams dp{{0.5}, 2.0, 12};
  RngStream rng(seed);
  spec.y = generate_data(spec, dp, rng);
  return spec;
}

}  // namespace

TEST_CASE("level pmf follows the 2^-2.5l law") {
  const auto sched = RandomizationSchedule::make(2);
  CHECK(sched.pl(0) / sched.pl(1) == doctest::Approx(std::exp2(2.5)));
  double total = 0.0;
  for (int l = 0; l < 200; ++l) total += sched.pl(l);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const auto bounded = RandomizationSchedule::make(
      2, 2.5, 8, RandomizationSchedule::PpRule::Section5, 3);
  double btotal = 0.0;
  for (int l = 0; l <= 3; ++l) btotal += bounded.pl(l);
  CHECK(btotal == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bounded.pl(4) == 0.0);
}

TEST_CASE("piecewise p pmf reproduces the published rule") {
  const auto sched = RandomizationSchedule::make(6);
  std::vector<double> w(7);
  for (int p = 0; p < 4; ++p) w[p] = std::pow(2.0, 4 - p);
  for (int p = 4; p < 7; ++p) {
    w[p] = std::pow(2.0, -p) * p * std::pow(std::log2(double(p)), 2);
  }
  double z = 0.0;
  for (double v : w) z += v;
  for (int p = 0; p <= 6; ++p) {
    CHECK(sched.pp[p] == doctest::Approx(w[p] / z).epsilon(1e-13));
    if (p > 0) CHECK(sched.pp[p] < sched.pp[p - 1]);  // monotone decreasing
  }
  CHECK(sched.pp_tail[0] == 1.0);
  CHECK(sched.n_ladder(0) == 8);
  CHECK(sched.n_ladder(3) == 64);
}

TEST_CASE("remark rule is available behind the switch") {
  const auto sched = RandomizationSchedule::make(
      4, 2.5, 8, RandomizationSchedule::PpRule::Remark);
  std::vector<double> w(5);
  double z = 0.0;
  for (int p = 0; p <= 4; ++p) {
    w[p] = std::pow(2.0, -p) * (p + 1) * std::pow(std::log2(p + 2.0), 2);
    z += w[p];
  }
  for (int p = 0; p <= 4; ++p) {
    CHECK(sched.pp[p] == doctest::Approx(w[p] / z).epsilon(1e-13));
  }
}

TEST_CASE("degenerate p schedule always draws zero") {
  const auto sched = RandomizationSchedule::make(0);
  RngStream rng(3);
  for (int i = 0; i < 100; ++i) CHECK(sample_p(sched, rng) == 0);
}

TEST_CASE("sampled levels and depths match their pmfs") {
  const auto sched = RandomizationSchedule::make(4);
  RngStream rng(123);
  const int n = 100000;

  std::vector<std::int64_t> lcounts(16, 0);
  for (int i = 0; i < n; ++i) {
    lcounts[std::min(sample_level(sched, rng), 15)]++;
  }
  std::vector<double> lprobs(16);
  double tail = 1.0;
  for (int l = 0; l < 15; ++l) {
    lprobs[l] = sched.pl(l);
    tail -= lprobs[l];
  }
  lprobs[15] = tail;
  CHECK(chi_square_gof_pvalue(lcounts, lprobs) > 1e-3);

  std::vector<std::int64_t> pcounts(5, 0);
  for (int i = 0; i < n; ++i) pcounts[sample_p(sched, rng)]++;
  CHECK(chi_square_gof_pvalue(pcounts, sched.pp) > 1e-3);
}

TEST_CASE("levels beyond the cap abort loudly") {
  auto sched = RandomizationSchedule::make(0);
  sched.l_cap = 2;  // P(L > 2) is about 0.4%, so 10^4 draws will hit it
  RngStream rng(9);
  CHECK_THROWS_AS(
      [&] {
        for (int i = 0; i < 10000; ++i) sample_level(sched, rng);
      }(),
      std::runtime_error);
}

TEST_CASE("increments telescope to the pooled estimator") {
  const ModelSpec spec = toy_with_data();
  const auto sched = RandomizationSchedule::make(3);
  KernelConfig kernel;
  for (const int l : {0, 2}) {
    CostLedger ledger;
    RngStream rng(77 + l);
    const auto table =
        pooled_increment_run(spec, 2.0, l, 3, sched, kernel, rng, ledger);
    REQUIRE(table.p_count() == 4);
    double acc = 0.0;
    for (int p = 0; p <= 3; ++p) acc += table.xi_at(p)[0];
    CHECK(acc == doctest::Approx(table.pooled_at(3)[0]).epsilon(1e-13));
    CHECK(table.xi_at(0)[0] == table.pooled_at(0)[0]);
  }
}

TEST_CASE("tail weighting makes the truncation unbiased (enumeration)") {
  const auto sched = RandomizationSchedule::make(3);
  const std::vector<double> xi = {0.7, -0.2, 0.05, 0.01};
  double expectation = 0.0;
  for (int big_p = 0; big_p <= 3; ++big_p) {
    IncrementTable t;
    t.level = 1;
    t.d_theta = 1;
    t.xi.assign(xi.begin(), xi.begin() + big_p + 1);
    t.pooled = t.xi;
    expectation += sched.pp[big_p] * coupled_sum(t, sched)[0];
  }
  CHECK(expectation ==
        doctest::Approx(xi[0] + xi[1] + xi[2] + xi[3]).epsilon(1e-13));
}

TEST_CASE("coupled sums at P = 0 reduce to the first increment") {
  const ModelSpec spec = toy_with_data();
  const auto sched = RandomizationSchedule::make(2);
  KernelConfig kernel;
  CostLedger ledger;
  RngStream rng(5);
  const auto table =
      pooled_increment_run(spec, 2.0, 1, 0, sched, kernel, rng, ledger);
  CHECK(coupled_sum(table, sched)[0] == table.xi_at(0)[0]);
}

TEST_CASE("mean of the level-0 coupled sum matches quadrature") {
  const ModelSpec spec = toy_with_data();
  const double theta = 2.0;
  const double truth = converged_quadrature_expectation(spec, theta, 0).mean[0];
  const auto sched = RandomizationSchedule::make(2);
  KernelConfig kernel;
  RngStream rng(404);
  const int runs = 400;
  std::vector<double> vals(runs);
  for (int r = 0; r < runs; ++r) {
    RngStream st = rng.substream(r);
    const int big_p = sample_p(sched, st);
    CostLedger ledger;
    vals[r] = xi_l(spec, theta, 0, big_p, sched, kernel, st, ledger)[0];
  }
  const double se = std::sqrt(variance(vals) / runs);
  CHECK(std::abs(mean(vals) - truth) < 3.0 * se);
}

TEST_CASE("mean of the level-1 coupled sum matches the quadrature increment") {
  const ModelSpec spec = toy_with_data();
  const double theta = 2.0;
  const double truth =
      converged_quadrature_expectation(spec, theta, 1).mean[0] -
      converged_quadrature_expectation(spec, theta, 0).mean[0];
  const auto sched = RandomizationSchedule::make(2);
  KernelConfig kernel;
  RngStream rng(405);
  const int runs = 400;
  std::vector<double> vals(runs);
  for (int r = 0; r < runs; ++r) {
    RngStream st = rng.substream(r);
    const int big_p = sample_p(sched, st);
    CostLedger ledger;
    vals[r] = xi_l(spec, theta, 1, big_p, sched, kernel, st, ledger)[0];
  }
  const double se = std::sqrt(variance(vals) / runs);
  CHECK(std::abs(mean(vals) - truth) < 3.0 * se);
}

TEST_CASE("increment second moments decay in l and p") {
  // The general variant: its observation points are mesh nodes at every
  // level, which keeps the moment constants uniform across l.
  ModelSpec spec = make_general_spec();
  DataParams dp{{0.6, -0.4}, 0.3, 12};
  RngStream drng(7);
  spec.y = generate_data(spec, dp, drng);
  const double theta = 0.3;
  const auto sched = RandomizationSchedule::make(2);
  KernelConfig kernel;
  RngStream rng(606);
  const int runs = 400;

  std::vector<double> xl, xp, ym;
  for (const int l : {1, 2}) {
    std::vector<std::vector<double>> samples(3);
    for (int r = 0; r < runs; ++r) {
      CostLedger ledger;
      RngStream st = rng.substream(l * 1000 + r);
      const auto table =
          pooled_increment_run(spec, theta, l, 2, sched, kernel, st, ledger);
      for (int p = 0; p <= 2; ++p) {
        samples[p].push_back(table.xi_at(p)[0]);
      }
    }
    for (int p = 0; p <= 2; ++p) {
      double m2 = 0.0;
      for (double v : samples[p]) m2 += v * v;
      m2 /= runs;
      xl.push_back(l);
      xp.push_back(p);
      ym.push_back(std::log2(m2));
    }
  }
  const auto [slope_l, slope_p] = linreg_slope2(xl, xp, ym);
  CHECK(slope_l > -5.0);
  CHECK(slope_l < -3.0);
  CHECK(slope_p > -1.5);
  CHECK(slope_p < -0.5);
}

TEST_CASE("single-replicate estimates reproduce their replicate stream") {
  const ModelSpec spec = toy_with_data();
  const auto sched = RandomizationSchedule::make(2);
  KernelConfig kernel;
  RngStream rng(2024);
  const auto est = estimate_gradient(spec, 2.0, 1, sched, kernel, rng);
  REQUIRE(est.replicates == 1);
  REQUIRE(est.draws.size() == 1);

  RngStream st = RngStream(2024).substream(0);
  const int li = sample_level(sched, st);
  const int pi = sample_p(sched, st);
  CHECK(li == est.draws[0].first);
  CHECK(pi == est.draws[0].second);
  CostLedger ledger;
  const auto xi = xi_l(spec, 2.0, li, pi, sched, kernel, st, ledger);
  CHECK(est.value[0] == xi[0] / sched.pl(li));
  CHECK(est.cost_units == ledger.total_units);
}

TEST_CASE("estimates are independent of the worker count") {
  const ModelSpec spec = toy_with_data();
  const auto sched = RandomizationSchedule::make(2);
  KernelConfig kernel;
  RngStream a(31), b(31);
  const auto e1 = estimate_gradient(spec, 2.0, 8, sched, kernel, a, 1);
  const auto e4 = estimate_gradient(spec, 2.0, 8, sched, kernel, b, 4);
  CHECK(e1.value[0] == e4.value[0]);
  CHECK(e1.cost_units == e4.cost_units);
  CHECK(e1.draws == e4.draws);
}

TEST_CASE("doubling the replicate count halves the variance") {
  const ModelSpec spec = toy_with_data();
  const auto sched = RandomizationSchedule::make(2);
  KernelConfig kernel;
  RngStream rng(808);
  const int reps = 400;
  std::vector<double> v1(reps), v2(reps);
  for (int r = 0; r < reps; ++r) {
    RngStream s1 = rng.substream(2 * r);
    RngStream s2 = rng.substream(2 * r + 1);
    v1[r] = estimate_gradient(spec, 2.0, 1, sched, kernel, s1).value[0];
    v2[r] = estimate_gradient(spec, 2.0, 2, sched, kernel, s2).value[0];
  }
  const double ratio = variance(v1) / variance(v2);
  CHECK(ratio > 1.7);
  CHECK(ratio < 2.3);
}

TEST_CASE("ledgers match the closed-form cost rule") {
  const ModelSpec spec = toy_with_data();
  const auto sched = RandomizationSchedule::make(2);
  KernelConfig kernel;
  for (const auto& [l, p] : std::vector<std::pair<int, int>>{
           {0, 0}, {0, 2}, {2, 1}, {3, 2}}) {
    CostLedger ledger;
    RngStream rng(l * 10 + p);
    pooled_increment_run(spec, 2.0, l, p, sched, kernel, rng, ledger);
    CHECK(ledger.total_units == pooled_run_cost(spec, sched, l, p));
  }
}

TEST_CASE("mean single-term cost approaches its analytic expectation") {
  const ModelSpec spec = toy_with_data();
  const auto sched = RandomizationSchedule::make(2);
  KernelConfig kernel;
  const double expected = expected_single_term_cost(spec, sched);
  RngStream rng(909);
  const int reps = 2000;
  double acc = 0.0;
  for (int r = 0; r < reps; ++r) {
    RngStream st = rng.substream(r);
    acc += estimate_gradient(spec, 2.0, 1, sched, kernel, st).cost_units;
  }
  CHECK(std::abs(acc / reps - expected) < 0.1 * expected);
}

TEST_CASE("running variance of single terms stabilizes") {
  const ModelSpec spec = toy_with_data();
  const auto sched = RandomizationSchedule::make(2);
  KernelConfig kernel;
  RngStream rng(111);
  const int n = 30000;
  std::vector<double> vals(n);
  for (int r = 0; r < n; ++r) {
    RngStream st = rng.substream(r);
    vals[r] = estimate_gradient(spec, 2.0, 1, sched, kernel, st).value[0];
    if (!std::isfinite(vals[r])) FAIL("non-finite single-term estimate");
  }
  const double var_half = variance(std::span<const double>(vals.data(), n / 2));
  const double var_full = variance(vals);
  CHECK(std::abs(var_half - var_full) < 0.5 * var_full);
}

TEST_CASE("baseline MLSMC at L = 0 is the level-0 mean") {
  const ModelSpec spec = toy_with_data();
  const double theta = 2.0;
  const double truth = converged_quadrature_expectation(spec, theta, 0).mean[0];
  KernelConfig kernel;
  RngStream rng(313);
  const int runs = 16;
  const std::vector<int> alloc = {4096};
  std::vector<double> est(runs);
  for (int r = 0; r < runs; ++r) {
    RngStream st = rng.substream(r);
    est[r] = mlsmc_baseline_estimate(spec, theta, 0, alloc, kernel, st).value[0];
  }
  const double se = std::sqrt(variance(est) / runs);
  CHECK(std::abs(mean(est) - truth) < 3.0 * se);
}

TEST_CASE("baseline MLSMC validates its allocation") {
  const ModelSpec spec = toy_with_data();
  KernelConfig kernel;
  RngStream rng(1);
  const std::vector<int> alloc = {8};
  CHECK_THROWS_AS(mlsmc_baseline_estimate(spec, 2.0, 2, alloc, kernel, rng),
                  std::invalid_argument);
}
