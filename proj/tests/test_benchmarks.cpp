#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "jumpctrl/benchmarks.hpp"
#include "jumpctrl/forward.hpp"
#include "jumpctrl/stats.hpp"

using namespace jumpctrl;

namespace {

MeanSe mc_cost(const BenchmarkInstance& bench, const FeedbackControl& rule,
               std::uint64_t seed, std::size_t n_paths, std::size_t steps) {
  std::vector<double> totals(n_paths);
  for (std::size_t path = 0; path < n_paths; ++path) {
    const NoisePath noise = sample_noise({seed, path}, bench.problem.marks,
                                         bench.problem.horizon, steps);
    const FeedbackSolve fs = solve_with_feedback(bench.problem, rule, noise);
    totals[path] = cost(bench.problem, fs.state, fs.control, noise.grid).total;
  }
  return mean_se(totals);
}

}  // namespace

TEST_CASE("registry lists five instances and rejects unknown names") {
  const auto names = benchmark_names();
  REQUIRE(names.size() == 5);
  for (const auto& name : names) CHECK_NOTHROW(make_benchmark(name));
  CHECK_THROWS_AS(make_benchmark("nope"), std::invalid_argument);
}

TEST_CASE("constant-gain cost formula and its minimizer") {
  const LqParams p;
  const double gain = lq_best_gain(p);
  const double at_best = lq_closed_form_cost(p, gain);
  CHECK(gain == doctest::Approx(0.58341136).epsilon(1e-5));
  CHECK(at_best == doctest::Approx(0.13915977).epsilon(1e-6));
  // Interior minimum.
  CHECK(at_best < lq_closed_form_cost(p, gain + 0.05));
  CHECK(at_best < lq_closed_form_cost(p, gain - 0.05));
  // Detuned gain costs strictly more.
  CHECK(lq_closed_form_cost(p, 1.25 * gain) > at_best * 1.01);
}

TEST_CASE("cost formula is continuous through a vanishing exponent") {
  LqParams p;
  // 2a + c^2 + rate gamma^2 = 0 at kappa = 0 makes the exponent vanish.
  p.a = -0.5 * (p.c * p.c + p.total_rate * p.gamma * p.gamma);
  const double j0 = lq_closed_form_cost(p, 0.0);
  CHECK(j0 == doctest::Approx((p.qf * p.horizon + p.gT) * p.x0 * p.x0)
                  .epsilon(1e-9));
}

TEST_CASE("closed-form cost matches simulation for the affine instance") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const LqParams p;
  const double gain = lq_best_gain(p);
  const MeanSe mc = mc_cost(bench, bench.reference, 4242, 4000, 128);
  const double truth = lq_closed_form_cost(p, gain);
  // 3 SE plus a first-order-in-dt allowance.
  CHECK(std::abs(mc.mean - truth) <= 3.0 * mc.se + 0.5 / 128.0);
}

TEST_CASE("zero-rate limit reduces to the diffusion-only formula") {
  LqParams p;
  p.total_rate = 0.0;
  const BenchmarkInstance bench = lq_jump(p);
  CHECK(bench.problem.marks.size() == 0);
  const MeanSe mc = mc_cost(bench, bench.reference, 515, 4000, 128);
  const double truth = lq_closed_form_cost(p, lq_best_gain(p));
  CHECK(std::abs(mc.mean - truth) <= 3.0 * mc.se + 0.5 / 128.0);
}

TEST_CASE("threshold rule beats shifted thresholds under common noise") {
  const BenchmarkInstance bench = make_benchmark("bangbang");
  const MeanSe at0 = mc_cost(bench, bench.reference, 606, 3000, 64);
  FeedbackControl up, down;
  up.rule = [](double, double x) { return x > 0.2 ? -1.0 : 1.0; };
  down.rule = [](double, double x) { return x > -0.2 ? -1.0 : 1.0; };
  const MeanSe ju = mc_cost(bench, up, 606, 3000, 64);
  const MeanSe jd = mc_cost(bench, down, 606, 3000, 64);
  CHECK(at0.mean < ju.mean + 3.0 * (at0.se + ju.se));
  CHECK(at0.mean < jd.mean + 3.0 * (at0.se + jd.se));
}

TEST_CASE("state-independent instance has a computable mean cost") {
  const BenchmarkInstance bench = make_benchmark("deterministic_adjoint");
  // X is x0 plus centered noise, costs are linear: E J = f T E x0 + g E x0.
  const MeanSe mc = mc_cost(bench, bench.reference, 313, 3000, 64);
  CHECK(std::abs(mc.mean - 0.85) <= 3.0 * mc.se + 1e-3);
}

TEST_CASE("frozen reference costs reproduce under the stated schedule") {
  for (const std::string& name : benchmark_names()) {
    const BenchmarkInstance bench = make_benchmark(name);
    REQUIRE(bench.reference_cost_se > 0.0);
    // Sub-ensemble of the frozen run: same seed, fewer paths.
    const MeanSe mc =
        mc_cost(bench, bench.reference, bench.reference_seed, 2500,
                bench.reference_steps);
    INFO(name);
    CHECK(std::abs(mc.mean - bench.reference_cost) <= 4.0 * mc.se);
  }
}

TEST_CASE("parameter preconditions are enforced") {
  LqParams p;
  p.r = 0.0;
  CHECK_THROWS_AS(lq_jump(p), std::invalid_argument);
  LqParams q;
  q.horizon = 0.0;
  CHECK_THROWS_AS(lq_jump(q), std::invalid_argument);
}
