#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "jumpctrl/benchmarks.hpp"
#include "jumpctrl/forward.hpp"
#include "jumpctrl/variation.hpp"

using namespace jumpctrl;

namespace {

ProblemDef minimal_problem() {
  ProblemDef pr;
  pr.name = "minimal";
  pr.horizon = 1.0;
  pr.x0 = 0.7;
  pr.marks = MarkSpace::uniform(2, 3.0);
  pr.controls = {-1.0, 1.0, {}};
  auto zero3 = [](double, double, double) { return 0.0; };
  auto zero4 = [](double, double, double, std::size_t) { return 0.0; };
  pr.drift = pr.drift_x = pr.drift_xx = zero3;
  pr.diffusion = pr.diffusion_x = pr.diffusion_xx = zero3;
  pr.jump = pr.jump_x = pr.jump_xx = zero4;
  pr.running_cost = pr.running_cost_x = pr.running_cost_xx = zero3;
  pr.terminal_cost = pr.terminal_cost_x = pr.terminal_cost_xx =
      [](double) { return 0.0; };
  return pr;
}

ControlPath zero_control(const TimeGrid& grid) {
  ControlPath u;
  u.values.assign(grid.n_points(), 0.0);
  return u;
}

}  // namespace

TEST_CASE("zero coefficients freeze the state") {
  const ProblemDef pr = minimal_problem();
  const NoisePath noise = sample_noise({1, 5}, pr.marks, pr.horizon, 32);
  const StatePath x = solve_forward(pr, zero_control(noise.grid), noise);
  for (double v : x.values) CHECK(v == 0.7);
  for (double v : x.left) CHECK(v == 0.7);
}

TEST_CASE("unit jump coefficient produces the compensated counting path") {
  ProblemDef pr = minimal_problem();
  pr.jump = [](double, double, double, std::size_t) { return 1.0; };
  const NoisePath noise = sample_noise({17, 3}, pr.marks, pr.horizon, 32);
  const StatePath x = solve_forward(pr, zero_control(noise.grid), noise);
  std::size_t n_t = 0;
  for (std::size_t i = 0; i < noise.grid.n_points(); ++i) {
    if (noise.grid.jump_mark[i] >= 0) {
      ++n_t;
      CHECK(x.values[i] - x.left[i] == doctest::Approx(1.0).epsilon(1e-13));
    }
    const double want =
        0.7 + static_cast<double>(n_t) - 3.0 * noise.grid.times[i];
    CHECK(x.values[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("deterministic drift converges at first order") {
  ProblemDef pr = minimal_problem();
  pr.marks = MarkSpace{};
  pr.drift = [](double, double x, double) { return x; };
  pr.drift_x = [](double, double, double) { return 1.0; };
  const double truth = 0.7 * std::exp(1.0);
  double err[3];
  std::size_t steps[3] = {32, 64, 128};
  for (int k = 0; k < 3; ++k) {
    const NoisePath noise = sample_noise({1, 0}, pr.marks, pr.horizon, steps[k]);
    const StatePath x = solve_forward(pr, zero_control(noise.grid), noise);
    err[k] = std::abs(x.values.back() - truth);
  }
  CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.06));
  CHECK(err[1] / err[2] == doctest::Approx(2.0).epsilon(0.06));
}

TEST_CASE("cost uses the left endpoint rule plus the terminal read") {
  ProblemDef pr = minimal_problem();
  pr.running_cost = [](double, double, double) { return 1.0; };
  pr.terminal_cost = [](double x) { return x; };
  const NoisePath noise = sample_noise({8, 1}, pr.marks, pr.horizon, 16);
  const StatePath x = solve_forward(pr, zero_control(noise.grid), noise);
  const CostSample c = cost(pr, x, zero_control(noise.grid), noise.grid);
  CHECK(c.running == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(c.terminal == doctest::Approx(0.7).epsilon(1e-13));
  CHECK(c.total == doctest::Approx(1.7).epsilon(1e-13));
}

TEST_CASE("common noise gives identical solutions") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const NoisePath noise = sample_noise({33, 9}, bench.problem.marks, 1.0, 64);
  const FeedbackSolve a = solve_with_feedback(bench.problem, bench.reference, noise);
  const FeedbackSolve b = solve_with_feedback(bench.problem, bench.reference, noise);
  CHECK(a.state.values == b.state.values);
  CHECK(a.control.values == b.control.values);
}

TEST_CASE("feedback solve is a fixed point of the open-loop solver") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  for (std::size_t path = 0; path < 20; ++path) {
    const NoisePath noise = sample_noise({71, path}, bench.problem.marks, 1.0, 32);
    const FeedbackSolve fs =
        solve_with_feedback(bench.problem, bench.reference, noise);
    const StatePath redo = solve_forward(bench.problem, fs.control, noise);
    CHECK(sup_gap(redo, fs.state) == 0.0);
  }
}

TEST_CASE("strong error shrinks with the mesh") {
  const BenchmarkInstance bench = make_benchmark("contraction");
  const std::size_t n = 2000;
  double e_coarse = 0.0, e_mid = 0.0;
  for (std::size_t path = 0; path < n; ++path) {
    const NoisePath fine =
        sample_noise({12, path}, bench.problem.marks, bench.problem.horizon, 128);
    const NoisePath mid = coarsen_noise(fine, 2);
    const NoisePath coarse = coarsen_noise(fine, 4);
    const double xf =
        solve_with_feedback(bench.problem, bench.reference, fine).state.values.back();
    const double xm =
        solve_with_feedback(bench.problem, bench.reference, mid).state.values.back();
    const double xc =
        solve_with_feedback(bench.problem, bench.reference, coarse).state.values.back();
    e_mid += std::abs(xf - xm);
    e_coarse += std::abs(xf - xc);
  }
  CHECK(e_coarse / e_mid > 1.25);
}

TEST_CASE("explosive drift raises the divergence guard") {
  ProblemDef pr = minimal_problem();
  pr.x0 = 2.0;
  pr.horizon = 4.0;
  pr.drift = [](double, double x, double) { return 5.0 * x * x * x; };
  const NoisePath noise = sample_noise({2, 0}, MarkSpace{}, pr.horizon, 64);
  CHECK_THROWS_AS(solve_forward(pr, zero_control(noise.grid), noise),
                  DivergenceError);
}

TEST_CASE("picard iteration closes onto the direct solve") {
  const BenchmarkInstance bench = make_benchmark("contraction");
  for (std::size_t path = 0; path < 25; ++path) {
    const NoisePath noise = sample_noise({44, path}, bench.problem.marks,
                                         bench.problem.horizon, 32);
    const FeedbackSolve fs =
        solve_with_feedback(bench.problem, bench.reference, noise);
    const PicardTrace trace = picard_iterate(bench.problem, fs.control, noise,
                                             noise.grid.n_points() + 1);
    CHECK(sup_gap(trace.iterates.back(), fs.state) <= 1e-12);
    // Early distances must already contract.
    CHECK(trace.distances[3] < trace.distances[1]);
  }
}

TEST_CASE("moment stability report is positive and finite") {
  const BenchmarkInstance bench = make_benchmark("contraction");
  ProblemDef shifted = bench.problem;
  shifted.x0 += 0.05;
  const ProblemDef::Coef b = bench.problem.drift;
  shifted.drift = [b](double t, double x, double u) { return b(t, x, u) + 0.25; };
  const LpCheckReport rep =
      lp_estimate_check(bench.problem, shifted, bench.reference, 2, 500, 32, 6);
  CHECK(rep.lhs > 0.0);
  CHECK(rep.rhs > 0.0);
  CHECK(std::isfinite(rep.ratio));
  CHECK_THROWS_AS(
      lp_estimate_check(bench.problem, shifted, bench.reference, 3, 10, 8, 1),
      std::invalid_argument);
}

TEST_CASE("identical problems have zero gap and zero ratio") {
  const BenchmarkInstance bench = make_benchmark("contraction");
  const LpCheckReport rep = lp_estimate_check(bench.problem, bench.problem,
                                              bench.reference, 2, 200, 16, 5);
  CHECK(rep.lhs == 0.0);
  CHECK(rep.rhs == 0.0);
  CHECK(rep.ratio == 0.0);
}
