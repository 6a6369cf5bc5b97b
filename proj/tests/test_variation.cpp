#include <doctest.h>

#include <cmath>

#include "jumpctrl/benchmarks.hpp"
#include "jumpctrl/forward.hpp"
#include "jumpctrl/variation.hpp"

using namespace jumpctrl;

namespace {

// Fixed two-jump noise so window membership is known exactly.
NoisePath window_fixture() {
  NoisePath noise;
  noise.grid = refine_grid(1.0, 8, {{0.3, 0}, {0.8, 1}});
  noise.base_steps = 8;
  noise.brownian.assign(noise.grid.n_intervals(), 0.0);
  noise.jumps = {{0.3, 0}, {0.8, 1}};
  return noise;
}

}  // namespace

TEST_CASE("spike replaces the control only at jump-free points of the window") {
  const NoisePath noise = window_fixture();
  ControlPath u;
  u.values.assign(noise.grid.n_points(), 0.0);
  const ControlSet controls{-2.0, 2.0, {}};
  SpikeSpec spec;
  spec.t_bar = 0.25;
  spec.epsilon = 0.25;
  spec.v = 1.0;

  const ControlPath avoid = spike_control(u, spec, noise, controls);
  const ControlPath naive = naive_spike_control(u, spec, noise, controls);
  // grid: 0, .125, .25, .3, .375, .5, .625, .75, .8, .875, 1
  for (std::size_t i = 0; i < noise.grid.n_points(); ++i) {
    const double t = noise.grid.times[i];
    const bool inside = t > 0.25 + 1e-12 && t <= 0.5 + 1e-12;
    const bool jump = noise.grid.is_jump(i);
    CHECK(avoid.values[i] == ((inside && !jump) ? 1.0 : 0.0));
    CHECK(naive.values[i] == (inside ? 1.0 : 0.0));
  }
  // The only difference sits on the jump graph.
  CHECK(avoid.values[3] == 0.0);
  CHECK(naive.values[3] == 1.0);
}

TEST_CASE("state-dependent spike value reads the state at the window start") {
  const NoisePath noise = window_fixture();
  ControlPath u;
  u.values.assign(noise.grid.n_points(), 0.0);
  const ControlSet controls{-2.0, 2.0, {}};
  SpikeSpec spec;
  spec.t_bar = 0.25;
  spec.epsilon = 0.25;
  spec.v_rule = [](double x) { return x > 0.0 ? 1.5 : -1.5; };
  const ControlPath w = spike_control(u, spec, noise, controls, 0.7);
  CHECK(w.values[4] == 1.5);
  const ControlPath w2 = spike_control(u, spec, noise, controls, -0.7);
  CHECK(w2.values[4] == -1.5);
}

TEST_CASE("window outside the horizon is rejected") {
  SpikeSpec spec;
  spec.t_bar = 0.9;
  spec.epsilon = 0.2;
  spec.v = 0.0;
  CHECK_THROWS_AS(spec.check(1.0), std::invalid_argument);
}

TEST_CASE("first variation vanishes without a perturbation") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const NoisePath noise = sample_noise({21, 4}, bench.problem.marks, 1.0, 32);
  const FeedbackSolve fs = solve_with_feedback(bench.problem, bench.reference, noise);
  const StatePath xh =
      solve_first_variation(bench.problem, fs.control, fs.control, fs.state, noise);
  for (double v : xh.values) CHECK(v == 0.0);
  const StatePath yh = solve_second_variation(bench.problem, fs.control,
                                              fs.control, fs.state, xh, noise);
  for (double v : yh.values) CHECK(v == 0.0);
}

TEST_CASE("first variation is exact for affine coefficients") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  SpikeSpec spec = bench.default_spike;
  for (std::size_t path = 0; path < 40; ++path) {
    const NoisePath noise = sample_noise({57, path}, bench.problem.marks, 1.0, 64);
    const FeedbackSolve fs =
        solve_with_feedback(bench.problem, bench.reference, noise);
    const ControlPath u_eps =
        spike_control(fs.control, spec, noise, bench.problem.controls);
    const StatePath x_eps = solve_forward(bench.problem, u_eps, noise, &fs.control);
    const StatePath xh =
        solve_first_variation(bench.problem, fs.control, u_eps, fs.state, noise);
    double worst = 0.0;
    for (std::size_t i = 0; i < noise.grid.n_points(); ++i)
      worst = std::max(worst, std::abs(x_eps.values[i] - fs.state.values[i] -
                                       xh.values[i]));
    CHECK(worst <= 1e-10);
    // Nothing moves before the window opens.
    for (std::size_t i = 0; i < noise.grid.n_points(); ++i)
      if (noise.grid.times[i] <= spec.t_bar + 1e-12) CHECK(xh.values[i] == 0.0);
    // Affine coefficients have no second-order term.
    const StatePath yh = solve_second_variation(bench.problem, fs.control, u_eps,
                                                fs.state, xh, noise);
    for (double v : yh.values) CHECK(std::abs(v) <= 1e-14);
  }
}

TEST_CASE("log-log slope fit recovers a quadratic decay") {
  std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
  std::vector<double> mom;
  for (double e : eps) mom.push_back(3.0 * e * e);
  const OrderFit fit = fit_order(eps, mom);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cost expansion vanishes without a perturbation") {
  const BenchmarkInstance bench = make_benchmark("nlq_jump");
  const NoisePath noise = sample_noise({31, 2}, bench.problem.marks, 1.0, 32);
  const FeedbackSolve fs = solve_with_feedback(bench.problem, bench.reference, noise);
  StatePath zero;
  zero.values.assign(noise.grid.n_points(), 0.0);
  zero.left.assign(noise.grid.n_points(), 0.0);
  const double jh = cost_expansion_path(bench.problem, fs.control, fs.control,
                                        fs.state, zero, zero, noise.grid);
  CHECK(jh == 0.0);
}

TEST_CASE("sup gap compares both the values and the left limits") {
  StatePath a, b;
  a.values = {0.0, 1.0, 2.0};
  a.left = {0.0, 0.5, 2.0};
  b.values = {0.0, 1.0, 2.0};
  b.left = {0.0, 0.5, 1.2};
  CHECK(sup_gap(a, b) == doctest::Approx(0.8).epsilon(1e-15));
}
