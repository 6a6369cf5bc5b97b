#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "jumpctrl/calculus.hpp"
#include "jumpctrl/jump_driver.hpp"
#include "jumpctrl/stats.hpp"

using namespace jumpctrl;

namespace {

MarkSpace two_marks() {
  MarkSpace m;
  m.labels = {"small", "large"};
  m.weights = {1.2, 1.8};
  return m;
}

// Deterministic fixture: two jumps, no Brownian motion.
NoisePath fixture() {
  NoisePath noise;
  noise.grid = refine_grid(1.0, 4, {{0.3, 0}, {0.6, 1}});
  noise.base_steps = 4;
  noise.brownian.assign(noise.grid.n_intervals(), 0.0);
  noise.jumps = {{0.3, 0}, {0.6, 1}};
  return noise;
}

}  // namespace

TEST_CASE("integral against the jump measure sums graph values") {
  const NoisePath noise = fixture();
  const MarkedIntegrand h = MarkedIntegrand::from_function(
      noise.grid, 2, [](double t, std::size_t e) {
        return t + static_cast<double>(e);
      });
  const IntegralPath jn = jump_integral_n(h, noise);
  // nodes: 0, 0.25, 0.3, 0.5, 0.6, 0.75, 1
  CHECK(jn.values[1] == 0.0);
  CHECK(jn.values[2] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(jn.values[3] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(jn.values[4] == doctest::Approx(0.3 + 1.6).epsilon(1e-15));
  CHECK(jn.values.back() == doctest::Approx(1.9).epsilon(1e-15));
}

TEST_CASE("compensator of a constant integrand is linear in time") {
  const NoisePath noise = fixture();
  const MarkSpace marks = two_marks();
  const MarkedIntegrand h = MarkedIntegrand::from_function(
      noise.grid, 2, [](double, std::size_t) { return 1.0; });
  const IntegralPath comp = compensator(h, marks, noise.grid);
  for (std::size_t i = 0; i < noise.grid.n_points(); ++i)
    CHECK(comp.values[i] ==
          doctest::Approx(3.0 * noise.grid.times[i]).epsilon(1e-14));
}

TEST_CASE("compensator integrates a step integrand exactly") {
  const NoisePath noise = fixture();
  const MarkSpace marks = two_marks();
  const MarkedIntegrand h = MarkedIntegrand::from_function(
      noise.grid, 2, [](double t, std::size_t) { return t < 0.5 ? 1.0 : 0.0; });
  const IntegralPath comp = compensator(h, marks, noise.grid);
  // Left endpoint rule, breakpoint on a node: 3 * min(t, 0.5) exactly.
  for (std::size_t i = 0; i < noise.grid.n_points(); ++i)
    CHECK(comp.values[i] ==
          doctest::Approx(3.0 * std::min(noise.grid.times[i], 0.5)).epsilon(1e-14));
}

TEST_CASE("graph indicator compensated against one counts jumps minus mass") {
  const NoisePath noise = fixture();
  const MarkSpace marks = two_marks();
  MarkedIntegrand h = MarkedIntegrand::from_function(
      noise.grid, 2, [](double, std::size_t) { return 0.0; });
  for (std::size_t i = 0; i < noise.grid.n_points(); ++i)
    if (noise.grid.jump_mark[i] >= 0)
      h.at(i, static_cast<std::size_t>(noise.grid.jump_mark[i])) = 1.0;
  const MarkedIntegrand ones = MarkedIntegrand::from_function(
      noise.grid, 2, [](double, std::size_t) { return 1.0; });
  const IntegralPath z = compensated_jump_integral(h, ones, noise, marks);
  // value at t: N_t - Lambda t
  CHECK(z.values[2] == doctest::Approx(1.0 - 3.0 * 0.3).epsilon(1e-13));
  CHECK(z.values.back() == doctest::Approx(2.0 - 3.0).epsilon(1e-13));
}

TEST_CASE("progressive and predictable parts must agree at realized jumps") {
  const NoisePath noise = fixture();
  const MarkSpace marks = two_marks();
  const MarkedIntegrand h = MarkedIntegrand::from_function(
      noise.grid, 2, [](double t, std::size_t) { return 1.0 + t; });
  MarkedIntegrand off_graph = h;
  off_graph.at(1, 0) += 0.5;  // node 0.25 carries no jump, disagreement is fine
  CHECK_NOTHROW(compensated_jump_integral(h, off_graph, noise, marks));
  MarkedIntegrand on_graph = h;
  on_graph.at(2, 0) += 0.5;  // node 0.3 carries the mark-0 jump
  CHECK_THROWS_AS(compensated_jump_integral(h, on_graph, noise, marks),
                  std::invalid_argument);
}

TEST_CASE("jump reads of the compensated integral") {
  const NoisePath noise = fixture();
  const MarkedIntegrand h = MarkedIntegrand::from_function(
      noise.grid, 2, [](double t, std::size_t e) {
        return 2.0 * t + static_cast<double>(e);
      });
  CHECK(jump_of_integral(h, noise, 0.25) == 0.0);
  CHECK(jump_of_integral(h, noise, 0.3) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(jump_of_integral(h, noise, 0.6) == doctest::Approx(2.2).epsilon(1e-15));
}

TEST_CASE("bracket accumulates squared jump reads") {
  const NoisePath noise = fixture();
  const MarkedIntegrand h = MarkedIntegrand::from_function(
      noise.grid, 2, [](double, std::size_t) { return 2.0; });
  const IntegralPath br = bracket_of_jump_integral(h, noise);
  CHECK(br.values[1] == 0.0);
  CHECK(br.values[2] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(br.values.back() == doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("integral against brownian motion telescopes for a unit integrand") {
  const NoisePath noise = sample_noise({3, 14}, two_marks(), 1.0, 32);
  GridIntegrand ones;
  ones.values.assign(noise.grid.n_points(), 1.0);
  const IntegralPath it = ito_integral(ones, noise);
  double acc = 0.0;
  for (std::size_t i = 0; i < noise.grid.n_intervals(); ++i) {
    acc += noise.brownian[i];
    CHECK(it.values[i + 1] == doctest::Approx(acc).epsilon(1e-13));
  }
}

TEST_CASE("isometry of the brownian integral in the mean") {
  const MarkSpace marks = two_marks();
  const std::size_t n = 10000;
  std::vector<double> diff(n);
  for (std::size_t path = 0; path < n; ++path) {
    const NoisePath noise = sample_noise({2024, path}, marks, 1.0, 32);
    GridIntegrand h;
    h.values.resize(noise.grid.n_points());
    for (std::size_t i = 0; i < noise.grid.n_points(); ++i)
      h.values[i] = noise.grid.times[i];
    const double it = ito_integral(h, noise).values.back();
    double qv = 0.0;
    for (std::size_t i = 0; i < noise.grid.n_intervals(); ++i)
      qv += h.values[i] * h.values[i] * noise.grid.dt(i);
    diff[path] = it * it - qv;
  }
  const MeanSe m = mean_se(diff);
  CHECK(std::abs(m.mean) <= 3.0 * m.se);
}

TEST_CASE("compensated integral of a predictable integrand is centered") {
  const MarkSpace marks = two_marks();
  const std::size_t n = 4000;
  std::vector<double> terminal(n);
  for (std::size_t path = 0; path < n; ++path) {
    const NoisePath noise = sample_noise({515, path}, marks, 1.0, 16);
    const MarkedIntegrand h = MarkedIntegrand::from_function(
        noise.grid, 2, [](double t, std::size_t e) {
          return 0.7 + 0.2 * static_cast<double>(e) - 0.3 * t;
        });
    terminal[path] = compensated_jump_integral(h, h, noise, marks).values.back();
  }
  const MeanSe m = mean_se(terminal);
  CHECK(std::abs(m.mean) <= 3.0 * m.se + 1e-12);
}
