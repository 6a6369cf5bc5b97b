#include "jumpctrl/forward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jumpctrl/rng.hpp"
#include "jumpctrl/stats.hpp"

namespace jumpctrl {

namespace {

constexpr double kDivergenceGuard = 1e12;

void guard(double x, std::size_t step) {
  if (!std::isfinite(x) || std::abs(x) > kDivergenceGuard)
    throw DivergenceError(step, x);
}

void check_control_size(const ControlPath& control, const TimeGrid& grid,
                        const char* who) {
  if (control.values.size() != grid.n_points())
    throw std::invalid_argument(std::string(who) +
                                ": control length does not match grid");
}

}  // namespace

DivergenceError::DivergenceError(std::size_t step, double value)
    : std::runtime_error("state diverged at step " + std::to_string(step) +
                         " (value " + std::to_string(value) + ")"),
      step_(step) {}

double StatePath::sup_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  for (double v : left) m = std::max(m, std::abs(v));
  return m;
}

StatePath solve_forward(const ProblemDef& problem, const ControlPath& control,
                        const NoisePath& noise, const ControlPath* pred_control) {
  const TimeGrid& grid = noise.grid;
  check_control_size(control, grid, "solve_forward");
  if (pred_control) check_control_size(*pred_control, grid, "solve_forward");

  StatePath path;
  path.values.resize(grid.n_points());
  path.left.resize(grid.n_points());
  path.values[0] = path.left[0] = problem.x0;

  for (std::size_t i = 0; i < grid.n_intervals(); ++i) {
    const double t = grid.times[i];
    const double x = path.values[i];
    const double u = control.values[i];
    const double u_comp = pred_control ? pred_control->values[i] : u;
    double comp = 0.0;
    for (std::size_t e = 0; e < problem.marks.size(); ++e)
      comp += problem.jump(t, x, u_comp, e) * problem.marks.weights[e];
    double next = x + (problem.drift(t, x, u) - comp) * grid.dt(i) +
                  problem.diffusion(t, x, u) * noise.brownian[i];
    guard(next, i + 1);
    path.left[i + 1] = next;
    const int mark = grid.jump_mark[i + 1];
    if (mark >= 0) {
      next += problem.jump(grid.times[i + 1], next, control.values[i + 1],
                           static_cast<std::size_t>(mark));
      guard(next, i + 1);
    }
    path.values[i + 1] = next;
  }
  return path;
}

CostSample cost(const ProblemDef& problem, const StatePath& state,
                const ControlPath& control, const TimeGrid& grid) {
  check_control_size(control, grid, "cost");
  if (state.values.size() != grid.n_points())
    throw std::invalid_argument("cost: state length does not match grid");
  CostSample out;
  for (std::size_t i = 0; i < grid.n_intervals(); ++i)
    out.running +=
        problem.running_cost(grid.times[i], state.values[i], control.values[i]) *
        grid.dt(i);
  out.terminal = problem.terminal_cost(state.values.back());
  out.total = out.running + out.terminal;
  return out;
}

FeedbackSolve solve_with_feedback(const ProblemDef& problem,
                                  const FeedbackControl& feedback,
                                  const NoisePath& noise) {
  const TimeGrid& grid = noise.grid;
  FeedbackSolve out;
  out.state.values.resize(grid.n_points());
  out.state.left.resize(grid.n_points());
  out.control.values.resize(grid.n_points());

  auto pick = [&](double t, double x) {
    const double u = feedback.rule(t, x);
    if (!problem.controls.contains(u))
      throw std::invalid_argument("feedback rule left the control set");
    return u;
  };

  out.state.values[0] = out.state.left[0] = problem.x0;
  out.control.values[0] = pick(0.0, problem.x0);
  for (std::size_t i = 0; i < grid.n_intervals(); ++i) {
    const double t = grid.times[i];
    const double x = out.state.values[i];
    const double u = out.control.values[i];
    double comp = 0.0;
    for (std::size_t e = 0; e < problem.marks.size(); ++e)
      comp += problem.jump(t, x, u, e) * problem.marks.weights[e];
    double next = x + (problem.drift(t, x, u) - comp) * grid.dt(i) +
                  problem.diffusion(t, x, u) * noise.brownian[i];
    guard(next, i + 1);
    out.state.left[i + 1] = next;
    const double u_next = pick(grid.times[i + 1], next);
    out.control.values[i + 1] = u_next;
    const int mark = grid.jump_mark[i + 1];
    if (mark >= 0) {
      next += problem.jump(grid.times[i + 1], next, u_next,
                           static_cast<std::size_t>(mark));
      guard(next, i + 1);
    }
    out.state.values[i + 1] = next;
  }
  return out;
}

ControlPath realize_control(const FeedbackControl& feedback, const StatePath& state,
                            const TimeGrid& grid, const ControlSet& controls) {
  if (state.left.size() != grid.n_points())
    throw std::invalid_argument("realize_control: state length does not match grid");
  ControlPath out;
  out.values.resize(grid.n_points());
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    const double u = feedback.rule(grid.times[i], state.left[i]);
    if (!controls.contains(u))
      throw std::invalid_argument("realize_control: value outside the control set");
    out.values[i] = u;
  }
  return out;
}

PicardTrace picard_iterate(const ProblemDef& problem, const ControlPath& control,
                           const NoisePath& noise, std::size_t n_iters) {
  if (n_iters < 1) throw std::invalid_argument("picard_iterate: need n_iters >= 1");
  const TimeGrid& grid = noise.grid;
  check_control_size(control, grid, "picard_iterate");

  PicardTrace trace;
  StatePath prev;
  prev.values.assign(grid.n_points(), problem.x0);
  prev.left.assign(grid.n_points(), problem.x0);
  trace.iterates.push_back(prev);

  for (std::size_t k = 0; k < n_iters; ++k) {
    // One application of the solution map: all three integrals re-evaluated
    // with coefficients frozen along the previous iterate.
    StatePath next;
    next.values.resize(grid.n_points());
    next.left.resize(grid.n_points());
    next.values[0] = next.left[0] = problem.x0;
    for (std::size_t i = 0; i < grid.n_intervals(); ++i) {
      const double t = grid.times[i];
      const double xk = prev.values[i];
      const double u = control.values[i];
      double comp = 0.0;
      for (std::size_t e = 0; e < problem.marks.size(); ++e)
        comp += problem.jump(t, xk, u, e) * problem.marks.weights[e];
      double y = next.values[i] + (problem.drift(t, xk, u) - comp) * grid.dt(i) +
                 problem.diffusion(t, xk, u) * noise.brownian[i];
      guard(y, i + 1);
      next.left[i + 1] = y;
      const int mark = grid.jump_mark[i + 1];
      if (mark >= 0)
        y += problem.jump(grid.times[i + 1], prev.left[i + 1],
                          control.values[i + 1], static_cast<std::size_t>(mark));
      guard(y, i + 1);
      next.values[i + 1] = y;
    }
    double dist = 0.0;
    for (std::size_t i = 0; i < grid.n_points(); ++i)
      dist = std::max(dist, std::abs(next.values[i] - prev.values[i]));
    trace.distances.push_back(dist);
    trace.iterates.push_back(next);
    prev = std::move(next);
  }
  return trace;
}

LpCheckReport lp_estimate_check(const ProblemDef& p1, const ProblemDef& p2,
                                const FeedbackControl& feedback, unsigned p_moment,
                                std::size_t n_paths, std::size_t base_steps,
                                std::uint64_t seed) {
  if (p_moment < 2 || p_moment % 2 != 0)
    throw std::invalid_argument("lp_estimate_check: p must be an even integer >= 2");
  if (p1.marks.weights != p2.marks.weights)
    throw std::invalid_argument("lp_estimate_check: problems must share mark rates");

  const double p = static_cast<double>(p_moment);
  std::vector<double> lhs_samples(n_paths), rhs_samples(n_paths);
  const double dx0 = std::pow(std::abs(p1.x0 - p2.x0), p);

  for (std::size_t path = 0; path < n_paths; ++path) {
    const NoisePath noise =
        sample_noise({seed, path}, p1.marks, p1.horizon, base_steps);
    const FeedbackSolve s1 = solve_with_feedback(p1, feedback, noise);
    const FeedbackSolve s2 = solve_with_feedback(p2, feedback, noise);

    double sup = 0.0;
    for (std::size_t i = 0; i < noise.grid.n_points(); ++i)
      sup = std::max(sup, std::abs(s1.state.values[i] - s2.state.values[i]));
    lhs_samples[path] = std::pow(sup, p);

    // Coefficient differences along X1, under X1's realized control.
    double db_int = 0.0, ds_int = 0.0, dc_sum = 0.0;
    for (std::size_t i = 0; i < noise.grid.n_intervals(); ++i) {
      const double t = noise.grid.times[i];
      const double x = s1.state.values[i];
      const double u = s1.control.values[i];
      db_int += std::abs(p1.drift(t, x, u) - p2.drift(t, x, u)) * noise.grid.dt(i);
      const double ds = p1.diffusion(t, x, u) - p2.diffusion(t, x, u);
      ds_int += ds * ds * noise.grid.dt(i);
    }
    for (std::size_t i = 1; i < noise.grid.n_points(); ++i) {
      const int mark = noise.grid.jump_mark[i];
      if (mark < 0) continue;
      const double dc = p1.jump(noise.grid.times[i], s1.state.left[i],
                                s1.control.values[i], static_cast<std::size_t>(mark)) -
                        p2.jump(noise.grid.times[i], s1.state.left[i],
                                s1.control.values[i], static_cast<std::size_t>(mark));
      dc_sum += dc * dc;
    }
    rhs_samples[path] = dx0 + std::pow(db_int, p) + std::pow(ds_int, p / 2.0) +
                        std::pow(dc_sum, p / 2.0);
  }

  LpCheckReport rep;
  rep.lhs = mean_se(lhs_samples).mean;
  rep.rhs = mean_se(rhs_samples).mean;
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  return rep;
}

}  // namespace jumpctrl
