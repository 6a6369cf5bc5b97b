#include "jumpctrl/variation.hpp"

#include <cmath>
#include <stdexcept>

#include "jumpctrl/stats.hpp"

namespace jumpctrl {

void SpikeSpec::check(double horizon) const {
  if (!(t_bar >= 0.0) || !(epsilon >= 0.0) || t_bar + epsilon > horizon + 1e-12)
    throw std::invalid_argument("SpikeSpec: window outside [0, horizon]");
}

namespace {

ControlPath spiked(const ControlPath& u, const SpikeSpec& spec,
                   const NoisePath& noise, const ControlSet& controls,
                   double x_at_t_bar, bool skip_jump_points) {
  spec.check(noise.grid.horizon);
  if (u.values.size() != noise.grid.n_points())
    throw std::invalid_argument("spike_control: control length does not match grid");
  const double v = spec.value(x_at_t_bar);
  if (!controls.contains(v))
    throw std::invalid_argument("spike_control: v outside the control set");

  const double tol = 1e-12 * std::max(1.0, noise.grid.horizon);
  ControlPath out = u;
  for (std::size_t i = 0; i < noise.grid.n_points(); ++i) {
    const double t = noise.grid.times[i];
    if (t <= spec.t_bar + tol || t > spec.t_bar + spec.epsilon + tol) continue;
    if (skip_jump_points && noise.grid.is_jump(i)) continue;
    out.values[i] = v;
  }
  return out;
}

}  // namespace

ControlPath spike_control(const ControlPath& u, const SpikeSpec& spec,
                          const NoisePath& noise, const ControlSet& controls,
                          double x_at_t_bar) {
  return spiked(u, spec, noise, controls, x_at_t_bar, true);
}

ControlPath naive_spike_control(const ControlPath& u, const SpikeSpec& spec,
                                const NoisePath& noise, const ControlSet& controls,
                                double x_at_t_bar) {
  return spiked(u, spec, noise, controls, x_at_t_bar, false);
}

StatePath solve_first_variation(const ProblemDef& problem, const ControlPath& u,
                                const ControlPath& u_eps, const StatePath& base,
                                const NoisePath& noise) {
  const TimeGrid& grid = noise.grid;
  if (u.values.size() != grid.n_points() || u_eps.values.size() != grid.n_points() ||
      base.values.size() != grid.n_points())
    throw std::invalid_argument("solve_first_variation: size mismatch");

  StatePath xh;
  xh.values.assign(grid.n_points(), 0.0);
  xh.left.assign(grid.n_points(), 0.0);

  for (std::size_t i = 0; i < grid.n_intervals(); ++i) {
    const double t = grid.times[i];
    const double x = base.values[i];
    const double ui = u.values[i];
    const double uei = u_eps.values[i];
    const double cur = xh.values[i];

    const double db = problem.drift(t, x, uei) - problem.drift(t, x, ui);
    const double ds = problem.diffusion(t, x, uei) - problem.diffusion(t, x, ui);
    double comp = 0.0;
    for (std::size_t e = 0; e < problem.marks.size(); ++e)
      comp += problem.jump_x(t, x, ui, e) * cur * problem.marks.weights[e];

    double next = cur + (problem.drift_x(t, x, ui) * cur + db - comp) * grid.dt(i) +
                  (problem.diffusion_x(t, x, ui) * cur + ds) * noise.brownian[i];
    if (!std::isfinite(next) || std::abs(next) > 1e12)
      throw DivergenceError(i + 1, next);
    xh.left[i + 1] = next;
    const int mark = grid.jump_mark[i + 1];
    if (mark >= 0)
      next += problem.jump_x(grid.times[i + 1], base.left[i + 1], u.values[i + 1],
                             static_cast<std::size_t>(mark)) *
              next;
    xh.values[i + 1] = next;
  }
  return xh;
}

StatePath solve_second_variation(const ProblemDef& problem, const ControlPath& u,
                                 const ControlPath& u_eps, const StatePath& base,
                                 const StatePath& x_hat, const NoisePath& noise) {
  const TimeGrid& grid = noise.grid;
  if (x_hat.values.size() != grid.n_points())
    throw std::invalid_argument("solve_second_variation: size mismatch");

  StatePath yh;
  yh.values.assign(grid.n_points(), 0.0);
  yh.left.assign(grid.n_points(), 0.0);

  for (std::size_t i = 0; i < grid.n_intervals(); ++i) {
    const double t = grid.times[i];
    const double x = base.values[i];
    const double ui = u.values[i];
    const double uei = u_eps.values[i];
    const double xh = x_hat.values[i];
    const double cur = yh.values[i];

    const double drift_src = 0.5 * problem.drift_xx(t, x, ui) * xh * xh;
    const double dsx =
        problem.diffusion_x(t, x, uei) - problem.diffusion_x(t, x, ui);
    const double diff_src =
        0.5 * problem.diffusion_xx(t, x, ui) * xh * xh + dsx * xh;
    double comp = 0.0;
    for (std::size_t e = 0; e < problem.marks.size(); ++e)
      comp += (problem.jump_x(t, x, ui, e) * cur +
               0.5 * problem.jump_xx(t, x, ui, e) * xh * xh) *
              problem.marks.weights[e];

    double next =
        cur + (problem.drift_x(t, x, ui) * cur + drift_src - comp) * grid.dt(i) +
        (problem.diffusion_x(t, x, ui) * cur + diff_src) * noise.brownian[i];
    if (!std::isfinite(next) || std::abs(next) > 1e12)
      throw DivergenceError(i + 1, next);
    yh.left[i + 1] = next;
    const int mark = grid.jump_mark[i + 1];
    if (mark >= 0) {
      const auto e = static_cast<std::size_t>(mark);
      const double tj = grid.times[i + 1];
      const double xj = base.left[i + 1];
      const double xhj = x_hat.left[i + 1];
      next += problem.jump_x(tj, xj, u.values[i + 1], e) * next +
              0.5 * problem.jump_xx(tj, xj, u.values[i + 1], e) * xhj * xhj;
    }
    yh.values[i + 1] = next;
  }
  return yh;
}

double cost_expansion_path(const ProblemDef& problem, const ControlPath& u,
                           const ControlPath& u_eps, const StatePath& base,
                           const StatePath& x_hat, const StatePath& y_hat,
                           const TimeGrid& grid) {
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.n_intervals(); ++i) {
    const double t = grid.times[i];
    const double x = base.values[i];
    const double ui = u.values[i];
    const double xh = x_hat.values[i];
    const double df = problem.running_cost(t, x, u_eps.values[i]) -
                      problem.running_cost(t, x, ui);
    acc += (problem.running_cost_x(t, x, ui) * (xh + y_hat.values[i]) +
            0.5 * problem.running_cost_xx(t, x, ui) * xh * xh + df) *
           grid.dt(i);
  }
  const double xT = base.values.back();
  const double xhT = x_hat.values.back();
  acc += problem.terminal_cost_x(xT) * (xhT + y_hat.values.back()) +
         0.5 * problem.terminal_cost_xx(xT) * xhT * xhT;
  return acc;
}

OrderFit fit_order(const std::vector<double>& epsilons,
                   const std::vector<double>& moments) {
  if (epsilons.size() != moments.size() || epsilons.size() < 4)
    throw std::invalid_argument("fit_order: need at least 4 ladder points");
  std::vector<double> lx(epsilons.size()), ly(epsilons.size());
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0) || !(moments[i] > 0.0))
      throw std::invalid_argument("fit_order: ladder values must be positive");
    lx[i] = std::log(epsilons[i]);
    ly[i] = std::log(moments[i]);
  }
  const LineFit fit = fit_line(lx, ly);
  OrderFit out;
  out.epsilons = epsilons;
  out.moments = moments;
  out.slope = fit.slope;
  out.r2 = fit.r2;
  return out;
}

double sup_gap(const StatePath& a, const StatePath& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
    m = std::max(m, std::abs(a.left[i] - b.left[i]));
  }
  return m;
}

}  // namespace jumpctrl
