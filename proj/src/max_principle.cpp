#include "jumpctrl/max_principle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jumpctrl/forward.hpp"
#include "jumpctrl/parallel.hpp"
#include "jumpctrl/rng.hpp"

namespace jumpctrl {

double hamiltonian(const ProblemDef& problem, double t, double x, double u,
                   double p, double q) {
  return p * problem.drift(t, x, u) + q * problem.diffusion(t, x, u) +
         problem.running_cost(t, x, u);
}

namespace {

double deficiency_min(const ProblemDef& problem, const AdjointModel& adjoint,
                      const std::vector<double>& v_grid, double t, double x,
                      double u) {
  const AdjointEval ad = adjoint.eval(t, x);
  const double h_u = hamiltonian(problem, t, x, u, ad.p, ad.q);
  const double sig_u = problem.diffusion(t, x, u);
  double best = std::numeric_limits<double>::infinity();
  for (double v : v_grid) {
    const double ds = problem.diffusion(t, x, v) - sig_u;
    const double phi =
        hamiltonian(problem, t, x, v, ad.p, ad.q) - h_u + 0.5 * ad.P * ds * ds;
    best = std::min(best, phi);
  }
  return best;
}

}  // namespace

MpReport mp_deficiency(const ProblemDef& problem, const FeedbackControl& feedback,
                       const AdjointModel& adjoint,
                       const std::vector<double>& v_grid, double c_dt,
                       std::size_t n_paths, std::size_t base_steps,
                       std::uint64_t seed, std::size_t n_threads) {
  if (v_grid.empty())
    throw std::invalid_argument("mp_deficiency: empty control grid");
  for (double v : v_grid)
    if (!problem.controls.contains(v))
      throw std::invalid_argument("mp_deficiency: grid value outside control set");
  if (n_paths == 0 || base_steps == 0)
    throw std::invalid_argument("mp_deficiency: need paths and steps");

  const double dt = problem.horizon / static_cast<double>(base_steps);
  std::vector<double> node_min(n_paths * base_steps, 0.0);
  std::vector<double> jump_min(n_paths,
                               std::numeric_limits<double>::infinity());
  std::vector<std::size_t> jump_count(n_paths, 0);

  parallel_for_paths(n_paths, n_threads, [&](std::size_t path) {
    const NoisePath noise =
        sample_noise({seed, path}, problem.marks, problem.horizon, base_steps);
    const FeedbackSolve fs = solve_with_feedback(problem, feedback, noise);
    const std::vector<std::size_t> nodes = base_node_indices(noise.grid, base_steps);
    for (std::size_t s = 0; s < base_steps; ++s) {
      const std::size_t i = nodes[s];
      node_min[path * base_steps + s] =
          deficiency_min(problem, adjoint, v_grid, noise.grid.times[i],
                         fs.state.values[i], fs.control.values[i]);
    }
    // Jump nodes: same deficiency read at the left limit, kept out of the
    // pass decision.
    for (std::size_t i = 0; i < noise.grid.n_points(); ++i) {
      if (noise.grid.jump_mark[i] < 0) continue;
      const double m =
          deficiency_min(problem, adjoint, v_grid, noise.grid.times[i],
                         fs.state.left[i], fs.control.values[i]);
      jump_min[path] = std::min(jump_min[path], m);
      ++jump_count[path];
    }
  });

  MpReport rep;
  std::vector<double> path_min(n_paths);
  double global = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < n_paths; ++p) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < base_steps; ++s)
      m = std::min(m, node_min[p * base_steps + s]);
    path_min[p] = m;
    global = std::min(global, m);
  }
  rep.global_min = global;
  const MeanSe ms = mean_se(path_min);
  rep.mean_path_min = ms.mean;
  rep.se_path_min = ms.se;
  rep.tolerance = 3.0 * ms.se + c_dt * dt;

  std::size_t violations = 0;
  for (double m : node_min)
    if (m < -rep.tolerance) ++violations;
  rep.violation_fraction =
      static_cast<double>(violations) / static_cast<double>(node_min.size());

  double jump_global = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < n_paths; ++p) {
    rep.n_jump_samples += jump_count[p];
    jump_global = std::min(jump_global, jump_min[p]);
  }
  rep.jump_global_min = rep.n_jump_samples == 0 ? 0.0 : jump_global;
  rep.passed = rep.global_min >= -rep.tolerance;
  return rep;
}

MeanSe localization_check(const ProblemDef& problem, const FeedbackControl& feedback,
                          const AdjointModel& adjoint, double t_bar, double w,
                          const std::function<bool(double)>& predicate,
                          std::size_t n_paths, std::size_t base_steps,
                          std::uint64_t seed) {
  if (!problem.controls.contains(w))
    throw std::invalid_argument("localization_check: w outside control set");
  if (!(t_bar >= 0.0) || t_bar >= problem.horizon)
    throw std::invalid_argument("localization_check: t_bar outside [0, horizon)");

  std::vector<double> values(n_paths, 0.0);
  for (std::size_t path = 0; path < n_paths; ++path) {
    const NoisePath noise =
        sample_noise({seed, path}, problem.marks, problem.horizon, base_steps);
    const FeedbackSolve fs = solve_with_feedback(problem, feedback, noise);
    const double tol = 1e-12 * std::max(1.0, problem.horizon);
    double x = problem.x0, u = fs.control.values[0], t = 0.0;
    for (std::size_t i = 0; i < noise.grid.n_points(); ++i) {
      if (noise.grid.times[i] > t_bar + tol) break;
      x = fs.state.values[i];
      u = fs.control.values[i];
      t = noise.grid.times[i];
    }
    const double v = predicate(x) ? w : u;
    const AdjointEval ad = adjoint.eval(t, x);
    const double ds = problem.diffusion(t, x, v) - problem.diffusion(t, x, u);
    values[path] = hamiltonian(problem, t, x, v, ad.p, ad.q) -
                   hamiltonian(problem, t, x, u, ad.p, ad.q) +
                   0.5 * ad.P * ds * ds;
  }
  return mean_se(values);
}

}  // namespace jumpctrl
