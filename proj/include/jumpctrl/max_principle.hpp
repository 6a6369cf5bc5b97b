#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "jumpctrl/adjoint.hpp"
#include "jumpctrl/problem.hpp"
#include "jumpctrl/stats.hpp"

namespace jumpctrl {

// H(t, x, u, p, q) = p b + q sigma + f.
double hamiltonian(const ProblemDef& problem, double t, double x, double u,
                   double p, double q);

// For a candidate optimum u the deficiency
//   Phi(v) = H(v) - H(u) + 0.5 P (sigma(v) - sigma(u))^2
// must be nonnegative at almost every sample point. The report collects the
// empirical minima over a control grid.
struct MpReport {
  double global_min = 0.0;       // over base nodes, paths, and the v grid
  double mean_path_min = 0.0;    // mean over paths of the per-path minimum
  double se_path_min = 0.0;
  double tolerance = 0.0;        // 3 se + c_dt * dt
  double violation_fraction = 0.0;  // base samples with minimum below -tolerance
  std::size_t n_jump_samples = 0;   // diagnostic sweep at jump nodes
  double jump_global_min = 0.0;     // 0 when no jump node was seen
  bool passed = false;
};

// Sweeps Phi over every base node of every path and every v in v_grid, plus a
// report-only sweep at the jump nodes (left limits). v_grid entries must lie
// in the admissible set; empty grids are rejected.
MpReport mp_deficiency(const ProblemDef& problem, const FeedbackControl& feedback,
                       const AdjointModel& adjoint,
                       const std::vector<double>& v_grid, double c_dt,
                       std::size_t n_paths, std::size_t base_steps,
                       std::uint64_t seed, std::size_t n_threads);

// Mean deficiency of the localized perturbation v = w on {predicate(X)} and
// v = u elsewhere, read at the single time t_bar. Nonnegative in expectation
// for every choice of set when u is optimal.
MeanSe localization_check(const ProblemDef& problem, const FeedbackControl& feedback,
                          const AdjointModel& adjoint, double t_bar, double w,
                          const std::function<bool(double)>& predicate,
                          std::size_t n_paths, std::size_t base_steps,
                          std::uint64_t seed);

}  // namespace jumpctrl
