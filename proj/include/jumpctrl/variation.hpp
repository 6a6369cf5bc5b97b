#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "jumpctrl/forward.hpp"
#include "jumpctrl/problem.hpp"

namespace jumpctrl {

// Perturbation window (t_bar, t_bar + epsilon] and the value pushed into it.
// v_rule, when set, derives the value from the state at t_bar; the plain v is
// used otherwise.
struct SpikeSpec {
  double t_bar = 0.0;
  double epsilon = 0.0;
  double v = 0.0;
  std::function<double(double x_at_t_bar)> v_rule;

  double value(double x_at_t_bar) const {
    return v_rule ? v_rule(x_at_t_bar) : v;
  }
  void check(double horizon) const;
};

// The perturbed control keeps the base value at jump-carrying grid points, so
// the jump coefficient never sees the perturbation.
ControlPath spike_control(const ControlPath& u, const SpikeSpec& spec,
                          const NoisePath& noise, const ControlSet& controls,
                          double x_at_t_bar = 0.0);

// Contrast construction: v everywhere in the window, jumps included.
ControlPath naive_spike_control(const ControlPath& u, const SpikeSpec& spec,
                                const NoisePath& noise, const ControlSet& controls,
                                double x_at_t_bar = 0.0);

// First-order sensitivity: linear SDE driven by the control increments of the
// drift and diffusion; the jump channel only propagates (no forcing).
StatePath solve_first_variation(const ProblemDef& problem, const ControlPath& u,
                                const ControlPath& u_eps, const StatePath& base,
                                const NoisePath& noise);

// Second-order sensitivity: linear SDE sourced by the quadratic terms in the
// first variation.
StatePath solve_second_variation(const ProblemDef& problem, const ControlPath& u,
                                 const ControlPath& u_eps, const StatePath& base,
                                 const StatePath& x_hat, const NoisePath& noise);

struct OrderFit {
  std::vector<double> epsilons;
  std::vector<double> moments;
  double slope = 0.0;
  double r2 = 0.0;
};

// Per-path functional whose ensemble mean is the predicted second-order cost
// increment of the spike (running and terminal Taylor terms plus the direct
// control increment of the running cost).
double cost_expansion_path(const ProblemDef& problem, const ControlPath& u,
                           const ControlPath& u_eps, const StatePath& base,
                           const StatePath& x_hat, const StatePath& y_hat,
                           const TimeGrid& grid);

// Least-squares slope of log(moment) against log(epsilon).
OrderFit fit_order(const std::vector<double>& epsilons,
                   const std::vector<double>& moments);

// sup over the grid of |a - b|, including pre-jump values.
double sup_gap(const StatePath& a, const StatePath& b);

}  // namespace jumpctrl
