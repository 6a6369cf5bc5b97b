#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jumpctrl/jump_driver.hpp"

namespace jumpctrl {

// Admissible control values: a closed interval or an explicit finite set.
struct ControlSet {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> points;  // nonempty means the set is the listed values

  bool discrete() const { return !points.empty(); }
  bool contains(double v) const;
  double clamp(double v) const;
  // Values scanned by inequality checks: the listed points, or n equally
  // spaced values across [lo, hi] including both ends.
  std::vector<double> scan_grid(std::size_t n) const;
  void validate() const;
};

// One controlled problem instance. Coefficients and their state derivatives
// are plain functions of (t, x, u) (plus the mark for the jump coefficient);
// derivatives are caller-supplied and audited against finite differences.
struct ProblemDef {
  using Coef = std::function<double(double t, double x, double u)>;
  using JumpCoef =
      std::function<double(double t, double x, double u, std::size_t mark)>;
  using Terminal = std::function<double(double x)>;

  std::string name;
  double horizon = 1.0;
  double x0 = 0.0;
  MarkSpace marks;
  ControlSet controls;

  Coef drift, drift_x, drift_xx;
  Coef diffusion, diffusion_x, diffusion_xx;
  JumpCoef jump, jump_x, jump_xx;
  Coef running_cost, running_cost_x, running_cost_xx;
  Terminal terminal_cost, terminal_cost_x, terminal_cost_xx;
};

// values[i] drives the step over (t_i, t_{i+1}] and, when t_i carries a jump,
// the jump coefficient at t_i.
struct ControlPath {
  std::vector<double> values;
};

struct FeedbackControl {
  std::function<double(double t, double x)> rule;
};

// Randomized (t, x, u) lattice used by validate. The wide lattice rescales x
// by growth_factor; a coefficient or derivative whose maximum grows with the
// lattice is flagged as unbounded.
struct LatticeSpec {
  std::size_t n_t = 5;
  std::size_t n_x = 9;
  std::size_t n_u = 5;
  double x_scale = 3.0;
  double growth_factor = 8.0;
  std::uint64_t seed = 2026;
};

struct ValidationReport {
  bool passed = false;
  bool finite_ok = true;
  bool growth_ok = true;
  bool derivative_bounds_ok = true;
  bool derivative_consistency_ok = true;
  double growth_constant = 0.0;
  double max_first_derivative = 0.0;
  double max_second_derivative = 0.0;
  double worst_fd_error = 0.0;
  std::vector<std::string> failures;
};

ValidationReport validate(const ProblemDef& problem, const LatticeSpec& lattice);

}  // namespace jumpctrl
