#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jumpctrl/problem.hpp"
#include "jumpctrl/variation.hpp"

namespace jumpctrl {

// A fully pinned problem instance with its reference control and the frozen
// numbers the test suite checks against. The reference cost is the simulated
// cost under the stated seed schedule; oracle_note records how the reference
// control was found.
struct BenchmarkInstance {
  std::string name;
  std::string summary;
  ProblemDef problem;
  FeedbackControl reference;
  FeedbackControl detuned;  // deliberately suboptimal, for power checks
  SpikeSpec default_spike;

  double reference_cost = 0.0;
  double reference_cost_se = 0.0;
  std::uint64_t reference_seed = 0;
  std::size_t reference_paths = 0;
  std::size_t reference_steps = 0;
  std::string oracle_note;

  // Discretization allowances: tolerance = 3 SE + c * dt, fitted once on the
  // instance and kept fixed.
  double mp_c_dt = 0.0;
  double duality_c_dt = 0.0;
};

// State and control enter every coefficient affinely, costs are quadratic:
//   dX = (a X + b u) dt + (c X + d u) dB + integral (gamma X_- + eta u) dN~
//   J  = E[ integral (qf X^2 + r u^2) dt + gT X_T^2 ]
// split over two marks. The reference control is the best constant-gain rule
// u = -kappa X.
struct LqParams {
  double a = -0.5;
  double b = 1.0;
  double c = 0.2;
  double d = 0.0;
  double gamma = 0.25;
  double eta = 0.35;
  double qf = 0.21;
  double r = 0.25;
  double gT = 0.1391597684;
  double total_rate = 3.0;
  double horizon = 1.0;
  double x0 = 1.0;
};

// Cost of the rule u = -kappa X in closed form: E X_t^2 = x0^2 exp(h t) with
// h = 2(a - b kappa) + (c - d kappa)^2 + rate (gamma - eta kappa)^2, so
// J(kappa) = (qf + r kappa^2) x0^2 (exp(hT) - 1)/h + gT x0^2 exp(hT).
double lq_closed_form_cost(const LqParams& params, double kappa);

// Minimizer of the closed-form cost: coarse scan to bracket, golden-section
// polish inside the bracketing cell.
double lq_best_gain(const LqParams& params);

BenchmarkInstance lq_jump(const LqParams& params);

// Two-point control set {-1, +1} with the control in the diffusion, so the
// quadratic correction term of the inequality is active. Reference rule is
// the threshold policy u = -1 on {x > threshold}, +1 elsewhere.
BenchmarkInstance bangbang(double threshold);

// State-independent coefficients and linear costs: the first adjoint is the
// deterministic path p_t = g_slope + f_slope (T - t), q = k = 0, P = 0.
BenchmarkInstance deterministic_adjoint(double f_slope, double g_slope);

// Smooth non-affine coefficients (tanh diffusion, sine jumps) with quadratic
// costs; exercises the second-order terms that vanish on the affine family.
BenchmarkInstance nlq_jump();

// Small horizon and small Lipschitz constants, inside the contraction regime
// of the iteration used for existence; the fixture for the fixed-point and
// stability experiments.
BenchmarkInstance contraction();

std::vector<std::string> benchmark_names();

// Registry lookup with the frozen reference numbers; throws
// std::invalid_argument on an unknown name.
BenchmarkInstance make_benchmark(const std::string& name);

}  // namespace jumpctrl
