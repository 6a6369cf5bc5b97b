#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "jumpctrl/jump_driver.hpp"
#include "jumpctrl/problem.hpp"

namespace jumpctrl {

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, double value);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Cadlag state on the grid plus the pre-jump value at every point, so that
// values[i] - left[i] is exactly the jump landed at t_i (zero off jumps).
struct StatePath {
  std::vector<double> values;
  std::vector<double> left;
  double sup_abs() const;
};

struct CostSample {
  double running = 0.0;
  double terminal = 0.0;
  double total = 0.0;
};

struct PicardTrace {
  std::vector<StatePath> iterates;  // iterates[0] is the constant x0 path
  std::vector<double> distances;    // sup gap between consecutive iterates
};

struct LpCheckReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

// Euler step over (t_i, t_{i+1}] with the compensated-jump drift correction,
// then the exact jump map at flagged points. pred_control, when given,
// replaces the control inside the compensator sum only: the compensator of a
// jump integral is pinned by the integrand's values on the jump graph, so a
// control that was modified away from the graph keeps the unmodified
// compensator.
StatePath solve_forward(const ProblemDef& problem, const ControlPath& control,
                        const NoisePath& noise,
                        const ControlPath* pred_control = nullptr);

CostSample cost(const ProblemDef& problem, const StatePath& state,
                const ControlPath& control, const TimeGrid& grid);

struct FeedbackSolve {
  StatePath state;
  ControlPath control;
};

// Couples the forward solve with control realization: u at t is the rule
// evaluated at the left limit, so the jump coefficient sees the pre-jump state.
FeedbackSolve solve_with_feedback(const ProblemDef& problem,
                                  const FeedbackControl& feedback,
                                  const NoisePath& noise);

ControlPath realize_control(const FeedbackControl& feedback, const StatePath& state,
                            const TimeGrid& grid, const ControlSet& controls);

PicardTrace picard_iterate(const ProblemDef& problem, const ControlPath& control,
                           const NoisePath& noise, std::size_t n_iters);

// Monte Carlo check that E[sup|X1-X2|^p] is controlled by the coefficient
// differences evaluated along X1 (plus |x01-x02|^p), common noise per path.
LpCheckReport lp_estimate_check(const ProblemDef& p1, const ProblemDef& p2,
                                const FeedbackControl& feedback, unsigned p_moment,
                                std::size_t n_paths, std::size_t base_steps,
                                std::uint64_t seed);

}  // namespace jumpctrl
