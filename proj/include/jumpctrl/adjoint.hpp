#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "jumpctrl/forward.hpp"
#include "jumpctrl/problem.hpp"
#include "jumpctrl/variation.hpp"

namespace jumpctrl {

class UnsupportedProblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxMarks = 8;

struct AdjointEval {
  double p = 0.0, q = 0.0;
  double P = 0.0, Q = 0.0;
  std::size_t n_marks = 0;
  std::array<double, kMaxMarks> k{};
  std::array<double, kMaxMarks> K{};
};

// Both backends expose the adjoint processes as state functionals: the caller
// supplies the state at which to read them (current value at grid nodes, the
// left limit at jump times).
class AdjointModel {
 public:
  virtual ~AdjointModel() = default;
  virtual AdjointEval eval(double t, double x) const = 0;
  virtual std::string backend() const = 0;
};

// Coefficients of a problem that is affine in (x, u) with quadratic costs,
// closed by a linear feedback rule. *_x entries are the partial derivatives
// (constants); the closed-loop entries fold the rule into the coefficient.
struct AffineModel {
  double b1 = 0.0, s1 = 0.0;
  std::vector<double> c1;
  double loop_b0 = 0.0, loop_b1 = 0.0;
  double loop_s0 = 0.0, loop_s1 = 0.0;
  std::vector<double> loop_c0, loop_c1;
  double f1 = 0.0, f2 = 0.0;  // f_x(t, x, rule(x)) = f1 + 2 f2 x
  double g1 = 0.0, g2 = 0.0;  // g_x(x) = g1 + 2 g2 x
  double theta0 = 0.0, theta1 = 0.0;
};

// Probes the problem functions on a fixed lattice and verifies the affine
// structure; throws UnsupportedProblemError when any coefficient deviates.
AffineModel extract_affine(const ProblemDef& problem, const FeedbackControl& feedback);

// First adjoint ansatz p = alpha(t) X + beta(t), second adjoint P = pi(t),
// with (alpha, beta, pi) solving terminal-value ODEs obtained by matching the
// adjoint drivers; integrated by RK4 on the base mesh, read off elsewhere by
// cubic Hermite interpolation.
class ClosedFormAdjoint final : public AdjointModel {
 public:
  ClosedFormAdjoint(const ProblemDef& problem, const FeedbackControl& feedback,
                    std::size_t base_steps);
  AdjointEval eval(double t, double x) const override;
  std::string backend() const override { return "closed-form"; }

  double alpha_at(double t) const;
  double beta_at(double t) const;
  double pi_at(double t) const;

 private:
  double dense(const std::vector<double>& values,
               const std::vector<double>& derivs, double t) const;
  AffineModel model_;
  MarkSpace marks_;
  double horizon_ = 0.0;
  double dt_ = 0.0;
  std::vector<double> alpha_, beta_, pi_;
  std::vector<double> dalpha_, dbeta_, dpi_;
};

struct RegressionSpec {
  std::size_t degree = 3;
  double ridge = 1e-8;
};

// Forward ensemble restricted to the shared uniform mesh: state, realized
// control, Brownian increment and per-mark jump count per base cell. Row-major
// by time step so one step's cross-section is contiguous.
struct BaseMeshEnsemble {
  double horizon = 0.0;
  std::size_t base_steps = 0;
  std::size_t n_marks = 0;
  std::size_t n_paths = 0;
  std::vector<double> x;                // (base_steps+1) * n_paths
  std::vector<double> u;                // (base_steps+1) * n_paths
  std::vector<double> db;               // base_steps * n_paths
  std::vector<std::uint16_t> n_jumps;   // base_steps * n_marks * n_paths

  double state(std::size_t step, std::size_t path) const {
    return x[step * n_paths + path];
  }
};

BaseMeshEnsemble collect_base_mesh(const ProblemDef& problem,
                                   const FeedbackControl& feedback,
                                   std::size_t n_paths, std::size_t base_steps,
                                   std::uint64_t seed, std::size_t n_threads);

// Least-squares Monte Carlo backward sweep: per base step, p is the regressed
// continuation plus explicit driver, q the regressed Brownian covariation and
// k the regressed covariation with the compensated jump count; the second
// sweep repeats the pattern with the second-order driver.
// Fitted polynomials are only trusted on the bulk of each cross-section;
// outside the central quantile range evaluation continues linearly, value and
// slope matched at the boundary, so tail states cannot ride the fit's tails.
class RegressionAdjoint final : public AdjointModel {
 public:
  RegressionAdjoint(const ProblemDef& problem, const BaseMeshEnsemble& ensemble,
                    const RegressionSpec& spec);
  AdjointEval eval(double t, double x) const override;
  std::string backend() const override { return "regression"; }
  std::size_t ridge_bumps() const { return ridge_bumps_; }

 private:
  struct StepFit {
    double center = 0.0, scale = 1.0;
    double z_lo = 0.0, z_hi = 0.0;                // supported standardized range
    std::vector<double> p, q, P, Q;               // basis coefficients
    std::vector<std::vector<double>> k, K;        // per mark
  };
  double fit_value(const std::vector<double>& coef, const StepFit& s, double x) const;

  const ProblemDef* problem_;
  double horizon_ = 0.0;
  double dt_ = 0.0;
  std::size_t degree_ = 3;
  std::size_t ridge_bumps_ = 0;
  std::vector<StepFit> steps_;  // one per base node, terminal included
};

// Path norms of the realized adjoint: sup |p|^2, int q^2 dt and
// int sum_e k_e^2 rate_e dt along one state path; all must be finite.
struct AdjointNorms {
  double sup_p_sq = 0.0;
  double int_q_sq = 0.0;
  double int_k_sq = 0.0;
};

AdjointNorms adjoint_norms(const AdjointModel& adjoint, const ProblemDef& problem,
                           const StatePath& state, const TimeGrid& grid);

enum class DualityIdentity { px, py, pxx };

struct DualityReport {
  double lhs = 0.0, lhs_se = 0.0;
  double rhs = 0.0, rhs_se = 0.0;
  double diff = 0.0, diff_se = 0.0;
  double dt = 0.0;
  std::size_t n_paths = 0;
};

// Both sides of one pairing identity, Monte Carlo with common noise per path;
// diff collects the per-path gap so its standard error reflects the coupling.
DualityReport duality_check(DualityIdentity which, const ProblemDef& problem,
                            const FeedbackControl& feedback, const SpikeSpec& spike,
                            const AdjointModel& adjoint, std::size_t n_paths,
                            std::size_t base_steps, std::uint64_t seed,
                            std::size_t n_threads);

struct ReducedExpansionPoint {
  double epsilon = 0.0;
  double j_hat = 0.0;        // second-order cost expansion
  double reduced = 0.0;      // adjoint form of the same expansion
  double gap_over_eps = 0.0;
  double gap_se_over_eps = 0.0;
};

// Compares the cost expansion with its adjoint-reduced form at one epsilon;
// the gap divided by epsilon must vanish along a ladder.
ReducedExpansionPoint reduced_expansion_gap(const ProblemDef& problem,
                                            const FeedbackControl& feedback,
                                            SpikeSpec spike, double epsilon,
                                            const AdjointModel& adjoint,
                                            std::size_t n_paths,
                                            std::size_t base_steps,
                                            std::uint64_t seed,
                                            std::size_t n_threads);

}  // namespace jumpctrl
