#include "jumpctrl/adjoint.hpp"

#include <algorithm>
#include <cmath>

#include "jumpctrl/parallel.hpp"
#include "jumpctrl/rng.hpp"
#include "jumpctrl/stats.hpp"

namespace jumpctrl {

namespace {

constexpr double kAffineTol = 1e-8;

void expect_close(double got, double want, const char* what) {
  const double tol = kAffineTol * std::max({1.0, std::abs(got), std::abs(want)});
  if (!(std::abs(got - want) <= tol))
    throw UnsupportedProblemError(std::string("closed-form backend: ") + what +
                                  " is not affine with constant coefficients");
}

const double kProbeT[4] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
const double kProbeX[6] = {-2.0, -0.5, 0.0, 0.4, 1.0, 2.5};

}  // namespace

AffineModel extract_affine(const ProblemDef& problem, const FeedbackControl& feedback) {
  if (problem.marks.size() > kMaxMarks)
    throw UnsupportedProblemError("closed-form backend: too many marks");
  AffineModel m;
  const double T = problem.horizon;

  // Feedback rule must be linear in x and time-invariant.
  m.theta0 = feedback.rule(0.0, 0.0);
  m.theta1 = feedback.rule(0.0, 1.0) - m.theta0;
  auto rule_at = [&](double x) { return m.theta0 + m.theta1 * x; };
  for (double tf : kProbeT)
    for (double x : kProbeX)
      expect_close(feedback.rule(tf * T, x), rule_at(x), "the feedback rule");

  // Probe each coefficient at x in {0, 1} with the rule folded in, then
  // verify the affine reading across the lattice.
  auto probe_loop = [&](auto&& f, double& a0, double& a1, const char* what) {
    a0 = f(0.0, 0.0, rule_at(0.0));
    a1 = f(0.0, 1.0, rule_at(1.0)) - a0;
    for (double tf : kProbeT)
      for (double x : kProbeX)
        expect_close(f(tf * T, x, rule_at(x)), a0 + a1 * x, what);
  };
  probe_loop(problem.drift, m.loop_b0, m.loop_b1, "the drift");
  probe_loop(problem.diffusion, m.loop_s0, m.loop_s1, "the diffusion");
  probe_loop(problem.running_cost_x, m.f1, m.f2, "the running cost gradient");
  m.f2 *= 0.5;

  auto probe_const = [&](auto&& f, const char* what) {
    const double v = f(0.0, 0.0, rule_at(0.0));
    for (double tf : kProbeT)
      for (double x : kProbeX) expect_close(f(tf * T, x, rule_at(x)), v, what);
    return v;
  };
  m.b1 = probe_const(problem.drift_x, "the drift slope");
  m.s1 = probe_const(problem.diffusion_x, "the diffusion slope");
  const double fxx = probe_const(problem.running_cost_xx, "the running cost curvature");
  expect_close(fxx, 2.0 * m.f2, "the running cost curvature");

  m.c1.resize(problem.marks.size());
  m.loop_c0.resize(problem.marks.size());
  m.loop_c1.resize(problem.marks.size());
  for (std::size_t e = 0; e < problem.marks.size(); ++e) {
    auto ce = [&](double t, double x, double u) { return problem.jump(t, x, u, e); };
    auto cex = [&](double t, double x, double u) { return problem.jump_x(t, x, u, e); };
    probe_loop(ce, m.loop_c0[e], m.loop_c1[e], "the jump coefficient");
    m.c1[e] = probe_const(cex, "the jump coefficient slope");
  }

  m.g1 = problem.terminal_cost_x(0.0);
  m.g2 = 0.5 * (problem.terminal_cost_x(1.0) - m.g1);
  for (double x : kProbeX) {
    expect_close(problem.terminal_cost_x(x), m.g1 + 2.0 * m.g2 * x,
                 "the terminal cost gradient");
    expect_close(problem.terminal_cost_xx(x), 2.0 * m.g2,
                 "the terminal cost curvature");
  }
  return m;
}

ClosedFormAdjoint::ClosedFormAdjoint(const ProblemDef& problem,
                                     const FeedbackControl& feedback,
                                     std::size_t base_steps)
    : model_(extract_affine(problem, feedback)),
      marks_(problem.marks),
      horizon_(problem.horizon) {
  if (base_steps == 0)
    throw std::invalid_argument("ClosedFormAdjoint: base_steps must be positive");
  dt_ = horizon_ / static_cast<double>(base_steps);

  // Matching the adjoint drivers under p = alpha X + beta, P = pi:
  //   alpha' = -alpha (loop_b1 + b1 + s1 loop_s1 + sum_e rate_e c1_e loop_c1_e) - 2 f2
  //   beta'  = -b1 beta - alpha (loop_b0 + s1 loop_s0 + sum_e rate_e c1_e loop_c0_e) - f1
  //   pi'    = -pi (2 b1 + s1^2 + sum_e rate_e c1_e^2) - 2 f2
  double jump_cross1 = 0.0, jump_cross0 = 0.0, jump_sq = 0.0;
  for (std::size_t e = 0; e < marks_.size(); ++e) {
    jump_cross1 += marks_.weights[e] * model_.c1[e] * model_.loop_c1[e];
    jump_cross0 += marks_.weights[e] * model_.c1[e] * model_.loop_c0[e];
    jump_sq += marks_.weights[e] * model_.c1[e] * model_.c1[e];
  }
  const double ra = model_.loop_b1 + model_.b1 + model_.s1 * model_.loop_s1 + jump_cross1;
  const double rp = 2.0 * model_.b1 + model_.s1 * model_.s1 + jump_sq;

  auto f_alpha = [&](double a) { return -a * ra - 2.0 * model_.f2; };
  auto f_beta = [&](double a, double b) {
    return -model_.b1 * b -
           a * (model_.loop_b0 + model_.s1 * model_.loop_s0 + jump_cross0) -
           model_.f1;
  };
  auto f_pi = [&](double p) { return -p * rp - 2.0 * model_.f2; };

  const std::size_t n = base_steps + 1;
  alpha_.resize(n);
  beta_.resize(n);
  pi_.resize(n);
  alpha_[base_steps] = 2.0 * model_.g2;
  beta_[base_steps] = model_.g1;
  pi_[base_steps] = 2.0 * model_.g2;

  // RK4 backward; alpha and beta advance as a coupled pair.
  const double h = -dt_;
  for (std::size_t i = base_steps; i > 0; --i) {
    const double a = alpha_[i], b = beta_[i], p = pi_[i];
    const double ka1 = f_alpha(a), kb1 = f_beta(a, b), kp1 = f_pi(p);
    const double ka2 = f_alpha(a + 0.5 * h * ka1);
    const double kb2 = f_beta(a + 0.5 * h * ka1, b + 0.5 * h * kb1);
    const double kp2 = f_pi(p + 0.5 * h * kp1);
    const double ka3 = f_alpha(a + 0.5 * h * ka2);
    const double kb3 = f_beta(a + 0.5 * h * ka2, b + 0.5 * h * kb2);
    const double kp3 = f_pi(p + 0.5 * h * kp2);
    const double ka4 = f_alpha(a + h * ka3);
    const double kb4 = f_beta(a + h * ka3, b + h * kb3);
    const double kp4 = f_pi(p + h * kp3);
    alpha_[i - 1] = a + h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
    beta_[i - 1] = b + h / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4);
    pi_[i - 1] = p + h / 6.0 * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
  }

  dalpha_.resize(n);
  dbeta_.resize(n);
  dpi_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    dalpha_[i] = f_alpha(alpha_[i]);
    dbeta_[i] = f_beta(alpha_[i], beta_[i]);
    dpi_[i] = f_pi(pi_[i]);
  }
}

double ClosedFormAdjoint::dense(const std::vector<double>& values,
                                const std::vector<double>& derivs, double t) const {
  const double clamped = std::min(std::max(t, 0.0), horizon_);
  const auto cell = std::min(static_cast<std::size_t>(clamped / dt_),
                             values.size() - 2);
  const double s = (clamped - static_cast<double>(cell) * dt_) / dt_;
  const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  const double h10 = s * (1.0 - s) * (1.0 - s);
  const double h01 = s * s * (3.0 - 2.0 * s);
  const double h11 = s * s * (s - 1.0);
  return h00 * values[cell] + h10 * dt_ * derivs[cell] + h01 * values[cell + 1] +
         h11 * dt_ * derivs[cell + 1];
}

double ClosedFormAdjoint::alpha_at(double t) const { return dense(alpha_, dalpha_, t); }
double ClosedFormAdjoint::beta_at(double t) const { return dense(beta_, dbeta_, t); }
double ClosedFormAdjoint::pi_at(double t) const { return dense(pi_, dpi_, t); }

AdjointEval ClosedFormAdjoint::eval(double t, double x) const {
  AdjointEval out;
  const double a = alpha_at(t);
  out.p = a * x + beta_at(t);
  out.q = a * (model_.loop_s0 + model_.loop_s1 * x);
  out.P = pi_at(t);
  out.Q = 0.0;
  out.n_marks = marks_.size();
  for (std::size_t e = 0; e < marks_.size(); ++e) {
    out.k[e] = a * (model_.loop_c0[e] + model_.loop_c1[e] * x);
    out.K[e] = 0.0;
  }
  return out;
}

BaseMeshEnsemble collect_base_mesh(const ProblemDef& problem,
                                   const FeedbackControl& feedback,
                                   std::size_t n_paths, std::size_t base_steps,
                                   std::uint64_t seed, std::size_t n_threads) {
  if (problem.marks.size() > kMaxMarks)
    throw std::invalid_argument("collect_base_mesh: too many marks");
  BaseMeshEnsemble ens;
  ens.horizon = problem.horizon;
  ens.base_steps = base_steps;
  ens.n_marks = problem.marks.size();
  ens.n_paths = n_paths;
  ens.x.assign((base_steps + 1) * n_paths, 0.0);
  ens.u.assign((base_steps + 1) * n_paths, 0.0);
  ens.db.assign(base_steps * n_paths, 0.0);
  ens.n_jumps.assign(base_steps * ens.n_marks * n_paths, 0);

  parallel_for_paths(n_paths, n_threads, [&](std::size_t path) {
    const NoisePath noise =
        sample_noise({seed, path}, problem.marks, problem.horizon, base_steps);
    const FeedbackSolve fs = solve_with_feedback(problem, feedback, noise);
    const std::vector<std::size_t> nodes = base_node_indices(noise.grid, base_steps);
    for (std::size_t s = 0; s <= base_steps; ++s) {
      ens.x[s * n_paths + path] = fs.state.values[nodes[s]];
      ens.u[s * n_paths + path] = fs.control.values[nodes[s]];
    }
    for (std::size_t s = 0; s < base_steps; ++s) {
      double acc = 0.0;
      for (std::size_t i = nodes[s]; i < nodes[s + 1]; ++i)
        acc += noise.brownian[i];
      ens.db[s * n_paths + path] = acc;
      for (std::size_t i = nodes[s] + 1; i <= nodes[s + 1]; ++i) {
        const int mark = noise.grid.jump_mark[i];
        if (mark >= 0)
          ens.n_jumps[(s * ens.n_marks + static_cast<std::size_t>(mark)) * n_paths +
                      path]++;
      }
    }
  });
  return ens;
}

namespace {

// Dense symmetric solve with ridge retry; dim is degree+1 (small).
class RidgeRegressor {
 public:
  explicit RidgeRegressor(std::size_t dim) : dim_(dim) {}

  // X row i = basis of sample i; returns coefficients of the LS fit.
  std::vector<double> fit(const std::vector<double>& basis,
                          const std::vector<double>& target, std::size_t n,
                          double ridge, std::size_t* bumps) {
    std::vector<double> ata(dim_ * dim_, 0.0), aty(dim_, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &basis[i * dim_];
      for (std::size_t a = 0; a < dim_; ++a) {
        aty[a] += row[a] * target[i];
        for (std::size_t b = a; b < dim_; ++b) ata[a * dim_ + b] += row[a] * row[b];
      }
    }
    const double scale = static_cast<double>(n);
    for (std::size_t a = 0; a < dim_; ++a) {
      aty[a] /= scale;
      for (std::size_t b = a; b < dim_; ++b) {
        ata[a * dim_ + b] /= scale;
        ata[b * dim_ + a] = ata[a * dim_ + b];
      }
    }
    for (int attempt = 0; attempt < 6; ++attempt) {
      std::vector<double> coef;
      if (cholesky_solve(ata, aty, ridge, coef)) return coef;
      ridge = std::max(ridge * 100.0, 1e-12);
      if (bumps) ++(*bumps);
    }
    throw std::runtime_error("regression normal equations stayed singular");
  }

 private:
  bool cholesky_solve(const std::vector<double>& a_in, const std::vector<double>& y,
                      double ridge, std::vector<double>& out) const {
    std::vector<double> a = a_in;
    for (std::size_t i = 0; i < dim_; ++i) a[i * dim_ + i] += ridge;
    std::vector<double> l(dim_ * dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = a[i * dim_ + j];
        for (std::size_t m = 0; m < j; ++m) s -= l[i * dim_ + m] * l[j * dim_ + m];
        if (i == j) {
          if (s <= 0.0) return false;
          l[i * dim_ + i] = std::sqrt(s);
        } else {
          l[i * dim_ + j] = s / l[j * dim_ + j];
        }
      }
    }
    std::vector<double> z(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
      double s = y[i];
      for (std::size_t m = 0; m < i; ++m) s -= l[i * dim_ + m] * z[m];
      z[i] = s / l[i * dim_ + i];
    }
    out.assign(dim_, 0.0);
    for (std::size_t ii = dim_; ii > 0; --ii) {
      const std::size_t i = ii - 1;
      double s = z[i];
      for (std::size_t m = i + 1; m < dim_; ++m) s -= l[m * dim_ + i] * out[m];
      out[i] = s / l[i * dim_ + i];
    }
    return true;
  }

  std::size_t dim_;
  double ridge_;
};

}  // namespace

namespace {

void poly_eval(const std::vector<double>& coef, double z, double* value,
               double* slope) {
  double acc = 0.0, der = 0.0, pw = 1.0;
  for (std::size_t d = 0; d < coef.size(); ++d) {
    acc += coef[d] * pw;
    if (d + 1 < coef.size())
      der += static_cast<double>(d + 1) * coef[d + 1] * pw;
    pw *= z;
  }
  *value = acc;
  *slope = der;
}

}  // namespace

double RegressionAdjoint::fit_value(const std::vector<double>& coef,
                                    const StepFit& s, double x) const {
  double z = (x - s.center) / s.scale;
  // Outside the fitted bulk the polynomial is pure extrapolation; continue it
  // linearly from the nearest supported point instead.
  const double anchor = std::min(std::max(z, s.z_lo), s.z_hi);
  double value = 0.0, slope = 0.0;
  poly_eval(coef, anchor, &value, &slope);
  return value + slope * (z - anchor);
}

RegressionAdjoint::RegressionAdjoint(const ProblemDef& problem,
                                     const BaseMeshEnsemble& ens,
                                     const RegressionSpec& spec)
    : problem_(&problem),
      horizon_(ens.horizon),
      dt_(ens.horizon / static_cast<double>(ens.base_steps)),
      degree_(spec.degree) {
  if (spec.degree < 1)
    throw std::invalid_argument("RegressionAdjoint: degree must be >= 1");
  const std::size_t M = ens.base_steps;
  const std::size_t n = ens.n_paths;
  const std::size_t dim = degree_ + 1;
  const MarkSpace& marks = problem.marks;
  steps_.assign(M + 1, StepFit{});

  // Basis normalization per step, from the cross-sectional moments. The
  // trusted range is the central 98% of the cross-section; fit_value switches
  // to linear continuation beyond it.
  for (std::size_t s = 0; s <= M; ++s) {
    std::vector<double> xs(ens.x.begin() + static_cast<std::ptrdiff_t>(s * n),
                           ens.x.begin() + static_cast<std::ptrdiff_t>((s + 1) * n));
    const MeanSe ms = mean_se(xs);
    double var = 0.0;
    for (double v : xs) var += (v - ms.mean) * (v - ms.mean);
    var /= static_cast<double>(n);
    steps_[s].center = ms.mean;
    steps_[s].scale = std::max(std::sqrt(var), 1e-8);
    std::sort(xs.begin(), xs.end());
    const std::size_t lo = static_cast<std::size_t>(0.01 * static_cast<double>(n - 1));
    const std::size_t hi = n - 1 - lo;
    steps_[s].z_lo = (xs[lo] - steps_[s].center) / steps_[s].scale;
    steps_[s].z_hi = (xs[hi] - steps_[s].center) / steps_[s].scale;
  }

  // Terminal conditions are exact state functionals, kept as exact fits by
  // evaluating the derivative functions instead of coefficients.
  // They are stored as empty coefficient vectors and special-cased in eval.

  RidgeRegressor solver(dim);
  std::vector<double> basis(n * dim);
  std::vector<double> p_next(n), P_next(n), target(n);
  std::vector<double> p_here(n), P_here(n);

  // Terminal values along paths.
  for (std::size_t i = 0; i < n; ++i) {
    const double xT = ens.state(M, i);
    p_next[i] = problem.terminal_cost_x(xT);
    P_next[i] = problem.terminal_cost_xx(xT);
  }

  for (std::size_t srev = 0; srev < M; ++srev) {
    const std::size_t s = M - 1 - srev;
    StepFit& fit = steps_[s];
    const double t = static_cast<double>(s) * dt_;

    for (std::size_t i = 0; i < n; ++i) {
      const double z = (ens.state(s, i) - fit.center) / fit.scale;
      double pw = 1.0;
      for (std::size_t d = 0; d < dim; ++d) {
        basis[i * dim + d] = pw;
        pw *= z;
      }
    }

    // Diffusion loadings from the Brownian covariation.
    for (std::size_t i = 0; i < n; ++i)
      target[i] = p_next[i] * ens.db[s * n + i] / dt_;
    fit.q = solver.fit(basis, target, n, spec.ridge, &ridge_bumps_);
    for (std::size_t i = 0; i < n; ++i)
      target[i] = P_next[i] * ens.db[s * n + i] / dt_;
    fit.Q = solver.fit(basis, target, n, spec.ridge, &ridge_bumps_);

    // Continuations, needed both for the drivers and to strip the diffusive
    // part from the jump-cell increments.
    std::vector<double> cont_p = solver.fit(basis, p_next, n, spec.ridge, &ridge_bumps_);
    std::vector<double> cont_P = solver.fit(basis, P_next, n, spec.ridge, &ridge_bumps_);

    // Jump loadings are fitted on the cells where the measure carries mass:
    // conditional on >= 1 jump of mark e, the continuation-stripped increment
    // is the jump of the adjoint, i.e. k (resp. K) up to O(dt) noise.
    fit.k.assign(marks.size(), std::vector<double>{});
    fit.K.assign(marks.size(), std::vector<double>{});
    std::vector<double> jbasis, jtarget_p, jtarget_P;
    for (std::size_t e = 0; e < marks.size(); ++e) {
      jbasis.clear();
      jtarget_p.clear();
      jtarget_P.clear();
      for (std::size_t i = 0; i < n; ++i) {
        const auto count = ens.n_jumps[(s * marks.size() + e) * n + i];
        if (count == 0) continue;
        const double x = ens.state(s, i);
        for (std::size_t d = 0; d < dim; ++d)
          jbasis.push_back(basis[i * dim + d]);
        jtarget_p.push_back((p_next[i] - fit_value(cont_p, fit, x)) /
                            static_cast<double>(count));
        jtarget_P.push_back((P_next[i] - fit_value(cont_P, fit, x)) /
                            static_cast<double>(count));
      }
      const std::size_t nj = jtarget_p.size();
      if (nj == 0) continue;  // no events: estimate stays identically zero
      // Thin samples get a stiffer ridge so the fit cannot blow up between
      // the few support points.
      const double jridge = nj < 8 * dim ? std::max(spec.ridge, 1e-3) : spec.ridge;
      fit.k[e] = solver.fit(jbasis, jtarget_p, nj, jridge, &ridge_bumps_);
      fit.K[e] = solver.fit(jbasis, jtarget_P, nj, jridge, &ridge_bumps_);
    }

    // First-order driver, explicit in the freshly regressed (q, k).
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ens.state(s, i);
      const double u = ens.u[s * n + i];
      const double q = fit_value(fit.q, fit, x);
      double jump_term = 0.0;
      for (std::size_t e = 0; e < marks.size(); ++e)
        jump_term += problem.jump_x(t, x, u, e) * fit_value(fit.k[e], fit, x) *
                     marks.weights[e];
      const double driver = problem.drift_x(t, x, u) * p_next[i] +
                            problem.diffusion_x(t, x, u) * q +
                            problem.running_cost_x(t, x, u) + jump_term;
      target[i] = p_next[i] + driver * dt_;
    }
    fit.p = solver.fit(basis, target, n, spec.ridge, &ridge_bumps_);
    for (std::size_t i = 0; i < n; ++i)
      p_here[i] = fit_value(fit.p, fit, ens.state(s, i));

    // Second-order driver.
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ens.state(s, i);
      const double u = ens.u[s * n + i];
      const double bx = problem.drift_x(t, x, u);
      const double sx = problem.diffusion_x(t, x, u);
      const double q = fit_value(fit.q, fit, x);
      const double Q = fit_value(fit.Q, fit, x);
      double jump_term = 0.0;
      for (std::size_t e = 0; e < marks.size(); ++e) {
        const double cx = problem.jump_x(t, x, u, e);
        const double cxx = problem.jump_xx(t, x, u, e);
        jump_term += ((cx * cx + 2.0 * cx) * fit_value(fit.K[e], fit, x) +
                      cxx * fit_value(fit.k[e], fit, x) + cx * cx * P_next[i]) *
                     marks.weights[e];
      }
      const double driver = 2.0 * bx * P_next[i] + 2.0 * sx * Q +
                            problem.running_cost_xx(t, x, u) +
                            problem.drift_xx(t, x, u) * p_here[i] +
                            problem.diffusion_xx(t, x, u) * q +
                            P_next[i] * sx * sx + jump_term;
      target[i] = P_next[i] + driver * dt_;
    }
    fit.P = solver.fit(basis, target, n, spec.ridge, &ridge_bumps_);
    for (std::size_t i = 0; i < n; ++i)
      P_here[i] = fit_value(fit.P, fit, ens.state(s, i));

    p_next = p_here;
    P_next = P_here;
  }
}

AdjointEval RegressionAdjoint::eval(double t, double x) const {
  AdjointEval out;
  out.n_marks = problem_->marks.size();
  const std::size_t M = steps_.size() - 1;
  const double clamped = std::min(std::max(t, 0.0), horizon_);
  std::size_t s = std::min(static_cast<std::size_t>(clamped / dt_ + 1e-9), M);

  if (s == M) {
    // terminal condition, exact per path
    out.p = problem_->terminal_cost_x(x);
    out.P = problem_->terminal_cost_xx(x);
    return out;
  }
  const StepFit& fit = steps_[s];
  out.p = fit_value(fit.p, fit, x);
  out.q = fit_value(fit.q, fit, x);
  out.P = fit_value(fit.P, fit, x);
  out.Q = fit_value(fit.Q, fit, x);
  for (std::size_t e = 0; e < out.n_marks; ++e) {
    out.k[e] = fit_value(fit.k[e], fit, x);
    out.K[e] = fit_value(fit.K[e], fit, x);
  }
  return out;
}

AdjointNorms adjoint_norms(const AdjointModel& adjoint, const ProblemDef& problem,
                           const StatePath& state, const TimeGrid& grid) {
  AdjointNorms out;
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    const bool jump_node = grid.jump_mark[i] >= 0;
    const double x = jump_node ? state.left[i] : state.values[i];
    const AdjointEval ad = adjoint.eval(grid.times[i], x);
    out.sup_p_sq = std::max(out.sup_p_sq, ad.p * ad.p);
    if (i + 1 < grid.n_points()) {
      const double dt = grid.dt(i);
      out.int_q_sq += ad.q * ad.q * dt;
      for (std::size_t e = 0; e < problem.marks.size(); ++e)
        out.int_k_sq += ad.k[e] * ad.k[e] * problem.marks.weights[e] * dt;
    }
  }
  return out;
}

namespace {

// Shared per-path machinery for the pairing identities and the reduced
// expansion: forward solve, spike, variations, adjoint reads on the base mesh.
struct SpikedPath {
  NoisePath noise;
  FeedbackSolve fs;
  ControlPath u_eps;
  StatePath x_hat;
  StatePath y_hat;
  std::vector<std::size_t> nodes;
};

SpikedPath build_spiked_path(const ProblemDef& problem, const FeedbackControl& fb,
                             const SpikeSpec& spike, std::size_t base_steps,
                             SeedSpec seed) {
  SpikedPath sp;
  sp.noise = sample_noise(seed, problem.marks, problem.horizon, base_steps);
  sp.fs = solve_with_feedback(problem, fb, sp.noise);

  double x_tbar = problem.x0;
  for (std::size_t i = 0; i < sp.noise.grid.n_points(); ++i) {
    if (sp.noise.grid.times[i] > spike.t_bar + 1e-12 * problem.horizon) break;
    x_tbar = sp.fs.state.values[i];
  }
  sp.u_eps = spike_control(sp.fs.control, spike, sp.noise, problem.controls, x_tbar);
  sp.x_hat = solve_first_variation(problem, sp.fs.control, sp.u_eps, sp.fs.state,
                                   sp.noise);
  sp.y_hat = solve_second_variation(problem, sp.fs.control, sp.u_eps, sp.fs.state,
                                    sp.x_hat, sp.noise);
  sp.nodes = base_node_indices(sp.noise.grid, base_steps);
  return sp;
}

}  // namespace

DualityReport duality_check(DualityIdentity which, const ProblemDef& problem,
                            const FeedbackControl& feedback, const SpikeSpec& spike,
                            const AdjointModel& adjoint, std::size_t n_paths,
                            std::size_t base_steps, std::uint64_t seed,
                            std::size_t n_threads) {
  std::vector<double> lhs(n_paths), rhs(n_paths), diff(n_paths);
  const double dt = problem.horizon / static_cast<double>(base_steps);

  parallel_for_paths(n_paths, n_threads, [&](std::size_t path) {
    const SpikedPath sp =
        build_spiked_path(problem, feedback, spike, base_steps, {seed, path});
    const MarkSpace& marks = problem.marks;

    double acc = 0.0;
    for (std::size_t s = 0; s < base_steps; ++s) {
      const std::size_t i = sp.nodes[s];
      const double t = sp.noise.grid.times[i];
      const double x = sp.fs.state.values[i];
      const double u = sp.fs.control.values[i];
      const double ue = sp.u_eps.values[i];
      const double xh = sp.x_hat.values[i];
      const double yh = sp.y_hat.values[i];
      const AdjointEval ad = adjoint.eval(t, x);
      const double db = problem.drift(t, x, ue) - problem.drift(t, x, u);
      const double ds = problem.diffusion(t, x, ue) - problem.diffusion(t, x, u);

      double term = 0.0;
      switch (which) {
        case DualityIdentity::px:
          term = ad.p * db + ad.q * ds - xh * problem.running_cost_x(t, x, u);
          break;
        case DualityIdentity::py: {
          const double dsx =
              problem.diffusion_x(t, x, ue) - problem.diffusion_x(t, x, u);
          double kterm = 0.0;
          for (std::size_t e = 0; e < marks.size(); ++e)
            kterm += 0.5 * problem.jump_xx(t, x, u, e) * ad.k[e] * marks.weights[e];
          term = 0.5 * problem.drift_xx(t, x, u) * ad.p * xh * xh +
                 0.5 * problem.diffusion_xx(t, x, u) * ad.q * xh * xh -
                 yh * problem.running_cost_x(t, x, u) + dsx * xh * ad.q +
                 kterm * xh * xh;
          break;
        }
        case DualityIdentity::pxx: {
          double kterm = 0.0;
          for (std::size_t e = 0; e < marks.size(); ++e)
            kterm += ad.k[e] * problem.jump_xx(t, x, u, e) * marks.weights[e];
          term = ad.P * ds * ds -
                 xh * xh *
                     (problem.running_cost_xx(t, x, u) +
                      ad.p * problem.drift_xx(t, x, u) +
                      ad.q * problem.diffusion_xx(t, x, u) + kterm) +
                 2.0 * ad.P * xh * db + 2.0 * ad.Q * xh * ds +
                 2.0 * ad.P * problem.diffusion_x(t, x, u) * xh * ds;
          break;
        }
      }
      acc += term * dt;
    }

    const double xT = sp.fs.state.values.back();
    double lhs_path = 0.0;
    switch (which) {
      case DualityIdentity::px:
        lhs_path = problem.terminal_cost_x(xT) * sp.x_hat.values.back();
        break;
      case DualityIdentity::py:
        lhs_path = problem.terminal_cost_x(xT) * sp.y_hat.values.back();
        break;
      case DualityIdentity::pxx:
        lhs_path = problem.terminal_cost_xx(xT) * sp.x_hat.values.back() *
                   sp.x_hat.values.back();
        break;
    }
    lhs[path] = lhs_path;
    rhs[path] = acc;
    diff[path] = lhs_path - acc;
  });

  DualityReport rep;
  const MeanSe ml = mean_se(lhs), mr = mean_se(rhs), md = mean_se(diff);
  rep.lhs = ml.mean;
  rep.lhs_se = ml.se;
  rep.rhs = mr.mean;
  rep.rhs_se = mr.se;
  rep.diff = md.mean;
  rep.diff_se = md.se;
  rep.dt = dt;
  rep.n_paths = n_paths;
  return rep;
}

ReducedExpansionPoint reduced_expansion_gap(const ProblemDef& problem,
                                            const FeedbackControl& feedback,
                                            SpikeSpec spike, double epsilon,
                                            const AdjointModel& adjoint,
                                            std::size_t n_paths,
                                            std::size_t base_steps,
                                            std::uint64_t seed,
                                            std::size_t n_threads) {
  spike.epsilon = epsilon;
  std::vector<double> j_hat(n_paths), reduced(n_paths), gap(n_paths);
  const double dt = problem.horizon / static_cast<double>(base_steps);

  parallel_for_paths(n_paths, n_threads, [&](std::size_t path) {
    const SpikedPath sp =
        build_spiked_path(problem, feedback, spike, base_steps, {seed, path});
    j_hat[path] = cost_expansion_path(problem, sp.fs.control, sp.u_eps, sp.fs.state,
                                      sp.x_hat, sp.y_hat, sp.noise.grid);
    double acc = 0.0;
    for (std::size_t s = 0; s < base_steps; ++s) {
      const std::size_t i = sp.nodes[s];
      const double t = sp.noise.grid.times[i];
      const double x = sp.fs.state.values[i];
      const double u = sp.fs.control.values[i];
      const double ue = sp.u_eps.values[i];
      const AdjointEval ad = adjoint.eval(t, x);
      const double db = problem.drift(t, x, ue) - problem.drift(t, x, u);
      const double ds = problem.diffusion(t, x, ue) - problem.diffusion(t, x, u);
      const double df =
          problem.running_cost(t, x, ue) - problem.running_cost(t, x, u);
      acc += (ad.p * db + ad.q * ds + df + 0.5 * ad.P * ds * ds) * dt;
    }
    reduced[path] = acc;
    gap[path] = j_hat[path] - acc;
  });

  ReducedExpansionPoint out;
  out.epsilon = epsilon;
  out.j_hat = mean_se(j_hat).mean;
  out.reduced = mean_se(reduced).mean;
  const MeanSe mg = mean_se(gap);
  out.gap_over_eps = mg.mean / epsilon;
  out.gap_se_over_eps = mg.se / epsilon;
  return out;
}

}  // namespace jumpctrl
