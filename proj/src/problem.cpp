#include "jumpctrl/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "jumpctrl/rng.hpp"

namespace jumpctrl {

bool ControlSet::contains(double v) const {
  if (!std::isfinite(v)) return false;
  if (discrete()) {
    for (double p : points)
      if (std::abs(v - p) <= 1e-12 * std::max(1.0, std::abs(p))) return true;
    return false;
  }
  const double tol = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  return v >= lo - tol && v <= hi + tol;
}

double ControlSet::clamp(double v) const {
  if (discrete()) {
    double best = points.front();
    for (double p : points)
      if (std::abs(v - p) < std::abs(v - best)) best = p;
    return best;
  }
  return std::min(std::max(v, lo), hi);
}

std::vector<double> ControlSet::scan_grid(std::size_t n) const {
  if (discrete()) return points;
  if (n < 2) throw std::invalid_argument("ControlSet: scan grid needs at least 2 points");
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return grid;
}

void ControlSet::validate() const {
  if (discrete()) {
    for (double p : points)
      if (!std::isfinite(p)) throw std::invalid_argument("ControlSet: non-finite point");
    return;
  }
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
    throw std::invalid_argument("ControlSet: invalid interval");
}

namespace {

struct LatticeSample {
  double t, x, u;
};

std::vector<LatticeSample> draw_lattice(const ProblemDef& prob,
                                        const LatticeSpec& spec, double x_scale,
                                        std::uint64_t stream) {
  PathRng rng({spec.seed, stream});
  std::vector<LatticeSample> out;
  out.reserve(spec.n_t * spec.n_x * spec.n_u);
  for (std::size_t it = 0; it < spec.n_t; ++it)
    for (std::size_t ix = 0; ix < spec.n_x; ++ix)
      for (std::size_t iu = 0; iu < spec.n_u; ++iu) {
        LatticeSample s;
        s.t = prob.horizon * rng.uniform();
        s.x = x_scale * (2.0 * rng.uniform() - 1.0);
        if (prob.controls.discrete()) {
          const auto& pts = prob.controls.points;
          s.u = pts[std::min(pts.size() - 1,
                             static_cast<std::size_t>(rng.uniform() * pts.size()))];
        } else {
          s.u = prob.controls.lo +
                (prob.controls.hi - prob.controls.lo) * rng.uniform();
        }
        out.push_back(s);
      }
  return out;
}

struct SymbolMax {
  std::string name;
  double moderate = 0.0;
  double wide = 0.0;
};

// a value grew materially between the moderate and wide lattice
bool grew(const SymbolMax& m) { return m.wide > 1.5 * m.moderate + 1e-9; }

}  // namespace

ValidationReport validate(const ProblemDef& problem, const LatticeSpec& lattice) {
  problem.controls.validate();
  problem.marks.validate();
  ValidationReport rep;

  const auto moderate = draw_lattice(problem, lattice, lattice.x_scale, 1);
  const auto wide =
      draw_lattice(problem, lattice, lattice.x_scale * lattice.growth_factor, 2);

  auto note = [&rep](const std::string& msg) { rep.failures.push_back(msg); };
  auto record = [&rep, &note](double v, const char* what) {
    if (!std::isfinite(v)) {
      if (rep.finite_ok) note(std::string("non-finite value from ") + what);
      rep.finite_ok = false;
      return 0.0;
    }
    return std::abs(v);
  };

  // Linear growth of (b, sigma, c): fit C = max |coef| / (1+|x|+|u|) on each
  // lattice; C must not keep growing as the lattice widens.
  SymbolMax growth{"growth", 0.0, 0.0};
  SymbolMax d1[3] = {{"drift_x", 0, 0}, {"diffusion_x", 0, 0}, {"jump_x", 0, 0}};
  SymbolMax d2[5] = {{"drift_xx", 0, 0},
                     {"diffusion_xx", 0, 0},
                     {"jump_xx", 0, 0},
                     {"running_cost_xx", 0, 0},
                     {"terminal_cost_xx", 0, 0}};

  auto scan = [&](const std::vector<LatticeSample>& samples, bool is_wide) {
    for (const auto& s : samples) {
      const double denom = 1.0 + std::abs(s.x) + std::abs(s.u);
      double coef = std::max(record(problem.drift(s.t, s.x, s.u), "drift"),
                             record(problem.diffusion(s.t, s.x, s.u), "diffusion"));
      double cx = 0.0, cxx = 0.0;
      for (std::size_t e = 0; e < problem.marks.size(); ++e) {
        coef = std::max(coef, record(problem.jump(s.t, s.x, s.u, e), "jump"));
        cx = std::max(cx, record(problem.jump_x(s.t, s.x, s.u, e), "jump_x"));
        cxx = std::max(cxx, record(problem.jump_xx(s.t, s.x, s.u, e), "jump_xx"));
      }
      double* growth_slot = is_wide ? &growth.wide : &growth.moderate;
      *growth_slot = std::max(*growth_slot, coef / denom);

      const double first[3] = {record(problem.drift_x(s.t, s.x, s.u), "drift_x"),
                               record(problem.diffusion_x(s.t, s.x, s.u), "diffusion_x"),
                               cx};
      const double second[5] = {
          record(problem.drift_xx(s.t, s.x, s.u), "drift_xx"),
          record(problem.diffusion_xx(s.t, s.x, s.u), "diffusion_xx"), cxx,
          record(problem.running_cost_xx(s.t, s.x, s.u), "running_cost_xx"),
          record(problem.terminal_cost_xx(s.x), "terminal_cost_xx")};
      for (int i = 0; i < 3; ++i) {
        double* slot = is_wide ? &d1[i].wide : &d1[i].moderate;
        *slot = std::max(*slot, first[i]);
      }
      for (int i = 0; i < 5; ++i) {
        double* slot = is_wide ? &d2[i].wide : &d2[i].moderate;
        *slot = std::max(*slot, second[i]);
      }
    }
  };
  scan(moderate, false);
  scan(wide, true);

  rep.growth_constant = growth.wide;
  if (grew(growth)) {
    rep.growth_ok = false;
    note("linear-growth constant keeps increasing with the lattice");
  }
  for (const auto& m : d1) {
    rep.max_first_derivative = std::max(rep.max_first_derivative, m.wide);
    if (grew(m)) {
      rep.derivative_bounds_ok = false;
      note(m.name + " grows with the lattice (unbounded)");
    }
  }
  for (const auto& m : d2) {
    rep.max_second_derivative = std::max(rep.max_second_derivative, m.wide);
    if (grew(m)) {
      rep.derivative_bounds_ok = false;
      note(m.name + " grows with the lattice (unbounded)");
    }
  }

  // Finite-difference audit of the supplied derivatives, moderate lattice only
  // (trajectories live there; wide-lattice FD steps would inflate truncation).
  auto check_pair = [&](double supplied, double fd, const char* what) {
    if (!std::isfinite(supplied) || !std::isfinite(fd)) {
      if (rep.finite_ok) note(std::string("non-finite value from ") + what);
      rep.finite_ok = false;
      return;
    }
    const double err = std::abs(supplied - fd);
    const double tol = std::max(1e-6, 1e-4 * std::abs(supplied));
    rep.worst_fd_error = std::max(rep.worst_fd_error, err);
    if (err > tol) {
      if (rep.derivative_consistency_ok)
        note(std::string(what) + " disagrees with finite differences");
      rep.derivative_consistency_ok = false;
    }
  };
  for (const auto& s : moderate) {
    const double h1 = 1e-5 * (1.0 + std::abs(s.x));
    const double h2 = 3e-4 * (1.0 + std::abs(s.x));
    auto fd1 = [&](const ProblemDef::Coef& f) {
      return (f(s.t, s.x + h1, s.u) - f(s.t, s.x - h1, s.u)) / (2.0 * h1);
    };
    auto fd2 = [&](const ProblemDef::Coef& f) {
      return (f(s.t, s.x + h2, s.u) - 2.0 * f(s.t, s.x, s.u) + f(s.t, s.x - h2, s.u)) /
             (h2 * h2);
    };
    check_pair(problem.drift_x(s.t, s.x, s.u), fd1(problem.drift), "drift_x");
    check_pair(problem.diffusion_x(s.t, s.x, s.u), fd1(problem.diffusion),
               "diffusion_x");
    check_pair(problem.running_cost_x(s.t, s.x, s.u), fd1(problem.running_cost),
               "running_cost_x");
    check_pair(problem.drift_xx(s.t, s.x, s.u), fd2(problem.drift), "drift_xx");
    check_pair(problem.diffusion_xx(s.t, s.x, s.u), fd2(problem.diffusion),
               "diffusion_xx");
    check_pair(problem.running_cost_xx(s.t, s.x, s.u), fd2(problem.running_cost),
               "running_cost_xx");
    for (std::size_t e = 0; e < problem.marks.size(); ++e) {
      auto ce = [&](double t, double x, double u) { return problem.jump(t, x, u, e); };
      ProblemDef::Coef cf = ce;
      check_pair(problem.jump_x(s.t, s.x, s.u, e), fd1(cf), "jump_x");
      check_pair(problem.jump_xx(s.t, s.x, s.u, e), fd2(cf), "jump_xx");
    }
    check_pair(problem.terminal_cost_x(s.x),
               (problem.terminal_cost(s.x + h1) - problem.terminal_cost(s.x - h1)) /
                   (2.0 * h1),
               "terminal_cost_x");
    check_pair(problem.terminal_cost_xx(s.x),
               (problem.terminal_cost(s.x + h2) - 2.0 * problem.terminal_cost(s.x) +
                problem.terminal_cost(s.x - h2)) /
                   (h2 * h2),
               "terminal_cost_xx");
  }

  rep.passed = rep.finite_ok && rep.growth_ok && rep.derivative_bounds_ok &&
               rep.derivative_consistency_ok;
  return rep;
}

}  // namespace jumpctrl
