#include "jumpctrl/benchmarks.hpp"

#include <cmath>
#include <stdexcept>

namespace jumpctrl {

namespace {

MarkSpace two_marks(double total_rate) {
  MarkSpace m;
  m.labels = {"small", "large"};
  m.weights = {total_rate * 0.4, total_rate * 0.6};
  return m;
}

ProblemDef::Coef constant(double v) {
  return [v](double, double, double) { return v; };
}

ProblemDef::JumpCoef jump_constant(double v) {
  return [v](double, double, double, std::size_t) { return v; };
}

}  // namespace

double lq_closed_form_cost(const LqParams& p, double kappa) {
  const double j = p.gamma - p.eta * kappa;
  const double h = 2.0 * (p.a - p.b * kappa) +
                   (p.c - p.d * kappa) * (p.c - p.d * kappa) +
                   p.total_rate * j * j;
  const double x2 = p.x0 * p.x0;
  const double psi = std::abs(h) > 1e-12 ? std::expm1(h * p.horizon) / h : p.horizon;
  return (p.qf + p.r * kappa * kappa) * x2 * psi +
         p.gT * x2 * std::exp(h * p.horizon);
}

double lq_best_gain(const LqParams& p) {
  const double lo_all = -2.0, hi_all = 4.0;
  const int n_scan = 240;
  double best = lo_all, best_cost = lq_closed_form_cost(p, lo_all);
  for (int i = 1; i <= n_scan; ++i) {
    const double k = lo_all + (hi_all - lo_all) * i / n_scan;
    const double c = lq_closed_form_cost(p, k);
    if (c < best_cost) {
      best_cost = c;
      best = k;
    }
  }
  double lo = best - (hi_all - lo_all) / n_scan;
  double hi = best + (hi_all - lo_all) / n_scan;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = lq_closed_form_cost(p, x1), f2 = lq_closed_form_cost(p, x2);
  for (int it = 0; it < 120; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = lq_closed_form_cost(p, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = lq_closed_form_cost(p, x2);
    }
  }
  return 0.5 * (lo + hi);
}

BenchmarkInstance lq_jump(const LqParams& p) {
  if (!(p.r > 0.0)) throw std::invalid_argument("lq_jump: r must be positive");
  if (p.qf < 0.0 || p.gT < 0.0)
    throw std::invalid_argument("lq_jump: qf and gT must be nonnegative");
  if (p.total_rate < 0.0)
    throw std::invalid_argument("lq_jump: total_rate must be nonnegative");
  if (!(p.horizon > 0.0))
    throw std::invalid_argument("lq_jump: horizon must be positive");

  BenchmarkInstance out;
  out.name = "lq_jump";
  out.summary =
      "affine jump diffusion, quadratic cost, constant-gain linear feedback";
  ProblemDef& pr = out.problem;
  pr.name = out.name;
  pr.horizon = p.horizon;
  pr.x0 = p.x0;
  pr.marks = p.total_rate > 0.0 ? two_marks(p.total_rate) : MarkSpace{};
  pr.controls = {-10.0, 10.0, {}};

  const double a = p.a, b = p.b, c = p.c, d = p.d;
  const double gamma = p.gamma, eta = p.eta;
  const double qf = p.qf, r = p.r, gT = p.gT;
  pr.drift = [a, b](double, double x, double u) { return a * x + b * u; };
  pr.drift_x = constant(a);
  pr.drift_xx = constant(0.0);
  pr.diffusion = [c, d](double, double x, double u) { return c * x + d * u; };
  pr.diffusion_x = constant(c);
  pr.diffusion_xx = constant(0.0);
  pr.jump = [gamma, eta](double, double x, double u, std::size_t) {
    return gamma * x + eta * u;
  };
  pr.jump_x = jump_constant(gamma);
  pr.jump_xx = jump_constant(0.0);
  pr.running_cost = [qf, r](double, double x, double u) {
    return qf * x * x + r * u * u;
  };
  pr.running_cost_x = [qf](double, double x, double) { return 2.0 * qf * x; };
  pr.running_cost_xx = constant(2.0 * qf);
  pr.terminal_cost = [gT](double x) { return gT * x * x; };
  pr.terminal_cost_x = [gT](double x) { return 2.0 * gT * x; };
  pr.terminal_cost_xx = [gT](double) { return 2.0 * gT; };

  const double gain = lq_best_gain(p);
  out.reference.rule = [gain](double, double x) { return -gain * x; };
  const double off = 1.25 * gain;
  out.detuned.rule = [off](double, double x) { return -off * x; };
  out.default_spike.t_bar = 0.25 * p.horizon;
  out.default_spike.epsilon = p.horizon / 64.0;
  out.default_spike.v = 1.5;
  out.oracle_note =
      "reference gain minimizes the closed-form constant-gain cost "
      "(scan plus golden-section polish); detuned rule is the gain times 1.25";
  return out;
}

BenchmarkInstance bangbang(double threshold) {
  BenchmarkInstance out;
  out.name = "bangbang";
  out.summary =
      "two-point control set, control in the diffusion, threshold feedback";
  ProblemDef& pr = out.problem;
  pr.name = out.name;
  pr.horizon = 1.0;
  pr.x0 = 0.5;
  pr.marks.labels = {"only"};
  pr.marks.weights = {1.0};
  pr.controls = {-1.0, 1.0, {-1.0, 1.0}};

  pr.drift = [](double, double, double u) { return u; };
  pr.drift_x = constant(0.0);
  pr.drift_xx = constant(0.0);
  pr.diffusion = [](double, double x, double u) { return 0.3 + 0.25 * x * u; };
  pr.diffusion_x = [](double, double, double u) { return 0.25 * u; };
  pr.diffusion_xx = constant(0.0);
  pr.jump = [](double, double x, double, std::size_t) { return 0.2 * x; };
  pr.jump_x = jump_constant(0.2);
  pr.jump_xx = jump_constant(0.0);
  pr.running_cost = [](double, double x, double) { return x * x; };
  pr.running_cost_x = [](double, double x, double) { return 2.0 * x; };
  pr.running_cost_xx = constant(2.0);
  pr.terminal_cost = [](double x) { return 0.2 * x * x; };
  pr.terminal_cost_x = [](double x) { return 0.4 * x; };
  pr.terminal_cost_xx = [](double) { return 0.4; };

  out.reference.rule = [threshold](double, double x) {
    return x > threshold ? -1.0 : 1.0;
  };
  out.detuned.rule = [threshold](double, double x) {
    return x > threshold ? 1.0 : -1.0;
  };
  out.default_spike.t_bar = 0.25;
  out.default_spike.epsilon = 1.0 / 64.0;
  out.default_spike.v_rule = [threshold](double x) {
    return x > threshold ? 1.0 : -1.0;
  };
  out.oracle_note =
      "threshold 0 is forced by the symmetry of the dynamics and cost; "
      "checked against shifted thresholds by common-noise simulation";
  return out;
}

BenchmarkInstance deterministic_adjoint(double f_slope, double g_slope) {
  BenchmarkInstance out;
  out.name = "deterministic_adjoint";
  out.summary =
      "state-independent coefficients, linear costs, adjoint known in closed form";
  ProblemDef& pr = out.problem;
  pr.name = out.name;
  pr.horizon = 1.0;
  pr.x0 = 0.5;
  pr.marks.labels = {"only"};
  pr.marks.weights = {1.0};
  pr.controls = {-2.0, 2.0, {}};

  pr.drift = [](double, double, double u) { return u; };
  pr.drift_x = constant(0.0);
  pr.drift_xx = constant(0.0);
  pr.diffusion = constant(0.4);
  pr.diffusion_x = constant(0.0);
  pr.diffusion_xx = constant(0.0);
  pr.jump = jump_constant(0.3);
  pr.jump_x = jump_constant(0.0);
  pr.jump_xx = jump_constant(0.0);
  pr.running_cost = [f_slope](double, double x, double) { return f_slope * x; };
  pr.running_cost_x = constant(f_slope);
  pr.running_cost_xx = constant(0.0);
  pr.terminal_cost = [g_slope](double x) { return g_slope * x; };
  pr.terminal_cost_x = [g_slope](double) { return g_slope; };
  pr.terminal_cost_xx = [](double) { return 0.0; };

  out.reference.rule = [](double, double) { return 0.0; };
  out.detuned.rule = [](double, double) { return 1.0; };
  out.default_spike.t_bar = 0.25;
  out.default_spike.epsilon = 1.0 / 64.0;
  out.default_spike.v = 1.0;
  out.oracle_note =
      "reference rule is the zero control; the first adjoint integrates to "
      "p_t = g_slope + f_slope (T - t) regardless of the control";
  return out;
}

BenchmarkInstance nlq_jump() {
  BenchmarkInstance out;
  out.name = "nlq_jump";
  out.summary =
      "smooth non-affine coefficients, quadratic cost, linear reference rule";
  ProblemDef& pr = out.problem;
  pr.name = out.name;
  pr.horizon = 1.0;
  pr.x0 = 1.0;
  pr.marks = two_marks(3.0);
  pr.controls = {-10.0, 10.0, {}};

  pr.drift = [](double, double x, double u) { return -0.5 * x + u; };
  pr.drift_x = constant(-0.5);
  pr.drift_xx = constant(0.0);
  pr.diffusion = [](double, double x, double u) {
    return 0.5 * std::tanh(x) + 0.4 * u;
  };
  pr.diffusion_x = [](double, double x, double) {
    const double th = std::tanh(x);
    return 0.5 * (1.0 - th * th);
  };
  pr.diffusion_xx = [](double, double x, double) {
    const double th = std::tanh(x);
    return -th * (1.0 - th * th);
  };
  const auto amp = [](std::size_t mark) { return mark == 0 ? 1.0 : 0.6; };
  pr.jump = [amp](double, double x, double u, std::size_t mark) {
    return amp(mark) * (0.3 * std::sin(x) + 0.2 * u);
  };
  pr.jump_x = [amp](double, double x, double, std::size_t mark) {
    return amp(mark) * 0.3 * std::cos(x);
  };
  pr.jump_xx = [amp](double, double x, double, std::size_t mark) {
    return -amp(mark) * 0.3 * std::sin(x);
  };
  pr.running_cost = [](double, double x, double u) {
    return 0.5 * x * x + 0.25 * u * u;
  };
  pr.running_cost_x = [](double, double x, double) { return x; };
  pr.running_cost_xx = constant(1.0);
  pr.terminal_cost = [](double x) { return 0.5 * x * x; };
  pr.terminal_cost_x = [](double x) { return x; };
  pr.terminal_cost_xx = [](double) { return 1.0; };

  out.reference.rule = [](double, double x) { return -0.4 * x; };
  out.detuned.rule = [](double, double x) { return -0.1 * x; };
  out.default_spike.t_bar = 0.25;
  out.default_spike.epsilon = 1.0 / 64.0;
  out.default_spike.v = 1.5;
  out.oracle_note =
      "reference rule is a fixed stabilizing gain, not an optimum; the "
      "instance exists to exercise the second-order terms";
  return out;
}

BenchmarkInstance contraction() {
  BenchmarkInstance out;
  out.name = "contraction";
  out.summary =
      "small horizon and small Lipschitz constants, iteration contracts";
  ProblemDef& pr = out.problem;
  pr.name = out.name;
  pr.horizon = 0.25;
  pr.x0 = 1.0;
  pr.marks.labels = {"only"};
  pr.marks.weights = {1.0};
  pr.controls = {-2.0, 2.0, {}};

  pr.drift = [](double, double x, double u) { return 0.3 * x + 0.1 * u; };
  pr.drift_x = constant(0.3);
  pr.drift_xx = constant(0.0);
  pr.diffusion = [](double, double x, double u) { return 0.2 * x + 0.1 * u; };
  pr.diffusion_x = constant(0.2);
  pr.diffusion_xx = constant(0.0);
  pr.jump = [](double, double x, double u, std::size_t) {
    return 0.1 * x + 0.05 * u;
  };
  pr.jump_x = jump_constant(0.1);
  pr.jump_xx = jump_constant(0.0);
  pr.running_cost = [](double, double x, double u) {
    return 0.25 * (x * x + u * u);
  };
  pr.running_cost_x = [](double, double x, double) { return 0.5 * x; };
  pr.running_cost_xx = constant(0.5);
  pr.terminal_cost = [](double x) { return 0.25 * x * x; };
  pr.terminal_cost_x = [](double x) { return 0.5 * x; };
  pr.terminal_cost_xx = [](double) { return 0.5; };

  out.reference.rule = [](double, double x) { return -0.2 * x; };
  out.detuned.rule = [](double, double) { return 0.5; };
  out.default_spike.t_bar = 0.0625;
  out.default_spike.epsilon = 0.25 / 64.0;
  out.default_spike.v = 0.5;
  out.oracle_note =
      "fixture for the fixed-point and stability experiments; the reference "
      "rule is a mild stabilizing gain, no optimality claim";
  return out;
}

std::vector<std::string> benchmark_names() {
  return {"lq_jump", "nlq_jump", "bangbang", "deterministic_adjoint",
          "contraction"};
}

BenchmarkInstance make_benchmark(const std::string& name) {
  // Frozen reference numbers: simulated cost under the stated seed schedule.
  // Regenerate with the oracle tool when an instance changes.
  if (name == "lq_jump") {
    BenchmarkInstance b = lq_jump(LqParams{});
    b.reference_seed = 9001;
    b.reference_paths = 20000;
    b.reference_steps = 256;
    b.reference_cost = 0.1391683362;
    b.reference_cost_se = 2.091e-04;
    // Constant-gain reference sits 1.45e-4 below exact optimality (measured,
    // step-count independent); the detuned rule reaches -1.4e-2. 0.2/64
    // covers the former 20x and stays 4x under the latter.
    b.mp_c_dt = 0.2;
    b.duality_c_dt = 0.5;
    return b;
  }
  if (name == "nlq_jump") {
    BenchmarkInstance b = nlq_jump();
    b.reference_seed = 9002;
    b.reference_paths = 20000;
    b.reference_steps = 256;
    b.reference_cost = 0.3587257811;
    b.reference_cost_se = 1.117e-03;
    b.mp_c_dt = 0.5;
    b.duality_c_dt = 0.5;
    return b;
  }
  if (name == "bangbang") {
    BenchmarkInstance b = bangbang(0.0);
    b.reference_seed = 9003;
    b.reference_paths = 20000;
    b.reference_steps = 256;
    b.reference_cost = 0.05206941376;
    b.reference_cost_se = 1.550e-04;
    // The inequality is tight on the switching curve, so the floor is the
    // regression bias of p near x = 0: measured -0.04..-0.10 for 32..128
    // steps at 1e4 paths. 8/steps covers the 32..64 step desk range with a
    // >= 2x margin while the flipped rule violates at -20 and below.
    b.mp_c_dt = 8.0;
    b.duality_c_dt = 0.5;
    return b;
  }
  if (name == "deterministic_adjoint") {
    BenchmarkInstance b = deterministic_adjoint(1.0, 0.7);
    b.reference_seed = 9004;
    b.reference_paths = 20000;
    b.reference_steps = 256;
    b.reference_cost = 0.85002264;
    b.reference_cost_se = 4.327e-03;
    b.mp_c_dt = 0.5;
    b.duality_c_dt = 0.5;
    return b;
  }
  if (name == "contraction") {
    BenchmarkInstance b = contraction();
    b.reference_seed = 9005;
    b.reference_paths = 20000;
    b.reference_steps = 64;
    b.reference_cost = 0.3607438627;
    b.reference_cost_se = 4.739e-04;
    b.mp_c_dt = 0.5;
    b.duality_c_dt = 0.5;
    return b;
  }
  throw std::invalid_argument("unknown benchmark: " + name);
}

}  // namespace jumpctrl
