#include <doctest.h>

#include <cmath>

#include "jumpctrl/adjoint.hpp"
#include "jumpctrl/benchmarks.hpp"
#include "jumpctrl/max_principle.hpp"

using namespace jumpctrl;

namespace {

ProblemDef constant_coef_problem() {
  ProblemDef pr;
  pr.name = "constant";
  pr.horizon = 1.0;
  pr.x0 = 0.0;
  pr.controls = {-10.0, 10.0, {}};
  pr.drift = [](double, double, double) { return 3.0; };
  pr.drift_x = pr.drift_xx = [](double, double, double) { return 0.0; };
  pr.diffusion = [](double, double, double) { return 4.0; };
  pr.diffusion_x = pr.diffusion_xx = [](double, double, double) { return 0.0; };
  pr.jump = pr.jump_x = pr.jump_xx =
      [](double, double, double, std::size_t) { return 0.0; };
  pr.running_cost = [](double, double, double) { return 5.0; };
  pr.running_cost_x = pr.running_cost_xx = [](double, double, double) { return 0.0; };
  pr.terminal_cost = pr.terminal_cost_x = pr.terminal_cost_xx =
      [](double) { return 0.0; };
  return pr;
}

}  // namespace

TEST_CASE("hamiltonian is the pairing of the coefficients") {
  const ProblemDef pr = constant_coef_problem();
  CHECK(hamiltonian(pr, 0.1, 0.2, 0.3, 1.0, 2.0) ==
        doctest::Approx(3.0 + 8.0 + 5.0).epsilon(1e-15));
  // Linear in (p, q) with the running cost as offset.
  const double h00 = hamiltonian(pr, 0.0, 0.0, 0.0, 0.0, 0.0);
  const double hp = hamiltonian(pr, 0.0, 0.0, 0.0, 2.0, 0.0);
  const double hq = hamiltonian(pr, 0.0, 0.0, 0.0, 0.0, 3.0);
  CHECK(h00 == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(hp - h00 == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(hq - h00 == doctest::Approx(12.0).epsilon(1e-15));
}

TEST_CASE("deficiency at the candidate control itself is exactly zero") {
  const BenchmarkInstance bench = make_benchmark("deterministic_adjoint");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 32);
  // The reference rule is constant zero, so a one-point grid at 0 scans u only.
  const MpReport rep = mp_deficiency(bench.problem, bench.reference, cf, {0.0},
                                     0.5, 200, 32, 3, 1);
  CHECK(rep.global_min == 0.0);
  CHECK(rep.mean_path_min == 0.0);
  CHECK(rep.violation_fraction == 0.0);
  CHECK(rep.passed);
}

TEST_CASE("deficiency sweep validates its control grid") {
  const BenchmarkInstance bench = make_benchmark("deterministic_adjoint");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 16);
  CHECK_THROWS_AS(
      mp_deficiency(bench.problem, bench.reference, cf, {}, 0.5, 10, 16, 1, 1),
      std::invalid_argument);
  CHECK_THROWS_AS(mp_deficiency(bench.problem, bench.reference, cf, {50.0}, 0.5,
                                10, 16, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("oracle gain passes and the detuned gain fails the inequality") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const std::vector<double> v_grid = bench.problem.controls.scan_grid(41);
  const ClosedFormAdjoint ref_adj(bench.problem, bench.reference, 64);
  const MpReport ref = mp_deficiency(bench.problem, bench.reference, ref_adj,
                                     v_grid, bench.mp_c_dt, 1500, 64, 13, 1);
  CHECK(ref.passed);
  const ClosedFormAdjoint det_adj(bench.problem, bench.detuned, 64);
  const MpReport det = mp_deficiency(bench.problem, bench.detuned, det_adj,
                                     v_grid, bench.mp_c_dt, 1500, 64, 13, 1);
  CHECK(!det.passed);
  CHECK(det.global_min < ref.global_min);
}

TEST_CASE("localized perturbation equal to the control scores zero") {
  const BenchmarkInstance bench = make_benchmark("deterministic_adjoint");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 32);
  // w equals the constant reference value, so the perturbation is invisible.
  const MeanSe on = localization_check(bench.problem, bench.reference, cf, 0.25,
                                       0.0, [](double) { return true; }, 300, 32, 9);
  CHECK(on.mean == 0.0);
  CHECK(on.se == 0.0);
  // Empty set: v = u everywhere regardless of w.
  const MeanSe off = localization_check(bench.problem, bench.reference, cf, 0.25,
                                        1.0, [](double) { return false; }, 300,
                                        32, 9);
  CHECK(off.mean == 0.0);
}

TEST_CASE("localized deficiency is nonnegative at the oracle gain") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 64);
  const double x0 = bench.problem.x0;
  const MeanSe loc = localization_check(bench.problem, bench.reference, cf, 0.25,
                                        1.0, [x0](double x) { return x > x0; },
                                        2000, 64, 17);
  CHECK(loc.mean >= -3.0 * loc.se - 0.01);
}
