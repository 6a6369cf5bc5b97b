// Reference-value generator for the benchmark registry. Prints the
// closed-form quantities and common-random-number Monte Carlo estimates that
// back the frozen constants; rerun after touching any benchmark definition.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jumpctrl/adjoint.hpp"
#include "jumpctrl/benchmarks.hpp"
#include "jumpctrl/forward.hpp"
#include "jumpctrl/jump_driver.hpp"
#include "jumpctrl/max_principle.hpp"
#include "jumpctrl/parallel.hpp"
#include "jumpctrl/stats.hpp"

using namespace jumpctrl;

namespace {

MeanSe mc_cost(const ProblemDef& problem, const FeedbackControl& rule,
               std::uint64_t seed, std::size_t n_paths, std::size_t steps,
               std::size_t threads) {
  std::vector<double> totals(n_paths);
  parallel_for_paths(n_paths, threads, [&](std::size_t path) {
    const NoisePath noise =
        sample_noise({seed, path}, problem.marks, problem.horizon, steps);
    const FeedbackSolve fs = solve_with_feedback(problem, rule, noise);
    totals[path] = cost(problem, fs.state, fs.control, noise.grid).total;
  });
  return mean_se(totals);
}

void print_mp(const char* label, const ProblemDef& problem,
              const FeedbackControl& rule, const AdjointModel& adjoint,
              const BenchmarkInstance& bench, std::size_t n_paths,
              std::size_t steps, std::uint64_t seed, std::size_t threads) {
  const std::vector<double> v_grid = problem.controls.scan_grid(41);
  const MpReport rep = mp_deficiency(problem, rule, adjoint, v_grid,
                                     bench.mp_c_dt, n_paths, steps, seed, threads);
  std::printf("  mp %-9s global_min % .6e  tol %.6e  viol %.4f  %s\n", label,
              rep.global_min, rep.tolerance, rep.violation_fraction,
              rep.passed ? "pass" : "fail");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmark oracle"};
  std::size_t n_paths = 20000;
  std::size_t threads = 1;
  std::string only;
  bool with_mp = false;
  app.add_option("--paths", n_paths, "Monte Carlo paths");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--benchmark", only, "restrict to one benchmark");
  app.add_flag("--mp", with_mp, "also print deficiency calibration");
  CLI11_PARSE(app, argc, argv);

  const LqParams lq;
  const double kappa = lq_best_gain(lq);
  std::printf("lq closed form: best gain %.10g  cost %.10g\n", kappa,
              lq_closed_form_cost(lq, kappa));
  std::printf("lq detuned    : gain %.10g  cost %.10g\n", 1.25 * kappa,
              lq_closed_form_cost(lq, 1.25 * kappa));

  for (const std::string& name : benchmark_names()) {
    if (!only.empty() && name != only) continue;
    const BenchmarkInstance bench = make_benchmark(name);
    const std::size_t steps = bench.reference_steps;
    std::printf("%s (seed %llu, %zu paths, %zu steps)\n", name.c_str(),
                static_cast<unsigned long long>(bench.reference_seed), n_paths,
                steps);
    const MeanSe ref = mc_cost(bench.problem, bench.reference,
                               bench.reference_seed, n_paths, steps, threads);
    const MeanSe det = mc_cost(bench.problem, bench.detuned,
                               bench.reference_seed, n_paths, steps, threads);
    std::printf("  cost reference %.10g  se %.3e\n", ref.mean, ref.se);
    std::printf("  cost detuned   %.10g  se %.3e  (gap %.3e)\n", det.mean,
                det.se, det.mean - ref.mean);
    if (with_mp) {
      try {
        const ClosedFormAdjoint cf(bench.problem, bench.reference, steps);
        print_mp("reference", bench.problem, bench.reference, cf, bench,
                 n_paths / 2, steps / 2, bench.reference_seed, threads);
        const ClosedFormAdjoint cfd(bench.problem, bench.detuned, steps);
        print_mp("detuned", bench.problem, bench.detuned, cfd, bench,
                 n_paths / 2, steps / 2, bench.reference_seed, threads);
      } catch (const UnsupportedProblemError&) {
        const BaseMeshEnsemble ens =
            collect_base_mesh(bench.problem, bench.reference, n_paths / 2,
                              steps / 4, bench.reference_seed + 1, threads);
        const RegressionAdjoint reg(bench.problem, ens, RegressionSpec{});
        print_mp("reference", bench.problem, bench.reference, reg, bench,
                 n_paths / 2, steps / 4, bench.reference_seed, threads);
        const BaseMeshEnsemble ensd =
            collect_base_mesh(bench.problem, bench.detuned, n_paths / 2,
                              steps / 4, bench.reference_seed + 1, threads);
        const RegressionAdjoint regd(bench.problem, ensd, RegressionSpec{});
        print_mp("detuned", bench.problem, bench.detuned, regd, bench,
                 n_paths / 2, steps / 4, bench.reference_seed, threads);
      }
    }
  }
  return 0;
}
