// Acceptance gate: every primary claim of the toolkit, checked at full scale
// with frozen seeds and pinned tolerances. One line per criterion; the
// process exits nonzero if any line fails.

#include <cstdio>
#include <string>
#include <vector>

#include "jumpctrl/experiment.hpp"

using namespace jumpctrl;

namespace {

int g_failures = 0;
int g_total = 0;

void report(const std::string& scope, const ReportBundle& bundle) {
  for (const CriterionResult& c : bundle.criteria) {
    ++g_total;
    if (!c.passed) ++g_failures;
    std::printf("%s  %-28s %-42s %s\n", c.passed ? "PASS" : "FAIL",
                scope.c_str(), c.name.c_str(), c.detail.c_str());
    std::fflush(stdout);
  }
}

ExperimentConfig base_config(ExperimentKind kind, const std::string& benchmark) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.benchmark = benchmark;
  cfg.master_seed = 20260815;
  cfg.n_paths = 10000;
  cfg.base_steps = 64;
  return cfg;
}

void check_determinism() {
  // Same config, different worker counts: every table must be byte-identical.
  ExperimentConfig cfg = base_config(ExperimentKind::orders, "lq_jump");
  cfg.n_paths = 500;
  cfg.epsilons = {1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0};
  cfg.n_threads = 1;
  const ReportBundle a = run_experiment(cfg);
  cfg.n_threads = 4;
  const ReportBundle b = run_experiment(cfg);
  bool same = a.tables.size() == b.tables.size();
  if (same)
    for (std::size_t i = 0; i < a.tables.size(); ++i)
      if (a.tables[i].to_csv() != b.tables[i].to_csv()) same = false;
  ++g_total;
  if (!same) ++g_failures;
  std::printf("%s  %-28s %-42s %s\n", same ? "PASS" : "FAIL", "meta",
              "tables_thread_invariant",
              "csv bytes for 1 vs 4 worker threads");
  std::fflush(stdout);
}

}  // namespace

int main() {
  std::printf("== identity suite ==\n");
  {
    ExperimentConfig cfg = base_config(ExperimentKind::calculus, "lq_jump");
    cfg.trials = 1000;
    report("calculus/lq_jump", run_experiment(cfg));
  }

  std::printf("== spike variation orders ==\n");
  {
    // The order ladders need room below the largest epsilon: finer base grid.
    ExperimentConfig cfg = base_config(ExperimentKind::orders, "lq_jump");
    cfg.base_steps = 1024;
    report("orders/lq_jump", run_experiment(cfg));
  }

  std::printf("== variational expansions ==\n");
  {
    ExperimentConfig cfg = base_config(ExperimentKind::lemmas, "nlq_jump");
    cfg.base_steps = 1024;
    report("lemmas/nlq_jump", run_experiment(cfg));
  }

  std::printf("== adjoint pairing identities ==\n");
  report("duality/lq_jump",
         run_experiment(base_config(ExperimentKind::duality, "lq_jump")));
  report("duality/deterministic",
         run_experiment(
             base_config(ExperimentKind::duality, "deterministic_adjoint")));

  std::printf("== variational inequality ==\n");
  report("mp-check/lq_jump",
         run_experiment(base_config(ExperimentKind::mp_check, "lq_jump")));
  report("mp-check/bangbang",
         run_experiment(base_config(ExperimentKind::mp_check, "bangbang")));

  std::printf("== solution map ==\n");
  {
    ExperimentConfig cfg = base_config(ExperimentKind::picard, "contraction");
    cfg.n_paths = 3000;
    report("picard/contraction", run_experiment(cfg));
  }
  {
    ExperimentConfig cfg = base_config(ExperimentKind::lp_estimate, "contraction");
    cfg.n_paths = 8000;
    report("lp-estimate/contraction", run_experiment(cfg));
  }

  std::printf("== output determinism ==\n");
  check_determinism();

  std::printf("%d/%d criteria passed\n", g_total - g_failures, g_total);
  return g_failures == 0 ? 0 : 1;
}
