#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace jumpctrl {

enum class ExperimentKind {
  calculus,
  orders,
  lemmas,
  duality,
  mp_check,
  picard,
  lp_estimate,
};

// Kind names as written in config files: calculus, orders, lemmas, duality,
// mp-check, picard, lp-estimate.
ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::calculus;
  std::string benchmark;
  double horizon = 0.0;  // 0 keeps the benchmark's horizon
  std::size_t base_steps = 64;
  std::size_t n_paths = 10000;
  std::uint64_t master_seed = 20260815;
  std::vector<double> epsilons;  // empty: dyadic, horizon/4 down to 2 cells
  std::vector<unsigned> p_moments = {2, 4};
  std::size_t v_grid = 41;
  double jump_rate = -1.0;  // >= 0 rescales the mark intensities (0 = none)
  std::size_t trials = 1000;      // pathwise identity repetitions
  std::size_t iterations = 10;    // fixed-point iterations
  std::vector<double> deltas = {0.4, 0.2, 0.1, 0.05, 0.025};
  std::size_t n_threads = 1;
  std::string out_dir = "out";

  void validate() const;  // throws std::invalid_argument
};

// key = value lines with optional [section] grouping (sections are cosmetic,
// the key namespace is flat). '#' and ';' start comments. Unknown keys are
// rejected. Lists are comma separated.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical one-line-per-field rendering; the hash is FNV-1a over it, so two
// configs hash equal iff every field that affects results is equal.
std::string canonical_config(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  // Header row plus one comma-separated line per row; shortest round-trip
  // number rendering, independent of locale.
  std::string to_csv() const;
};

struct CriterionResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ReportBundle {
  std::string experiment_id;
  ExperimentConfig config;
  std::uint64_t hash = 0;
  double wall_seconds = 0.0;
  std::vector<CriterionResult> criteria;
  std::vector<Table> tables;

  bool all_passed() const;
  std::string summary_json() const;  // schema-versioned
};

ReportBundle run_experiment(const ExperimentConfig& config);

// Writes <table>.csv per table plus summary.json into out_dir (created when
// missing).
void write_bundle(const ReportBundle& bundle, const std::string& out_dir);

}  // namespace jumpctrl
