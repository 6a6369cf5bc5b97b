#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "jumpctrl/experiment.hpp"

using namespace jumpctrl;

namespace {

ExperimentConfig tiny_picard() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::picard;
  cfg.benchmark = "contraction";
  cfg.n_paths = 60;
  cfg.base_steps = 16;
  cfg.iterations = 6;
  return cfg;
}

}  // namespace

TEST_CASE("config text parses keys, sections, comments, and lists") {
  const std::string text =
      "# header comment\n"
      "kind = lemmas\n"
      "benchmark = nlq_jump\n"
      "[sampling]\n"
      "n_paths = 123   ; trailing comment\n"
      "base_steps = 32\n"
      "master_seed = 77\n"
      "epsilons = 0.25, 0.125, 0.0625\n"
      "p_moments = 2,4\n"
      "threads = 2\n";
  const ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.kind == ExperimentKind::lemmas);
  CHECK(cfg.benchmark == "nlq_jump");
  CHECK(cfg.n_paths == 123);
  CHECK(cfg.base_steps == 32);
  CHECK(cfg.master_seed == 77);
  REQUIRE(cfg.epsilons.size() == 3);
  CHECK(cfg.epsilons[1] == 0.125);
  CHECK(cfg.p_moments == std::vector<unsigned>{2, 4});
  CHECK(cfg.n_threads == 2);
}

TEST_CASE("config rejects unknown keys, bad values, and bad ladders") {
  CHECK_THROWS_AS(parse_config_text("kind = orders\nbenchmark = lq_jump\nwat = 1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("kind = wrong\nbenchmark = lq_jump\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("benchmark = lq_jump\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("kind = orders\n"), std::invalid_argument);
  CHECK_THROWS_AS(
      parse_config_text("kind = orders\nbenchmark = lq_jump\nn_paths = -3\n"),
      std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text(
                      "kind = orders\nbenchmark = lq_jump\nepsilons = 0.1,0.2\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      parse_config_text("kind = orders\nbenchmark = lq_jump\np_moments = 3\n"),
      std::invalid_argument);
}

TEST_CASE("config hash tracks semantic fields only") {
  const ExperimentConfig a = tiny_picard();
  ExperimentConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  b.master_seed += 1;
  CHECK(config_hash(a) != config_hash(b));
  ExperimentConfig c = a;
  c.out_dir = "/somewhere/else";  // presentation only
  CHECK(config_hash(a) == config_hash(c));
}

TEST_CASE("tables render as locale-independent csv") {
  Table t;
  t.name = "demo";
  t.columns = {"a", "b"};
  t.rows.push_back({1.5, 2.0});
  t.rows.push_back({0.25, -3.0});
  CHECK(t.to_csv() == "a,b\n1.5,2\n0.25,-3\n");
}

TEST_CASE("fixed point experiment passes on the contraction instance") {
  const ReportBundle bundle = run_experiment(tiny_picard());
  CHECK(bundle.all_passed());
  REQUIRE(!bundle.tables.empty());
  CHECK(bundle.tables[0].name == "picard_distances");
  CHECK(bundle.tables[0].rows.size() == 6);
  // Distances shrink monotonically at this horizon.
  CHECK(bundle.tables[0].rows[3][1] < bundle.tables[0].rows[1][1]);
}

TEST_CASE("identity suite passes at reduced scale") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::calculus;
  cfg.benchmark = "lq_jump";
  cfg.trials = 60;
  cfg.n_paths = 800;
  cfg.base_steps = 32;
  const ReportBundle bundle = run_experiment(cfg);
  CHECK(bundle.all_passed());
}

TEST_CASE("identity suite survives a zero jump rate override") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::calculus;
  cfg.benchmark = "lq_jump";
  cfg.trials = 40;
  cfg.n_paths = 300;
  cfg.base_steps = 16;
  cfg.jump_rate = 0.0;
  const ReportBundle bundle = run_experiment(cfg);
  CHECK(bundle.all_passed());
}

TEST_CASE("moment stability experiment stays bounded at reduced scale") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::lp_estimate;
  cfg.benchmark = "contraction";
  cfg.n_paths = 400;
  cfg.base_steps = 32;
  cfg.deltas = {0.4, 0.1};
  const ReportBundle bundle = run_experiment(cfg);
  CHECK(bundle.all_passed());
  REQUIRE(bundle.tables.size() == 1);
  CHECK(bundle.tables[0].rows.size() == 4);  // two deltas, two moments
}

TEST_CASE("unknown benchmark surfaces as an argument error") {
  ExperimentConfig cfg = tiny_picard();
  cfg.benchmark = "missing";
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("reruns and thread counts leave the tables byte-identical") {
  ExperimentConfig cfg = tiny_picard();
  cfg.n_threads = 1;
  const ReportBundle a = run_experiment(cfg);
  const ReportBundle b = run_experiment(cfg);
  cfg.n_threads = 3;
  const ReportBundle c = run_experiment(cfg);
  REQUIRE(a.tables.size() == b.tables.size());
  REQUIRE(a.tables.size() == c.tables.size());
  for (std::size_t i = 0; i < a.tables.size(); ++i) {
    CHECK(a.tables[i].to_csv() == b.tables[i].to_csv());
    CHECK(a.tables[i].to_csv() == c.tables[i].to_csv());
  }
  CHECK(a.hash == c.hash);
}

TEST_CASE("bundle writes tables and a versioned summary") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "jumpctrl_test_out";
  fs::remove_all(dir);
  const ReportBundle bundle = run_experiment(tiny_picard());
  write_bundle(bundle, dir.string());
  CHECK(fs::exists(dir / "picard_distances.csv"));
  REQUIRE(fs::exists(dir / "summary.json"));
  std::ifstream in(dir / "summary.json");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string json = buf.str();
  CHECK(json.find("\"schema_version\": 1") != std::string::npos);
  CHECK(json.find("\"experiment_id\": \"picard-contraction\"") != std::string::npos);
  CHECK(json.find("\"passed\": true") != std::string::npos);
  fs::remove_all(dir);
}
