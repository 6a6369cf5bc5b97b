#include "jumpctrl/jumpctrl.h"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "jumpctrl/adjoint.hpp"
#include "jumpctrl/benchmarks.hpp"
#include "jumpctrl/experiment.hpp"
#include "jumpctrl/forward.hpp"

struct jc_experiment {
  jumpctrl::ExperimentConfig config;
  bool ran = false;
  jumpctrl::ReportBundle bundle;
  std::string summary;  // cached dump, returned by pointer
};

namespace {

thread_local std::string g_last_error;

jc_status fail(jc_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Translates exceptions at the boundary; nothing C++ may cross it.
template <typename Fn>
jc_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const jumpctrl::DivergenceError& e) {
    return fail(JC_ERR_DIVERGED, e.what());
  } catch (const jumpctrl::UnsupportedProblemError& e) {
    return fail(JC_ERR_UNSUPPORTED, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(JC_ERR_INVALID, e.what());
  } catch (const std::exception& e) {
    return fail(JC_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(JC_ERR_RUNTIME, "unknown failure");
  }
}

const std::vector<std::string>& benchmark_registry() {
  static const std::vector<std::string> names = jumpctrl::benchmark_names();
  return names;
}

const std::vector<std::string>& summary_registry() {
  static const std::vector<std::string> summaries = [] {
    std::vector<std::string> out;
    for (const std::string& name : jumpctrl::benchmark_names())
      out.push_back(jumpctrl::make_benchmark(name).summary);
    return out;
  }();
  return summaries;
}

constexpr const char* kKindNames[] = {"calculus", "orders",  "lemmas",
                                      "duality",  "mp-check", "picard",
                                      "lp-estimate"};

}  // namespace

extern "C" {

const char* jc_version(void) { return "1.0.0"; }

const char* jc_last_error(void) { return g_last_error.c_str(); }

jc_status jc_experiment_from_file(const char* path, jc_experiment** out) {
  if (path == nullptr || out == nullptr)
    return fail(JC_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&]() -> jc_status {
    auto handle = std::make_unique<jc_experiment>();
    try {
      handle->config = jumpctrl::parse_config_file(path);
    } catch (const std::runtime_error& e) {
      return fail(JC_ERR_IO, e.what());
    }
    *out = handle.release();
    return JC_OK;
  });
}

jc_status jc_experiment_from_text(const char* text, jc_experiment** out) {
  if (text == nullptr || out == nullptr)
    return fail(JC_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&]() -> jc_status {
    auto handle = std::make_unique<jc_experiment>();
    handle->config = jumpctrl::parse_config_text(text);
    *out = handle.release();
    return JC_OK;
  });
}

jc_status jc_experiment_set_seed(jc_experiment* exp, uint64_t seed) {
  if (exp == nullptr) return fail(JC_ERR_INVALID, "null handle");
  exp->config.master_seed = seed;
  return JC_OK;
}

jc_status jc_experiment_set_paths(jc_experiment* exp, size_t n_paths) {
  if (exp == nullptr) return fail(JC_ERR_INVALID, "null handle");
  if (n_paths == 0) return fail(JC_ERR_INVALID, "n_paths must be positive");
  exp->config.n_paths = n_paths;
  return JC_OK;
}

jc_status jc_experiment_set_threads(jc_experiment* exp, size_t n_threads) {
  if (exp == nullptr) return fail(JC_ERR_INVALID, "null handle");
  if (n_threads == 0) return fail(JC_ERR_INVALID, "threads must be positive");
  exp->config.n_threads = n_threads;
  return JC_OK;
}

jc_status jc_experiment_set_out_dir(jc_experiment* exp, const char* dir) {
  if (exp == nullptr || dir == nullptr)
    return fail(JC_ERR_INVALID, "null argument");
  exp->config.out_dir = dir;
  return JC_OK;
}

jc_status jc_experiment_run(jc_experiment* exp) {
  if (exp == nullptr) return fail(JC_ERR_INVALID, "null handle");
  return guarded([&]() -> jc_status {
    exp->bundle = jumpctrl::run_experiment(exp->config);
    exp->summary = exp->bundle.summary_json();
    exp->ran = true;
    return JC_OK;
  });
}

jc_status jc_experiment_passed(const jc_experiment* exp, int* passed) {
  if (exp == nullptr || passed == nullptr)
    return fail(JC_ERR_INVALID, "null argument");
  if (!exp->ran) return fail(JC_ERR_INVALID, "experiment has not run");
  *passed = exp->bundle.all_passed() ? 1 : 0;
  return JC_OK;
}

const char* jc_experiment_summary_json(const jc_experiment* exp) {
  if (exp == nullptr || !exp->ran) return nullptr;
  return exp->summary.c_str();
}

jc_status jc_experiment_table_count(const jc_experiment* exp, size_t* count) {
  if (exp == nullptr || count == nullptr)
    return fail(JC_ERR_INVALID, "null argument");
  if (!exp->ran) return fail(JC_ERR_INVALID, "experiment has not run");
  *count = exp->bundle.tables.size();
  return JC_OK;
}

const char* jc_experiment_table_name(const jc_experiment* exp, size_t index) {
  if (exp == nullptr || !exp->ran || index >= exp->bundle.tables.size())
    return nullptr;
  return exp->bundle.tables[index].name.c_str();
}

const char* jc_experiment_table_csv(const jc_experiment* exp, size_t index) {
  if (exp == nullptr || !exp->ran || index >= exp->bundle.tables.size())
    return nullptr;
  // One render buffer per thread; valid until the next table_csv call.
  static thread_local std::string csv;
  csv = exp->bundle.tables[index].to_csv();
  return csv.c_str();
}

jc_status jc_experiment_write(const jc_experiment* exp, const char* out_dir) {
  if (exp == nullptr) return fail(JC_ERR_INVALID, "null handle");
  if (!exp->ran) return fail(JC_ERR_INVALID, "experiment has not run");
  const std::string dir =
      out_dir != nullptr ? std::string(out_dir) : exp->config.out_dir;
  if (dir.empty()) return fail(JC_ERR_INVALID, "no output directory given");
  return guarded([&]() -> jc_status {
    try {
      jumpctrl::write_bundle(exp->bundle, dir);
    } catch (const std::runtime_error& e) {
      return fail(JC_ERR_IO, e.what());
    }
    return JC_OK;
  });
}

void jc_experiment_destroy(jc_experiment* exp) { delete exp; }

size_t jc_benchmark_count(void) { return benchmark_registry().size(); }

const char* jc_benchmark_name(size_t index) {
  const auto& names = benchmark_registry();
  return index < names.size() ? names[index].c_str() : nullptr;
}

const char* jc_benchmark_summary(size_t index) {
  const auto& summaries = summary_registry();
  return index < summaries.size() ? summaries[index].c_str() : nullptr;
}

size_t jc_kind_count(void) { return sizeof(kKindNames) / sizeof(kKindNames[0]); }

const char* jc_kind_name(size_t index) {
  return index < jc_kind_count() ? kKindNames[index] : nullptr;
}

}  // extern "C"
