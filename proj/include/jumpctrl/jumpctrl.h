#ifndef JUMPCTRL_H
#define JUMPCTRL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Stable C interface to the experiment runner. All objects are opaque; all
 * calls return a status code, with string payloads owned by the library and
 * valid until the next call on the same handle. */

typedef enum jc_status {
  JC_OK = 0,
  JC_ERR_INVALID = 1,     /* bad argument or config */
  JC_ERR_RUNTIME = 2,     /* internal failure while running */
  JC_ERR_IO = 3,          /* file could not be read or written */
  JC_ERR_DIVERGED = 4,    /* a forward solve left the stability region */
  JC_ERR_UNSUPPORTED = 5  /* requested backend cannot handle the problem */
} jc_status;

typedef struct jc_experiment jc_experiment;

const char* jc_version(void);

/* Message for the most recent failing call on this thread. */
const char* jc_last_error(void);

jc_status jc_experiment_from_file(const char* path, jc_experiment** out);
jc_status jc_experiment_from_text(const char* text, jc_experiment** out);

/* Overrides applied on top of the parsed config, before run. */
jc_status jc_experiment_set_seed(jc_experiment* exp, uint64_t seed);
jc_status jc_experiment_set_paths(jc_experiment* exp, size_t n_paths);
jc_status jc_experiment_set_threads(jc_experiment* exp, size_t n_threads);
jc_status jc_experiment_set_out_dir(jc_experiment* exp, const char* dir);

jc_status jc_experiment_run(jc_experiment* exp);

/* Valid after a successful run. */
jc_status jc_experiment_passed(const jc_experiment* exp, int* passed);
const char* jc_experiment_summary_json(const jc_experiment* exp);
jc_status jc_experiment_table_count(const jc_experiment* exp, size_t* count);
const char* jc_experiment_table_name(const jc_experiment* exp, size_t index);
const char* jc_experiment_table_csv(const jc_experiment* exp, size_t index);

/* Writes every table as <name>.csv plus summary.json. A null out_dir uses
 * the config's out_dir. */
jc_status jc_experiment_write(const jc_experiment* exp, const char* out_dir);

void jc_experiment_destroy(jc_experiment* exp);

/* Registry views for discovery. */
size_t jc_benchmark_count(void);
const char* jc_benchmark_name(size_t index);
const char* jc_benchmark_summary(size_t index);
size_t jc_kind_count(void);
const char* jc_kind_name(size_t index);

#ifdef __cplusplus
}
#endif

#endif /* JUMPCTRL_H */
