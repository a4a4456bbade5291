/*
 * vlforgery.h — C API for the VLForgery pipeline library.
 *
 * All functions are thread-compatible (one runner per thread); a runner is
 * not safe for concurrent use. Strings returned by vlf_runner_last_summary /
 * vlf_runner_last_error stay valid until the next call on the same runner or
 * its destruction.
 */
#ifndef VLFORGERY_H
#define VLFORGERY_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vlf_status {
  VLF_OK = 0,
  VLF_ERROR_CONFIG = 1,           /* config file missing, malformed or invalid */
  VLF_ERROR_MISSING_INPUT = 2,    /* a stage input artifact does not exist */
  VLF_ERROR_INVALID_ARGUMENT = 3, /* bad stage name, null pointer, bad option */
  VLF_ERROR_TRANSPORT = 4,        /* model endpoint unreachable after retries */
  VLF_ERROR_IO = 5,               /* artifact read/write failure */
  VLF_ERROR_THRESHOLD = 6,        /* quarantine/failure rate above the limit */
  VLF_ERROR_INTERNAL = 7
} vlf_status;

typedef struct vlf_runner vlf_runner;

/* Library version string, e.g. "0.1.0". */
const char* vlf_version(void);

/* Loads and validates the config file; on success *out_runner owns a runner
 * that must be released with vlf_runner_destroy. */
vlf_status vlf_runner_create(const char* config_path, vlf_runner** out_runner);

/* Message for the most recent vlf_runner_create failure on this thread;
 * empty string if the last create succeeded. */
const char* vlf_last_create_error(void);

void vlf_runner_destroy(vlf_runner* runner);

/* Overrides applied on top of the loaded config. */
vlf_status vlf_runner_set_seed(vlf_runner* runner, uint64_t seed);
vlf_status vlf_runner_set_model(vlf_runner* runner, const char* model_name);
vlf_status vlf_runner_set_output_dir(vlf_runner* runner, const char* dir);

/* Dotted-key config override for stage flags, e.g.
 *   vlf_runner_set_option(r, "bias.global_only", "true")
 *   vlf_runner_set_option(r, "evaluation.split", "train")
 *   vlf_runner_set_option(r, "model.script_path", "script.json") */
vlf_status vlf_runner_set_option(vlf_runner* runner, const char* key, const char* value);

/* Runs one stage: "acquire", "generate", "mine-bias", "describe",
 * "assemble", "evaluate" or "report". On VLF_OK (and VLF_ERROR_THRESHOLD,
 * whose artifacts are still written) the summary JSON is available. */
vlf_status vlf_runner_run_stage(vlf_runner* runner, const char* stage_name);

/* Summary JSON of the last successful stage run; empty string if none. */
const char* vlf_runner_last_summary(const vlf_runner* runner);

/* Message of the last failure; empty string if none. */
const char* vlf_runner_last_error(const vlf_runner* runner);

#ifdef __cplusplus
}
#endif

#endif /* VLFORGERY_H */
