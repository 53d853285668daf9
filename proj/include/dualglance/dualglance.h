/* Copyright 2026 The DualGlance Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of the dualglance library. Objects are opaque handles; every
 * fallible call returns a dg_status and leaves a message for dg_last_error().
 */
#ifndef DUALGLANCE_DUALGLANCE_H
#define DUALGLANCE_DUALGLANCE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define DG_API __declspec(dllexport)
#else
#define DG_API __attribute__((visibility("default")))
#endif

typedef enum dg_status {
  DG_OK = 0,
  DG_ERR_USAGE = 1,     /* bad argument, unknown key or command */
  DG_ERR_DATA = 2,      /* malformed or inconsistent input data */
  DG_ERR_NUMERICAL = 3, /* non-finite values, divergence, failed gradient check */
  DG_ERR_IO = 4,        /* file system failure */
  DG_ERR_SHAPE = 5,     /* tensor shape mismatch */
  DG_ERR_INTERNAL = 6
} dg_status;

typedef struct dg_config dg_config;
typedef struct dg_model dg_model;

DG_API const char* dg_version(void);

/* Message of the last failed call on this thread ("" when none). */
DG_API const char* dg_last_error(void);

/* Process exit code for a status: 0 ok, 1 usage, 2 data, 3 numerical.
 * I/O, shape and internal failures map to 2. */
DG_API int dg_exit_code(dg_status status);

/* Run configuration: every key has a default except the dataset location. */
DG_API dg_status dg_config_create(dg_config** out);
DG_API void dg_config_destroy(dg_config* config);
DG_API dg_status dg_config_set(dg_config* config, const char* key, const char* value);
/* key = value text file; '#' starts a comment. */
DG_API dg_status dg_config_load_file(dg_config* config, const char* path);
/* Copies the value with its terminator into buf when it fits; *needed gets
 * the required size including the terminator. */
DG_API dg_status dg_config_get(const dg_config* config, const char* key, char* buf, size_t cap, size_t* needed);

/* Key registry, for building front ends. Out-of-range index returns NULL. */
DG_API size_t dg_config_key_count(void);
DG_API const char* dg_config_key_name(size_t index);
DG_API const char* dg_config_key_section(size_t index);
DG_API const char* dg_config_key_help(size_t index);

DG_API size_t dg_command_count(void);
DG_API const char* dg_command_name(size_t index);

/* Runs synth, ingest, train, eval, ablate or gradcheck. Results go to
 * stdout, progress to stderr. */
DG_API dg_status dg_run(const dg_config* config, const char* command);

/* Inference on one image. */
DG_API dg_status dg_model_load(const char* checkpoint_path, dg_model** out);
DG_API void dg_model_destroy(dg_model* model);
DG_API dg_status dg_model_num_classes(const dg_model* model, size_t* out);
/* Configuration value recorded in the checkpoint (same buffer contract as
 * dg_config_get). */
DG_API dg_status dg_model_config_get(const dg_model* model, const char* key, char* buf, size_t cap, size_t* needed);
/* pixels: planar RGB, channel-major, height x width per channel, in [0, 1].
 * box1, box2: {xmin, ymin, xmax, ymax} in pixels. proposals: n rows of
 * {xmin, ymin, xmax, ymax, objectness} (may be NULL when n = 0).
 * probs receives num_classes probabilities. */
DG_API dg_status dg_model_predict(const dg_model* model, const double* pixels, size_t width, size_t height,
                                  const double box1[4], const double box2[4], const double* proposals,
                                  size_t num_proposals, double* probs, size_t probs_len);

#ifdef __cplusplus
}
#endif

#endif /* DUALGLANCE_DUALGLANCE_H */
