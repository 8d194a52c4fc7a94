/* Copyright 2026 The SecCAN-sim Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the SecCAN simulator. All objects are opaque handles owned
 * by the caller and released with the matching *_free function. Functions
 * return SECCAN_OK or an error status; the message of the last failure on
 * the calling thread is available from seccan_last_error(). Strings returned
 * through char** out-parameters are released with seccan_string_free(). */

#ifndef SECCAN_SECCAN_H_
#define SECCAN_SECCAN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SECCAN_API __declspec(dllexport)
#else
#define SECCAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum seccan_status {
  SECCAN_OK = 0,
  SECCAN_ERR_INVALID_ARGUMENT = 1,
  SECCAN_ERR_INVALID_FRAME = 2,
  SECCAN_ERR_CONFIG = 3,
  SECCAN_ERR_IO = 4,
  SECCAN_ERR_SCHEMA = 5,
  SECCAN_ERR_EMPTY_TRACE = 6,
  SECCAN_ERR_DEGENERATE_SPLIT = 7,
  SECCAN_ERR_DEGENERATE_DATA = 8,
  SECCAN_ERR_NON_FINITE = 9,
  SECCAN_ERR_ZERO_VARIANCE = 10,
  SECCAN_ERR_VERSION_MISMATCH = 11,
  SECCAN_ERR_CHECKSUM_MISMATCH = 12,
  SECCAN_ERR_DIMENSION_MISMATCH = 13,
  SECCAN_ERR_LENGTH_MISMATCH = 14,
  SECCAN_ERR_INTERNAL = 99
} seccan_status;

typedef enum seccan_frame_done {
  SECCAN_FRAME_DONE_END_OF_EOF = 0,
  SECCAN_FRAME_DONE_END_OF_IFS = 1,
  SECCAN_FRAME_DONE_END_OF_ERROR_FLAGS = 2
} seccan_frame_done;

typedef enum seccan_schema { SECCAN_SCHEMA_CAR_HACKING = 0, SECCAN_SCHEMA_SURVIVAL = 1 } seccan_schema;

typedef enum seccan_attack {
  SECCAN_ATTACK_NONE = 0,
  SECCAN_ATTACK_DOS_FLOOD = 1,
  SECCAN_ATTACK_FUZZING = 2,
  SECCAN_ATTACK_MALFUNCTION = 3,
  SECCAN_ATTACK_FLOODING = 4
} seccan_attack;

typedef struct seccan_timing {
  int64_t bitrate_bps;
  int64_t controller_clock_hz;
  int64_t ids_latency_cycles;
  seccan_frame_done frame_done;
} seccan_timing;

typedef struct seccan_train_config {
  int epochs;
  double learning_rate;
  int batch_size;
  double dropout_rate;
  uint64_t seed;
  int patience;
  int finetune_epochs;
} seccan_train_config;

typedef struct seccan_run_config {
  seccan_timing timing;
  seccan_train_config train;
  seccan_schema schema;
  uint64_t seed;
} seccan_run_config;

typedef struct seccan_frame {
  uint16_t id;
  uint8_t dlc;
  uint8_t data[8];
} seccan_frame;

typedef struct seccan_metrics {
  uint64_t tp, fp, tn, fn;
  double precision, recall, f1, accuracy, fnr;
  int precision_degenerate;
  int recall_degenerate;
} seccan_metrics;

typedef struct seccan_window {
  int64_t t_max_cycles;
  int64_t t_window_cycles;
  double t_max_us;
  double t_window_us;
  int meets;
  int64_t slack_cycles;
} seccan_window;

typedef struct seccan_epoch {
  int epoch;
  int finetune;
  double train_loss;
  double val_loss;
  double val_accuracy;
} seccan_epoch;

typedef struct seccan_trace seccan_trace;
typedef struct seccan_model seccan_model;
typedef struct seccan_report seccan_report;

SECCAN_API const char* seccan_last_error(void);
SECCAN_API const char* seccan_status_name(seccan_status status);
SECCAN_API void seccan_string_free(char* s);

/* Defaults: 1 Mbps, 16 MHz, 584 cycles, end_of_error_flags, 20 epochs. */
SECCAN_API void seccan_run_config_default(seccan_run_config* out);
/* Applies a key=value file on top of *cfg. */
SECCAN_API seccan_status seccan_run_config_load(const char* path, seccan_run_config* cfg);
SECCAN_API seccan_status seccan_parse_frame_done(const char* text, seccan_frame_done* out);
SECCAN_API seccan_status seccan_parse_schema(const char* text, seccan_schema* out);
SECCAN_API seccan_status seccan_parse_attack(const char* text, seccan_attack* out);
/* Attack kind suggested by a dataset file name; SECCAN_ATTACK_NONE if unknown. */
SECCAN_API seccan_attack seccan_infer_attack(const char* path);
SECCAN_API const char* seccan_attack_name(seccan_attack kind);

/* Traces. Records loaded from a file are tagged with source. */
SECCAN_API seccan_status seccan_trace_load(const char* path, seccan_schema schema, seccan_attack source,
                                           seccan_trace** out, size_t* malformed_rows);
SECCAN_API seccan_status seccan_trace_synthesize(seccan_attack kind, double injection_rate,
                                                 uint64_t seed, size_t n, seccan_trace** out);
SECCAN_API seccan_status seccan_trace_save(const seccan_trace* trace, const char* path,
                                           seccan_schema schema);
SECCAN_API seccan_trace* seccan_trace_new(void);
SECCAN_API size_t seccan_trace_size(const seccan_trace* trace);
SECCAN_API size_t seccan_trace_attack_count(const seccan_trace* trace);
/* Appends src to dst as a new segment. */
SECCAN_API seccan_status seccan_trace_append(seccan_trace* dst, const seccan_trace* src);
SECCAN_API seccan_status seccan_trace_split(const seccan_trace* trace, double train, double validation,
                                            double test, uint64_t seed, seccan_trace** train_out,
                                            seccan_trace** validation_out, seccan_trace** test_out);
SECCAN_API void seccan_trace_free(seccan_trace* trace);

/* Models. */
SECCAN_API seccan_status seccan_model_train(const seccan_trace* train, const seccan_trace* validation,
                                            const seccan_train_config* cfg, seccan_model** out);
SECCAN_API seccan_status seccan_model_load(const char* path, seccan_model** out);
SECCAN_API seccan_status seccan_model_save(const seccan_model* model, const char* path);
SECCAN_API size_t seccan_model_epoch_count(const seccan_model* model);
SECCAN_API seccan_status seccan_model_epoch(const seccan_model* model, size_t index, seccan_epoch* out);
/* Verdict for current given the previous message (NULL when none). */
SECCAN_API seccan_status seccan_model_classify(const seccan_model* model, const seccan_frame* current,
                                               const seccan_frame* previous, int* is_attack,
                                               double* probability);
SECCAN_API void seccan_model_free(seccan_model* model);

/* Replays a trace through the controller with the model as IDS; model may
 * be NULL for the plain controller. */
SECCAN_API seccan_status seccan_replay(const seccan_trace* trace, const seccan_model* model,
                                       const seccan_timing* timing, seccan_report** out);
SECCAN_API void seccan_report_overall(const seccan_report* report, seccan_metrics* out);
/* Returns SECCAN_ERR_INVALID_ARGUMENT when the trace had no such source. */
SECCAN_API seccan_status seccan_report_attack(const seccan_report* report, seccan_attack kind,
                                              seccan_metrics* out);
SECCAN_API size_t seccan_report_violations(const seccan_report* report);
SECCAN_API seccan_status seccan_report_text(const seccan_report* report, char** out);
SECCAN_API seccan_status seccan_report_kv(const seccan_report* report, char** out);
SECCAN_API void seccan_report_free(seccan_report* report);

/* Single frame through the controller: ASCII waveform and event log. */
SECCAN_API seccan_status seccan_simulate_frame(const seccan_frame* frame, const seccan_frame* previous,
                                               const seccan_model* model, const seccan_timing* timing,
                                               char** waveform, char** event_log);
SECCAN_API seccan_status seccan_reception_window(const seccan_frame* frame, const seccan_timing* timing,
                                                 seccan_window* out);
/* Window table for DLC 0..8 under every frame_done convention. *violations
 * counts rows failing under the configured convention. */
SECCAN_API seccan_status seccan_timing_table(const seccan_timing* timing, char** out, size_t* violations);

#ifdef __cplusplus
}
#endif

#endif /* SECCAN_SECCAN_H_ */
