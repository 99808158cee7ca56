/* Copyright 2026 The ipdsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface of libipd. Every call returns an ipd_status; on failure the
 * message is available from ipd_last_error() on the same thread until the
 * next call. Strings returned through char** are owned by the caller and
 * released with ipd_string_free. */

#ifndef IPD_IPD_C_H_
#define IPD_IPD_C_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define IPD_API __declspec(dllexport)
#else
#define IPD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ipd_status {
  IPD_OK = 0,
  IPD_ERR_CONTRACT = 1,
  IPD_ERR_CONFIG = 2,
  IPD_ERR_IO = 3,
  IPD_ERR_VERSION = 4,
  IPD_ERR_CORRUPT = 5,
  IPD_ERR_PRECONDITION = 6,
  IPD_ERR_NONFINITE = 7,
  IPD_ERR_SCHEMA = 8,
  IPD_ERR_INTERRUPTED = 9,
  IPD_ERR_INTERNAL = 99
} ipd_status;

typedef struct ipd_config ipd_config;
typedef struct ipd_model ipd_model;

typedef void (*ipd_log_fn)(const char* message, void* user);
/* Nonzero requests a stop at the next phase / iteration boundary. */
typedef int (*ipd_stop_fn)(void* user);

IPD_API const char* ipd_version(void);
IPD_API const char* ipd_last_error(void);
IPD_API const char* ipd_status_name(ipd_status status);
IPD_API void ipd_string_free(char* s);

/* Configuration. `path` NULL starts from the profile defaults; `profile`
 * NULL or "" takes the profile from the document. */
IPD_API ipd_status ipd_config_load(const char* path, const char* profile, ipd_config** out);
IPD_API ipd_status ipd_config_parse(const char* json_text, const char* profile,
                                    ipd_config** out);
/* Sets a dotted key ("experiment.kind", "paths.out_root", "seeds", ...) to
 * a JSON value and re-validates. */
IPD_API ipd_status ipd_config_set(ipd_config* cfg, const char* key, const char* json_value);
IPD_API ipd_status ipd_config_to_json(const ipd_config* cfg, char** out);
IPD_API ipd_status ipd_config_seeds(const ipd_config* cfg, uint64_t* seeds, size_t capacity,
                                    size_t* count);
/* Output root: paths.out_root, else $IPD_OUT_ROOT, else "runs". */
IPD_API ipd_status ipd_config_out_root(const ipd_config* cfg, char** out);
/* Directory a run of `seed` writes into. */
IPD_API ipd_status ipd_config_run_dir(const ipd_config* cfg, uint64_t seed, char** out);
IPD_API void ipd_config_free(ipd_config* cfg);

/* Builds D_0 for the configured experiment and writes it as JSON lines, one
   trajectory record per line (each episode gives one record per seat). */
IPD_API ipd_status ipd_pretrain(const ipd_config* cfg, uint64_t seed, const char* out_path,
                                uint64_t* n_records, uint64_t* checksum);

/* Runs the configured experiment for one seed. `run_dir` may be NULL. */
IPD_API ipd_status ipd_run(const ipd_config* cfg, uint64_t seed, ipd_log_fn log,
                           ipd_stop_fn stop, void* user, char** run_dir);

/* Writes <out_dir>/<metric>.svg per metric. `per_round` selects the round
 * axis at outer index `outer` (-1: the last one). */
IPD_API ipd_status ipd_plot(const char* const* csv_paths, size_t n_csv,
                            const char* const* metrics, size_t n_metrics, int per_round,
                            int64_t outer, const char* out_dir, size_t* n_written);

IPD_API ipd_status ipd_model_load(const char* path, ipd_model** out);
IPD_API ipd_status ipd_model_save(const ipd_model* model, const char* path);
IPD_API ipd_status ipd_model_checksum(const ipd_model* model, uint64_t* out);
IPD_API ipd_status ipd_model_shape(const ipd_model* model, int* hidden_dim, int* embed_dim,
                                   int* conditioning_dim);
IPD_API void ipd_model_free(ipd_model* model);

#ifdef __cplusplus
}
#endif

#endif /* IPD_IPD_C_H_ */
