// Copyright 2026 The relaxed authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


/* C interface to the relaxed library.
 *
 * Every call returns an rlx_status. On failure, rlx_last_error() holds a
 * message for the calling thread until its next failing call. Handles are
 * opaque; each *_create has a matching *_destroy that accepts NULL.
 */

#ifndef RELAXED_RELAXED_H_
#define RELAXED_RELAXED_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RLX_API __declspec(dllexport)
#else
#define RLX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rlx_status {
  RLX_OK = 0,
  RLX_INVALID_ARGUMENT = 1,
  RLX_OUT_OF_RANGE = 2,
  RLX_IO_ERROR = 3,
  RLX_ORACLE_VIOLATION = 4,
  RLX_EMPTY = 5,
  RLX_INTERNAL = 6
} rlx_status;

RLX_API const char* rlx_status_name(rlx_status status);
RLX_API const char* rlx_last_error(void);
RLX_API size_t rlx_hardware_threads(void);

/* Random streams. One per thread; not thread-safe. */
typedef struct rlx_rng rlx_rng;
RLX_API rlx_status rlx_rng_create(uint64_t seed, uint64_t stream, rlx_rng** out);
RLX_API void rlx_rng_destroy(rlx_rng* rng);

/* MultiCounter. Thread-safe; pass each thread's own rng. */
typedef struct rlx_counter rlx_counter;
RLX_API rlx_status rlx_counter_create(size_t cells, int padded, rlx_counter** out);
RLX_API void rlx_counter_destroy(rlx_counter* counter);
RLX_API rlx_status rlx_counter_size(const rlx_counter* counter, size_t* cells);
RLX_API rlx_status rlx_counter_increment(rlx_counter* counter, rlx_rng* rng, size_t* cell);
RLX_API rlx_status rlx_counter_read(const rlx_counter* counter, rlx_rng* rng, uint64_t* value);
RLX_API rlx_status rlx_counter_cell(const rlx_counter* counter, size_t index, uint64_t* value);
RLX_API rlx_status rlx_counter_exact_total(const rlx_counter* counter, uint64_t* total);

/* MultiQueue of 64-bit values. Thread-safe; each thread uses its own
 * context. rlx_queue_dequeue returns RLX_EMPTY when both probed queues were
 * empty. */
typedef struct rlx_queue rlx_queue;
typedef struct rlx_queue_context rlx_queue_context;
RLX_API rlx_status rlx_queue_create(size_t queues, rlx_queue** out);
RLX_API void rlx_queue_destroy(rlx_queue* queue);
RLX_API rlx_status rlx_queue_context_create(uint64_t seed, uint32_t thread,
                                            rlx_queue_context** out);
RLX_API void rlx_queue_context_destroy(rlx_queue_context* ctx);
RLX_API rlx_status rlx_queue_enqueue(rlx_queue* queue, rlx_queue_context* ctx, uint64_t value,
                                     uint64_t* stamp);
RLX_API rlx_status rlx_queue_dequeue(rlx_queue* queue, rlx_queue_context* ctx, uint64_t* value,
                                     uint64_t* stamp);
/* Empties the queue at quiescence; reports how many elements it removed. */
RLX_API rlx_status rlx_queue_drain(rlx_queue* queue, uint64_t* removed);
RLX_API rlx_status rlx_queue_live(const rlx_queue* queue, uint64_t* live);

/* STM benchmark. clock is "exact" or "multicounter"; delta 0 picks the
 * default offset. */
typedef struct rlx_stm_result {
  uint64_t commits;
  uint64_t aborts;
  double seconds;
  double commits_per_sec;
  double aborts_per_commit;
  int64_t final_sum;
  int consistent;
  uint64_t delta;
} rlx_stm_result;

RLX_API rlx_status rlx_stm_benchmark(size_t threads, size_t objects, const char* clock,
                                     uint64_t duration_ms, uint64_t delta, uint64_t seed,
                                     rlx_stm_result* out);

/* Experiment configuration and runs. */
typedef struct rlx_config rlx_config;
RLX_API rlx_status rlx_config_create(const char* experiment, rlx_config** out);
RLX_API void rlx_config_destroy(rlx_config* config);
RLX_API rlx_status rlx_config_load_file(rlx_config* config, const char* path);
RLX_API rlx_status rlx_config_load_text(rlx_config* config, const char* text);
RLX_API rlx_status rlx_config_set(rlx_config* config, const char* key, const char* value);
RLX_API rlx_status rlx_config_key_count(const rlx_config* config, size_t* count);
/* Strings stay valid while the config lives. */
RLX_API rlx_status rlx_config_key_name(const rlx_config* config, size_t index, const char** name);
RLX_API rlx_status rlx_config_key_help(const rlx_config* config, size_t index, const char** help);
RLX_API rlx_status rlx_config_key_default(const rlx_config* config, size_t index,
                                          const char** value);
RLX_API rlx_status rlx_config_key_type(const rlx_config* config, size_t index, const char** type);
/* Copies the resolved config header into buffer (NUL-terminated, truncated
 * to capacity); *needed receives the full length including the NUL. */
RLX_API rlx_status rlx_config_dump(const rlx_config* config, char* buffer, size_t capacity,
                                   size_t* needed);

/* Runs the experiment, logging progress to stderr. Returns
 * RLX_ORACLE_VIOLATION (with the failures in rlx_last_error) when a
 * consistency check fails; output files are still written. */
RLX_API rlx_status rlx_experiment_run(const rlx_config* config);

#ifdef __cplusplus
}
#endif

#endif /* RELAXED_RELAXED_H_ */
