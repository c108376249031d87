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


#include "relaxed/relaxed.h"

#include <cstring>
#include <iostream>
#include <new>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

#include "relaxed/config.hpp"
#include "relaxed/experiments.hpp"
#include "relaxed/multicounter.hpp"
#include "relaxed/multiqueue.hpp"
#include "relaxed/rng.hpp"
#include "relaxed/stm.hpp"

struct rlx_rng {
  relaxed::Rng rng;
};

struct rlx_counter {
  std::variant<relaxed::PlainMultiCounter, relaxed::PaddedMultiCounter> impl;

  rlx_counter(std::size_t cells, bool padded)
      : impl(padded ? decltype(impl)(std::in_place_index<1>, cells)
                    : decltype(impl)(std::in_place_index<0>, cells)) {}
};

struct rlx_queue {
  relaxed::MultiQueue queue;
};

struct rlx_queue_context {
  relaxed::QueueContext ctx;
};

struct rlx_config {
  relaxed::ExperimentConfig config;
};

namespace {

thread_local std::string last_error;

rlx_status fail(rlx_status status, const char* message) {
  last_error = message;
  return status;
}

// Runs body, translating exceptions into status codes.
template <typename Body>
rlx_status guarded(Body&& body) noexcept {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    return fail(RLX_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(RLX_OUT_OF_RANGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(RLX_INTERNAL, "out of memory");
  } catch (const std::runtime_error& e) {
    return fail(RLX_IO_ERROR, e.what());
  } catch (const std::exception& e) {
    return fail(RLX_INTERNAL, e.what());
  } catch (...) {
    return fail(RLX_INTERNAL, "unknown error");
  }
}

#define RLX_REQUIRE(cond)                                                   \
  do {                                                                      \
    if (!(cond)) return fail(RLX_INVALID_ARGUMENT, "null argument: " #cond); \
  } while (0)

rlx_status key_field(const rlx_config* config, size_t index, const char** out,
                     const std::string relaxed::ConfigKey::*field) {
  RLX_REQUIRE(config && out);
  const auto& keys = config->config.keys();
  if (index >= keys.size()) return fail(RLX_OUT_OF_RANGE, "key index out of range");
  *out = (keys[index].*field).c_str();
  return RLX_OK;
}

}  // namespace

extern "C" {

const char* rlx_status_name(rlx_status status) {
  switch (status) {
    case RLX_OK: return "ok";
    case RLX_INVALID_ARGUMENT: return "invalid argument";
    case RLX_OUT_OF_RANGE: return "out of range";
    case RLX_IO_ERROR: return "i/o error";
    case RLX_ORACLE_VIOLATION: return "oracle violation";
    case RLX_EMPTY: return "empty";
    case RLX_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* rlx_last_error(void) { return last_error.c_str(); }

size_t rlx_hardware_threads(void) { return relaxed::hardware_threads(); }

rlx_status rlx_rng_create(uint64_t seed, uint64_t stream, rlx_rng** out) {
  RLX_REQUIRE(out);
  return guarded([&] {
    *out = new rlx_rng{relaxed::Rng(seed, stream)};
    return RLX_OK;
  });
}

void rlx_rng_destroy(rlx_rng* rng) { delete rng; }

rlx_status rlx_counter_create(size_t cells, int padded, rlx_counter** out) {
  RLX_REQUIRE(out);
  return guarded([&] {
    *out = new rlx_counter(cells, padded != 0);
    return RLX_OK;
  });
}

void rlx_counter_destroy(rlx_counter* counter) { delete counter; }

rlx_status rlx_counter_size(const rlx_counter* counter, size_t* cells) {
  RLX_REQUIRE(counter && cells);
  *cells = std::visit([](const auto& c) { return c.size(); }, counter->impl);
  return RLX_OK;
}

rlx_status rlx_counter_increment(rlx_counter* counter, rlx_rng* rng, size_t* cell) {
  RLX_REQUIRE(counter && rng);
  const std::size_t target =
      std::visit([&](auto& c) { return c.increment(rng->rng); }, counter->impl);
  if (cell) *cell = target;
  return RLX_OK;
}

rlx_status rlx_counter_read(const rlx_counter* counter, rlx_rng* rng, uint64_t* value) {
  RLX_REQUIRE(counter && rng && value);
  *value = std::visit([&](const auto& c) { return c.read(rng->rng); }, counter->impl);
  return RLX_OK;
}

rlx_status rlx_counter_cell(const rlx_counter* counter, size_t index, uint64_t* value) {
  RLX_REQUIRE(counter && value);
  const std::size_t size = std::visit([](const auto& c) { return c.size(); }, counter->impl);
  if (index >= size) return fail(RLX_OUT_OF_RANGE, "cell index out of range");
  *value = std::visit([&](const auto& c) { return c.cell(index); }, counter->impl);
  return RLX_OK;
}

rlx_status rlx_counter_exact_total(const rlx_counter* counter, uint64_t* total) {
  RLX_REQUIRE(counter && total);
  *total = std::visit([](const auto& c) { return c.exact_total(); }, counter->impl);
  return RLX_OK;
}

rlx_status rlx_queue_create(size_t queues, rlx_queue** out) {
  RLX_REQUIRE(out);
  return guarded([&] {
    *out = new rlx_queue{relaxed::MultiQueue(queues)};
    return RLX_OK;
  });
}

void rlx_queue_destroy(rlx_queue* queue) { delete queue; }

rlx_status rlx_queue_context_create(uint64_t seed, uint32_t thread, rlx_queue_context** out) {
  RLX_REQUIRE(out);
  return guarded([&] {
    *out = new rlx_queue_context{relaxed::QueueContext(seed, thread)};
    return RLX_OK;
  });
}

void rlx_queue_context_destroy(rlx_queue_context* ctx) { delete ctx; }

rlx_status rlx_queue_enqueue(rlx_queue* queue, rlx_queue_context* ctx, uint64_t value,
                             uint64_t* stamp) {
  RLX_REQUIRE(queue && ctx);
  return guarded([&] {
    const relaxed::QueueKey key = queue->queue.enqueue(value, ctx->ctx);
    if (stamp) *stamp = key.stamp;
    return RLX_OK;
  });
}

rlx_status rlx_queue_dequeue(rlx_queue* queue, rlx_queue_context* ctx, uint64_t* value,
                             uint64_t* stamp) {
  RLX_REQUIRE(queue && ctx && value);
  return guarded([&] {
    const auto item = queue->queue.dequeue(ctx->ctx);
    if (!item) return RLX_EMPTY;
    *value = item->value;
    if (stamp) *stamp = item->key.stamp;
    return RLX_OK;
  });
}

rlx_status rlx_queue_drain(rlx_queue* queue, uint64_t* removed) {
  RLX_REQUIRE(queue);
  return guarded([&] {
    const auto items = queue->queue.drain();
    if (removed) *removed = items.size();
    return RLX_OK;
  });
}

rlx_status rlx_queue_live(const rlx_queue* queue, uint64_t* live) {
  RLX_REQUIRE(queue && live);
  *live = queue->queue.live();
  return RLX_OK;
}

rlx_status rlx_stm_benchmark(size_t threads, size_t objects, const char* clock,
                             uint64_t duration_ms, uint64_t delta, uint64_t seed,
                             rlx_stm_result* out) {
  RLX_REQUIRE(clock && out);
  return guarded([&] {
    relaxed::StmBenchConfig config;
    config.threads = threads;
    config.objects = objects;
    config.clock = relaxed::parse_clock(clock);
    config.duration = std::chrono::milliseconds(duration_ms);
    config.delta = delta;
    config.seed = seed;
    const relaxed::StmBenchResult r = relaxed::run_stm_benchmark(config);
    *out = rlx_stm_result{r.commits,    r.aborts,         r.seconds,
                          r.commits_per_sec, r.aborts_per_commit, r.final_sum,
                          r.consistent ? 1 : 0, r.delta};
    return r.consistent ? RLX_OK
                        : fail(RLX_ORACLE_VIOLATION, "STM cell sum does not match commits");
  });
}

rlx_status rlx_config_create(const char* experiment, rlx_config** out) {
  RLX_REQUIRE(experiment && out);
  return guarded([&] {
    *out = new rlx_config{relaxed::ExperimentConfig(relaxed::parse_experiment(experiment))};
    return RLX_OK;
  });
}

void rlx_config_destroy(rlx_config* config) { delete config; }

rlx_status rlx_config_load_file(rlx_config* config, const char* path) {
  RLX_REQUIRE(config && path);
  return guarded([&] {
    config->config.load_file(path);
    return RLX_OK;
  });
}

rlx_status rlx_config_load_text(rlx_config* config, const char* text) {
  RLX_REQUIRE(config && text);
  return guarded([&] {
    config->config.load_text(text);
    return RLX_OK;
  });
}

rlx_status rlx_config_set(rlx_config* config, const char* key, const char* value) {
  RLX_REQUIRE(config && key && value);
  return guarded([&] {
    config->config.set(key, value);
    return RLX_OK;
  });
}

rlx_status rlx_config_key_count(const rlx_config* config, size_t* count) {
  RLX_REQUIRE(config && count);
  *count = config->config.keys().size();
  return RLX_OK;
}

rlx_status rlx_config_key_name(const rlx_config* config, size_t index, const char** name) {
  return key_field(config, index, name, &relaxed::ConfigKey::name);
}

rlx_status rlx_config_key_help(const rlx_config* config, size_t index, const char** help) {
  return key_field(config, index, help, &relaxed::ConfigKey::help);
}

rlx_status rlx_config_key_default(const rlx_config* config, size_t index, const char** value) {
  return key_field(config, index, value, &relaxed::ConfigKey::default_value);
}

rlx_status rlx_config_key_type(const rlx_config* config, size_t index, const char** type) {
  RLX_REQUIRE(config && type);
  const auto& keys = config->config.keys();
  if (index >= keys.size()) return fail(RLX_OUT_OF_RANGE, "key index out of range");
  *type = relaxed::value_type_name(keys[index].type);
  return RLX_OK;
}

rlx_status rlx_config_dump(const rlx_config* config, char* buffer, size_t capacity,
                           size_t* needed) {
  RLX_REQUIRE(config);
  return guarded([&] {
    std::ostringstream out;
    config->config.write_header(out);
    const std::string text = out.str();
    if (needed) *needed = text.size() + 1;
    if (buffer && capacity > 0) {
      const std::size_t n = std::min(capacity - 1, text.size());
      std::memcpy(buffer, text.data(), n);
      buffer[n] = '\0';
    }
    return RLX_OK;
  });
}

rlx_status rlx_experiment_run(const rlx_config* config) {
  RLX_REQUIRE(config);
  return guarded([&] {
    const relaxed::ExperimentOutcome outcome =
        relaxed::run_experiment(config->config, std::cerr);
    if (outcome.violations.empty()) return RLX_OK;
    std::string message;
    for (const auto& v : outcome.violations) {
      if (!message.empty()) message += '\n';
      message += v;
    }
    last_error = message;
    return RLX_ORACLE_VIOLATION;
  });
}

}  // extern "C"
