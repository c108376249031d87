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

// Distributional-linearizability cost recording.
//
// A history of completed counter or queue operations is mapped onto the
// strict sequential object by ordering operations by their linearization
// sequence number (the atomic write for increments, the DeleteMin for
// dequeues). Each operation is charged the distance between its output and
// what the sequential object would have returned at that point. The mapping
// is one fixed witness, so measured costs bound the best mapping from above.

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace relaxed {

enum class OpKind : std::uint8_t { increment, read, enqueue, dequeue };

const char* op_kind_name(OpKind kind);
/// Throws std::invalid_argument for unknown names.
OpKind parse_op_kind(std::string_view name);

/// Dequeues that found nothing report this as their return value.
inline constexpr std::int64_t kEmptyReturn = -1;

struct HistoryRecord {
  std::uint64_t seq = 0;  // linearization order
  std::uint32_t thread = 0;
  OpKind kind = OpKind::increment;
  std::uint64_t invoke = 0;
  std::uint64_t respond = 0;
  std::int64_t arg = 0;  // increment: cell; read: cell; enqueue: key
  std::int64_t ret = 0;  // read: value; dequeue: key or kEmptyReturn

  bool operator==(const HistoryRecord&) const = default;
};

enum class HistorySource { simulator, live_threads };

struct History {
  HistorySource source = HistorySource::simulator;
  std::vector<HistoryRecord> records;

  /// Throws std::invalid_argument when a response precedes its invocation,
  /// sequence numbers repeat, or two non-overlapping operations are
  /// sequenced against real time.
  void validate() const;
};

enum class ObjectKind { counter, queue };

struct CostSample {
  std::uint64_t op = 0;  // seq of the operation
  OpKind kind = OpKind::increment;
  double cost = 0.0;
};

/// One sample per operation, in linearization order. Counter reads cost
/// |ret - increments so far|; dequeues cost the rank of the returned key
/// among live keys (an empty return on a non-empty queue costs the live
/// count). Increments and enqueues cost 0.
std::vector<CostSample> linearize_costs(const History& history,
                                        ObjectKind kind, std::size_t m);

/// Costs of the operations of one sample kind only.
std::vector<double> costs_of(std::span<const CostSample> samples,
                             OpKind kind);

struct Exceedance {
  double r = 0.0;
  double threshold = 0.0;  // r * m * ln m
  double frequency = 0.0;
};

struct TailReport {
  std::size_t count = 0;
  double mean = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  std::vector<Exceedance> exceedance;
};

/// Nearest-rank quantile: the ceil(q * N)-th smallest value (1-based).
double nearest_rank(std::span<const double> sorted, double q);

/// Throws std::invalid_argument on an empty sample set.
TailReport tail_report(std::span<const double> costs, std::size_t m,
                       std::span<const double> r_values);

void write_tail_report_csv(std::ostream& out, const TailReport& report);

/// Line format: seq,thread,kind,invoke,respond,arg,ret (one header line).
void write_history_csv(std::ostream& out, const History& history);
/// Skips the header and '#' comment lines. Validates the result.
History read_history_csv(std::istream& in, HistorySource source);

// Brute force over linearizations, for small histories only.

/// Every order of record indices that keeps non-overlapping operations in
/// real-time order. Throws std::invalid_argument above 10 records.
std::vector<std::vector<std::size_t>> real_time_linearizations(
    const History& history);

/// Per-record costs (indexed like history.records) when the records take
/// effect in the given order.
std::vector<double> costs_for_order(const History& history,
                                    std::span<const std::size_t> order,
                                    ObjectKind kind);

/// Per-record flag: some real-time-respecting linearization charges this
/// operation zero.
std::vector<bool> zero_cost_possible(const History& history, ObjectKind kind);

/// Live-thread capture: one bounded append buffer per thread, global step
/// and sequence counters, merged by sequence number afterwards.
class HistoryLog {
 public:
  HistoryLog(std::size_t threads, std::size_t capacity_per_thread);

  std::uint64_t tick() noexcept {
    return step_.fetch_add(1, std::memory_order_relaxed);
  }
  std::uint64_t next_seq() noexcept {
    return seq_.fetch_add(1, std::memory_order_seq_cst);
  }

  /// Only the owning thread appends to its buffer. Returns false (and counts
  /// a drop) once the buffer is full.
  bool append(std::uint32_t thread, const HistoryRecord& record);

  std::uint64_t dropped() const noexcept {
    return dropped_.load(std::memory_order_relaxed);
  }

  /// Call at quiescence.
  History merge() const;

 private:
  std::vector<std::vector<HistoryRecord>> buffers_;
  std::size_t capacity_;
  std::atomic<std::uint64_t> step_{0};
  std::atomic<std::uint64_t> seq_{0};
  std::atomic<std::uint64_t> dropped_{0};
};

}  // namespace relaxed
