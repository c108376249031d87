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

#pragma once

#include <atomic>
#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "relaxed/rng.hpp"

namespace relaxed {

/// Total order on queued elements: logical timestamp, then enqueuing thread,
/// then that thread's sequence number.
struct QueueKey {
  std::uint64_t stamp = 0;
  std::uint32_t thread = 0;
  std::uint64_t seq = 0;

  auto operator<=>(const QueueKey&) const = default;
};

/// Per-thread state for queue operations.
struct QueueContext {
  Rng rng;
  std::uint32_t thread = 0;
  std::uint64_t next_seq = 0;

  QueueContext(std::uint64_t seed, std::uint32_t thread_id)
      : rng(Rng(seed).split(thread_id)), thread(thread_id) {}
};

struct Dequeued {
  std::uint64_t value = 0;
  QueueKey key;
  std::size_t queue = 0;
};

/// Relaxed FIFO queue over m internally ordered queues.
///
/// Enqueue takes a stamp from one shared logical clock and adds the element
/// to a uniformly chosen queue. Dequeue compares the cached minimum stamps of
/// two uniformly chosen queues without locking and removes from the one with
/// the older head; an empty queue always loses. Each queue is guarded by its
/// own mutex. The stamp is drawn while holding the target queue's lock, so
/// every queue receives stamps in increasing order and its removals are
/// strictly increasing.
class MultiQueue {
 public:
  static constexpr std::uint64_t kEmptyStamp =
      std::numeric_limits<std::uint64_t>::max();

  explicit MultiQueue(std::size_t m);
  ~MultiQueue();

  MultiQueue(const MultiQueue&) = delete;
  MultiQueue& operator=(const MultiQueue&) = delete;

  std::size_t size() const noexcept;  // number of internal queues

  QueueKey enqueue(std::uint64_t value, QueueContext& ctx);
  /// Enqueue into a given internal queue.
  QueueKey enqueue_to(std::size_t queue, std::uint64_t value,
                      QueueContext& ctx);

  /// Empty when both probed queues are empty, even if others are not.
  std::optional<Dequeued> dequeue(QueueContext& ctx);
  /// Two-choice removal with the probes fixed by the caller.
  std::optional<Dequeued> dequeue_with_choices(std::size_t i, std::size_t j);

  /// Cached minimum stamp of queue i, or kEmptyStamp.
  std::uint64_t read_min(std::size_t i) const noexcept;

  /// Removes everything, queue by queue. Call at quiescence.
  std::vector<Dequeued> drain();

  /// Number of elements currently held. Exact at quiescence.
  std::uint64_t live() const noexcept;
  std::uint64_t clock() const noexcept;
  /// Removals that were not strictly increasing within their queue.
  std::uint64_t order_violations() const noexcept;

 private:
  struct Lane;

  QueueKey add(std::size_t queue, std::uint64_t value, QueueContext& ctx);
  std::optional<Dequeued> delete_min(Lane& lane, std::size_t index);

  std::unique_ptr<Lane[]> lanes_;
  std::size_t m_;
  std::atomic<std::uint64_t> clock_{0};
  std::atomic<std::uint64_t> live_{0};
  std::atomic<std::uint64_t> order_violations_{0};
};

/// Live keys in a totally ordered shadow set; reports ranks. Keys are
/// nonnegative integers (the queue's stamps). Internally synchronised with
/// one mutex.
class RankOracle {
 public:
  RankOracle() = default;

  /// Throws std::invalid_argument if the key is already live.
  void insert(std::uint64_t key);
  /// Throws std::invalid_argument if the key is not live.
  void erase(std::uint64_t key);
  /// Number of live keys strictly smaller. Throws std::invalid_argument for
  /// keys that are not live.
  std::uint64_t rank_of(std::uint64_t key) const;
  bool contains(std::uint64_t key) const;
  std::uint64_t size() const;

 private:
  void grow(std::uint64_t key);
  std::uint64_t prefix(std::uint64_t end) const;  // live keys < end

  mutable std::mutex mutex_;
  std::vector<std::uint32_t> tree_;  // Fenwick tree, 1-based
  std::vector<std::uint8_t> live_;
  std::uint64_t count_ = 0;
};

struct RankSample {
  std::uint64_t seq = 0;
  std::uint64_t rank = 0;
  std::size_t queue = 0;
  std::uint64_t stamp = 0;
};

/// Single-threaded quality run: prefill, then dequeue and record the exact
/// rank of every removed stamp. Empty probes are skipped, not sampled.
std::vector<RankSample> measure_dequeue_ranks(std::size_t m,
                                              std::uint64_t prefill,
                                              std::uint64_t dequeues,
                                              std::uint64_t seed);

/// seq,rank,queue,stamp
void write_rank_csv(std::ostream& out, std::span<const RankSample> samples);

struct QueueStressResult {
  std::uint64_t enqueued = 0;
  std::uint64_t dequeued = 0;  // by workers, excluding the final drain
  std::uint64_t drained = 0;
  std::uint64_t empty_probes = 0;
  std::uint64_t lost = 0;
  std::uint64_t duplicated = 0;
  std::uint64_t order_violations = 0;
  double seconds = 0.0;

  bool ok() const { return lost == 0 && duplicated == 0 && order_violations == 0; }
};

/// Threads mix enqueues and dequeues for the given duration; then the queue
/// is drained and every enqueued value must have come out exactly once.
QueueStressResult run_queue_stress(std::size_t threads, std::size_t m,
                                   std::chrono::milliseconds duration,
                                   std::uint64_t seed);

}  // namespace relaxed
