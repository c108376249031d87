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


// Word-based TL2 over an array of integer cells.
//
// Each cell carries a version lock: bit 0 is the lock, the remaining bits are
// the version of the last committed write. A transaction reads the global
// clock once at begin (rv), accepts only reads of unlocked cells whose
// version is at most rv, buffers writes in a redo log, and at commit locks
// its write set in address order, obtains a write version, revalidates its
// reads and publishes.
//
// Two clocks are available. The exact clock is one fetch-and-add counter.
// The multicounter clock replaces it with a MultiCounter: begin reads
// max(t_max, m * random cell), commit increments the MultiCounter once and
// writes at max(t_max, rv, overwritten versions) + delta. Because reads of a
// MultiCounter can lag the true count, this mode is only safe with high
// probability; the benchmark checks the result after every run.

#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "relaxed/multicounter.hpp"
#include "relaxed/rng.hpp"

namespace relaxed {

enum class ClockKind { exact, multicounter };

const char* clock_name(ClockKind kind);
/// Accepts "exact" and "multicounter".
ClockKind parse_clock(std::string_view name);

/// 16 m ln m, at least 1.
std::uint64_t default_delta(std::size_t clock_cells);

struct VersionedCell {
  std::atomic<std::int64_t> value{0};
  std::atomic<std::uint64_t> lock{0};  // version << 1 | locked
};

/// Per-thread transactional state.
struct StmThread {
  Rng rng;
  std::uint32_t id = 0;
  std::uint64_t t_max = 0;  // largest clock value this thread has read

  StmThread(std::uint64_t seed, std::uint32_t thread_id)
      : rng(Rng(seed).split(thread_id)), id(thread_id) {}
};

struct ClockConfig {
  ClockKind kind = ClockKind::exact;
  std::size_t cells = 16;  // multicounter cells
  std::uint64_t delta = 0;  // 0 means default_delta(cells)
};

class GlobalClock {
 public:
  explicit GlobalClock(const ClockConfig& config);

  ClockKind kind() const noexcept { return kind_; }
  std::uint64_t delta() const noexcept { return delta_; }
  std::size_t cells() const noexcept;

  /// Read version for a new transaction.
  std::uint64_t begin(StmThread& thread);
  /// Write version for a committing transaction holding its locks.
  std::uint64_t commit_version(StmThread& thread, std::uint64_t rv,
                               std::uint64_t overwritten_max);
  /// Multicounter mode advances the clock on aborts too, so a thread that
  /// keeps failing against freshly written versions eventually catches up.
  void on_abort(StmThread& thread);

  /// Exact value (exact mode) or sum of cells (multicounter mode).
  std::uint64_t total() const noexcept;

 private:
  ClockKind kind_;
  std::uint64_t delta_ = 0;
  alignas(kCacheLine) std::atomic<std::uint64_t> exact_{0};
  std::unique_ptr<PaddedMultiCounter> counter_;
};

enum class TxStatus { active, committed, aborted };

/// Points at which the step hook runs.
enum class TxStep { begun, read, locked, validated, published };

class Transaction;

class Stm {
 public:
  using StepHook = std::function<void(const Transaction&, TxStep)>;

  Stm(std::size_t objects, const ClockConfig& clock);

  Stm(const Stm&) = delete;
  Stm& operator=(const Stm&) = delete;

  std::size_t size() const noexcept { return size_; }
  GlobalClock& clock() noexcept { return clock_; }
  const GlobalClock& clock() const noexcept { return clock_; }

  std::int64_t value(std::size_t i) const;
  std::uint64_t version(std::size_t i) const;
  bool locked(std::size_t i) const;
  /// Sum of all values. Call at quiescence.
  std::int64_t sum() const;

  /// Runs on the calling thread at each TxStep. For deterministic
  /// interleaving tests; leave unset otherwise.
  void set_step_hook(StepHook hook) { hook_ = std::move(hook); }

 private:
  friend class Transaction;

  std::unique_ptr<VersionedCell[]> cells_;
  std::size_t size_;
  GlobalClock clock_;
  StepHook hook_;
};

class Transaction {
 public:
  /// Begins: reads the clock into rv.
  Transaction(Stm& stm, StmThread& thread);

  /// Value of the cell, or nullopt after aborting. A cell already in the
  /// write set returns the buffered value without a version check.
  std::optional<std::int64_t> read(std::size_t cell);
  /// Buffers a write. No effect once aborted.
  void write(std::size_t cell, std::int64_t value);
  /// True if committed. On false the transaction is aborted.
  bool commit();

  TxStatus status() const noexcept { return status_; }
  std::uint64_t rv() const noexcept { return rv_; }
  /// Version assigned at commit; 0 before.
  std::uint64_t write_version() const noexcept { return wv_; }
  std::uint32_t thread_id() const noexcept { return thread_.id; }

 private:
  void abort();
  void step(TxStep s) const;
  std::int64_t* buffered(std::size_t cell);

  Stm& stm_;
  StmThread& thread_;
  std::uint64_t rv_ = 0;
  std::uint64_t wv_ = 0;
  TxStatus status_ = TxStatus::active;
  std::vector<std::pair<std::size_t, std::uint64_t>> read_set_;  // cell, version
  std::vector<std::pair<std::size_t, std::int64_t>> write_set_;  // cell, value
};

inline Transaction tx_begin(Stm& stm, StmThread& thread) {
  return Transaction(stm, thread);
}

struct StmBenchConfig {
  std::size_t threads = 1;
  std::size_t objects = 100000;
  std::chrono::milliseconds duration{1000};
  ClockKind clock = ClockKind::exact;
  std::size_t cells_per_thread = 4;  // multicounter cells = this * threads
  std::uint64_t delta = 0;           // 0 means default_delta(cells)
  std::uint64_t seed = 1;
  bool pin_threads = false;
  /// Upper bound on yields between retries, doubled per consecutive abort.
  /// 0 retries immediately.
  std::uint32_t backoff_limit = 0;
};

struct StmBenchResult {
  std::size_t threads = 0;
  std::size_t objects = 0;
  ClockKind clock = ClockKind::exact;
  std::uint64_t delta = 0;
  std::uint64_t commits = 0;
  std::uint64_t aborts = 0;
  double seconds = 0.0;
  double commits_per_sec = 0.0;
  double aborts_per_commit = 0.0;
  std::int64_t final_sum = 0;
  bool consistent = false;  // final_sum == 2 * commits
  std::size_t pinned = 0;   // workers whose affinity was set
};

/// Workers repeatedly add one to two uniformly chosen cells (possibly the
/// same cell twice) in one transaction, retrying the same pair on abort.
StmBenchResult run_stm_benchmark(const StmBenchConfig& config);

/// threads,objects,clock,delta,commits_per_sec,aborts_per_commit,consistent
void write_stm_csv_header(std::ostream& out);
void write_stm_csv_row(std::ostream& out, const StmBenchResult& result);

}  // namespace relaxed
