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

// Asynchronous two-choice process under an oblivious adversary.
//
// Every increment is three shared-memory steps: read a uniform bin, read a
// second uniform bin, update the bin whose read value was smaller. An
// adversary fixes the interleaving of these steps across n threads up front,
// from its own seed, and never looks at the values. The simulator replays
// the interleaving on a single thread.
//
// Reads copy the bin weight at the read step and the bin indices are drawn
// at the read step from the reading thread's stream. Because the schedule
// cannot depend on the draws, this is distributed exactly like drawing the
// indices at update time and handing the thread the values those bins had
// at its two read times (the deferred-decision formulation).
//
// Time is the global count of schedule steps.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relaxed/balance.hpp"
#include "relaxed/dlin.hpp"
#include "relaxed/rng.hpp"

namespace relaxed {

enum class AdversaryKind {
  serial,
  round_robin,
  random_interleave,
  stampede,
  block_reset,
};

const char* adversary_name(AdversaryKind kind);
/// Accepts serial, round-robin, random-interleave, stampede, block-reset.
AdversaryKind parse_adversary(std::string_view name);

struct Adversary {
  AdversaryKind kind = AdversaryKind::round_robin;
  /// Stampede block size; 0 means n. Must not exceed n.
  std::size_t block = 0;
  /// Serial operations between blocks for block-reset; 0 means n.
  std::size_t serial_stretch = 0;
};

struct SimConfig {
  std::size_t m = 256;
  std::size_t n = 4;
  double ratio = 16.0;  // C
  std::uint64_t total_ops = 0;
  Adversary adversary;
  std::uint64_t seed = 1;           // simulation randomness
  std::uint64_t schedule_seed = 1;  // adversary randomness
  WeightDistribution weight;
  PotentialParams params = PotentialParams::standard();
  std::uint64_t snapshot_every = 1;  // in updates
  /// Observer reads recorded into the history after each update.
  std::uint32_t reads_per_update = 0;

  /// m >= 4 C n.
  bool paper_regime() const;
  /// Contention above floor(C n) makes an operation bad.
  std::uint64_t contention_threshold() const;
  /// Throws std::invalid_argument for m == 0, n == 0, C <= 0 or a stampede
  /// block larger than n.
  void validate() const;
};

enum class Phase : std::uint8_t { read_first, read_second, update };

struct ScheduleEvent {
  std::uint32_t thread = 0;
  std::uint64_t op = 0;  // global id, in start order
  Phase phase = Phase::read_first;

  bool operator==(const ScheduleEvent&) const = default;
};

using Schedule = std::vector<ScheduleEvent>;

/// Lazily yields the adversary's schedule for a config. Depends only on
/// (adversary, n, total_ops, schedule_seed).
class ScheduleGenerator {
 public:
  explicit ScheduleGenerator(const SimConfig& config);

  std::optional<ScheduleEvent> next();

 private:
  struct ThreadState {
    std::uint64_t op = 0;
    Phase next_phase = Phase::read_first;
    bool busy = false;
  };

  bool can_start() const { return started_ < total_ops_; }
  ScheduleEvent step_thread(std::uint32_t thread);
  void plan_block();
  std::optional<ScheduleEvent> next_round_robin();
  std::optional<ScheduleEvent> next_random();
  std::optional<ScheduleEvent> next_planned();

  Adversary adversary_;
  std::size_t n_;
  std::uint64_t total_ops_;
  std::uint64_t started_ = 0;
  std::vector<ThreadState> threads_;
  Rng rng_;
  std::vector<double> weights_;  // random-interleave thread weights
  std::uint32_t cursor_ = 0;
  std::vector<std::uint32_t> plan_;  // queued thread steps
  std::size_t plan_pos_ = 0;
  std::uint64_t blocks_ = 0;
  bool in_serial_stretch_ = false;
};

/// Materialised schedule. Throws std::invalid_argument for invalid configs.
Schedule generate_schedule(const SimConfig& config);

/// Checks phase order per operation, at most n pending operations, one
/// pending operation per thread and consistent thread ids. Returns a
/// description of the first violation, or nullopt.
std::optional<std::string> check_schedule(std::span<const ScheduleEvent> events,
                                          std::size_t n);

struct OperationRecord {
  std::uint64_t op = 0;
  std::uint32_t thread = 0;
  std::uint64_t start = 0;   // step of the first read
  std::uint64_t finish = 0;  // step of the update
  /// Distinct other operations with a step strictly inside (start, finish).
  std::uint64_t contention = 0;
  /// Other operations whose update lies strictly inside (start, finish).
  std::uint64_t completed_within = 0;
  std::size_t choice_i = 0;
  std::size_t choice_j = 0;
  double read_i = 0.0;
  double read_j = 0.0;
  std::size_t updated = 0;
  /// The updated bin was the lighter of the pair at update time.
  bool correct_choice = false;
  /// No other operation read or updated the updated bin inside
  /// (start, finish).
  bool untouched = false;
};

struct SimResult {
  LoadVector loads{1};
  std::vector<OperationRecord> records;  // completion order
  std::vector<PotentialSnapshot> trajectory;
  double max_gap = 0.0;  // over every update
  std::uint64_t steps = 0;
  History history;  // observer reads and increments, if requested
};

/// Stream for simulated thread t; thread 0 matches sequential_stream().
Rng thread_stream(std::uint64_t seed, std::uint32_t thread);

/// Replays the config's own adversary schedule.
SimResult simulate(const SimConfig& config);

/// Replays a given schedule. Throws std::invalid_argument when it violates
/// phase order or the thread bound.
SimResult simulate(const SimConfig& config,
                   std::span<const ScheduleEvent> schedule);

struct Classification {
  std::vector<bool> good;  // per record
  std::uint64_t good_count = 0;
  std::uint64_t bad_count = 0;
  double fraction_good = 0.0;
  double correct_among_good = 0.0;
  double correct_among_bad = 0.0;
  double untouched_among_good = 0.0;
};

/// good iff contention <= floor(C n).
Classification classify_operations(std::span<const OperationRecord> records,
                                   const SimConfig& config);

struct ConsOpsCheck {
  std::uint64_t windows = 0;
  std::uint64_t violations = 0;  // windows with >= n bad operations
  std::uint64_t max_bad_in_window = 0;
};

/// Slides a window of `window` consecutive operations (completion order)
/// and counts those with contention above threshold.
ConsOpsCheck check_cons_ops(std::span<const OperationRecord> records,
                            std::size_t n, std::uint64_t threshold,
                            std::uint64_t window);

struct WindowStats {
  std::uint64_t index = 0;
  std::uint64_t first_op = 0;  // completion ordinal
  std::uint64_t last_op = 0;
  double max_gamma = 0.0;
  double end_gamma = 0.0;
  std::uint64_t bad_ops = 0;
  bool flagged = false;
};

/// Per-window potential statistics over windows of floor(C n) operations.
/// A window is flagged when its end Gamma exceeds gamma_limit * m.
std::vector<WindowStats> drift_report(
    std::span<const PotentialSnapshot> trajectory,
    std::span<const OperationRecord> records, const SimConfig& config,
    double gamma_limit);

/// op,thread,start,finish,contention,choice_i,choice_j,updated,correct
void write_records_csv(std::ostream& out,
                       std::span<const OperationRecord> records);

void write_drift_csv(std::ostream& out, std::span<const WindowStats> windows);

}  // namespace relaxed
