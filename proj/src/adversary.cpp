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

#include "relaxed/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "relaxed/csv.hpp"

namespace relaxed {

namespace {

constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();

// Random-interleave thread weights span exp(-kSkew)..1 so that some threads
// are starved and pick up long, highly contended operations.
constexpr double kSkew = 4.0;

// Observer reads use a stream no simulated thread can reach.
constexpr std::uint64_t kObserverStream = 0xffff'ffffULL;

}  // namespace

const char* adversary_name(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::serial:
      return "serial";
    case AdversaryKind::round_robin:
      return "round-robin";
    case AdversaryKind::random_interleave:
      return "random-interleave";
    case AdversaryKind::stampede:
      return "stampede";
    case AdversaryKind::block_reset:
      return "block-reset";
  }
  return "?";
}

AdversaryKind parse_adversary(std::string_view name) {
  for (const auto kind :
       {AdversaryKind::serial, AdversaryKind::round_robin,
        AdversaryKind::random_interleave, AdversaryKind::stampede,
        AdversaryKind::block_reset}) {
    if (name == adversary_name(kind)) return kind;
  }
  throw std::invalid_argument("unknown adversary '" + std::string(name) +
                              "'");
}

bool SimConfig::paper_regime() const {
  return static_cast<double>(m) >= 4.0 * ratio * static_cast<double>(n);
}

std::uint64_t SimConfig::contention_threshold() const {
  return static_cast<std::uint64_t>(
      std::floor(ratio * static_cast<double>(n)));
}

void SimConfig::validate() const {
  if (m == 0) throw std::invalid_argument("m must be >= 1");
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  if (!(ratio > 0.0)) throw std::invalid_argument("C must be positive");
  if (snapshot_every == 0) {
    throw std::invalid_argument("snapshot_every must be >= 1");
  }
  if (adversary.block > n) {
    throw std::invalid_argument("stampede block size " +
                                std::to_string(adversary.block) +
                                " exceeds n = " + std::to_string(n));
  }
}

ScheduleGenerator::ScheduleGenerator(const SimConfig& config)
    : adversary_(config.adversary),
      n_(config.n),
      total_ops_(config.total_ops),
      threads_(config.n),
      rng_(config.schedule_seed, 0x5c4ed01e) {
  config.validate();
  if (adversary_.block == 0) adversary_.block = n_;
  if (adversary_.serial_stretch == 0) adversary_.serial_stretch = n_;
  if (adversary_.kind == AdversaryKind::random_interleave) {
    weights_.reserve(n_);
    for (std::size_t t = 0; t < n_; ++t) {
      weights_.push_back(std::exp(kSkew * (rng_.uniform01() - 1.0)));
    }
  }
}

ScheduleEvent ScheduleGenerator::step_thread(std::uint32_t thread) {
  ThreadState& state = threads_[thread];
  if (!state.busy) {
    state.busy = true;
    state.op = started_++;
    state.next_phase = Phase::read_first;
  }
  const ScheduleEvent event{thread, state.op, state.next_phase};
  switch (state.next_phase) {
    case Phase::read_first:
      state.next_phase = Phase::read_second;
      break;
    case Phase::read_second:
      state.next_phase = Phase::update;
      break;
    case Phase::update:
      state.busy = false;
      state.next_phase = Phase::read_first;
      break;
  }
  return event;
}

std::optional<ScheduleEvent> ScheduleGenerator::next() {
  switch (adversary_.kind) {
    case AdversaryKind::round_robin:
      return next_round_robin();
    case AdversaryKind::random_interleave:
      return next_random();
    case AdversaryKind::serial:
    case AdversaryKind::stampede:
    case AdversaryKind::block_reset:
      return next_planned();
  }
  return std::nullopt;
}

std::optional<ScheduleEvent> ScheduleGenerator::next_round_robin() {
  for (std::size_t tries = 0; tries < n_; ++tries) {
    const std::uint32_t thread = cursor_;
    cursor_ = static_cast<std::uint32_t>((cursor_ + 1) % n_);
    if (threads_[thread].busy || can_start()) return step_thread(thread);
  }
  return std::nullopt;
}

std::optional<ScheduleEvent> ScheduleGenerator::next_random() {
  double total = 0.0;
  for (std::size_t t = 0; t < n_; ++t) {
    if (threads_[t].busy || can_start()) total += weights_[t];
  }
  if (total == 0.0) return std::nullopt;
  double pick = rng_.uniform01() * total;
  std::uint32_t chosen = 0;
  for (std::size_t t = 0; t < n_; ++t) {
    if (!(threads_[t].busy || can_start())) continue;
    chosen = static_cast<std::uint32_t>(t);
    pick -= weights_[t];
    if (pick < 0.0) break;
  }
  return step_thread(chosen);
}

void ScheduleGenerator::plan_block() {
  plan_.clear();
  plan_pos_ = 0;
  const std::uint64_t remaining = total_ops_ - started_;
  const bool serial =
      adversary_.kind == AdversaryKind::serial ||
      (adversary_.kind == AdversaryKind::block_reset && in_serial_stretch_);
  if (serial) {
    // One operation at a time; threads take turns.
    const std::uint64_t ops =
        adversary_.kind == AdversaryKind::serial
            ? 1
            : std::min<std::uint64_t>(adversary_.serial_stretch, remaining);
    for (std::uint64_t k = 0; k < ops; ++k) {
      const auto thread = static_cast<std::uint32_t>(cursor_);
      cursor_ = static_cast<std::uint32_t>((cursor_ + 1) % n_);
      plan_.insert(plan_.end(), 3, thread);
    }
  } else {
    // All first reads, all second reads, then all updates back to back.
    const std::uint64_t size =
        std::min<std::uint64_t>(adversary_.block, remaining);
    std::vector<std::uint32_t> members;
    for (std::uint64_t k = 0; k < size; ++k) {
      members.push_back(
          static_cast<std::uint32_t>((blocks_ * adversary_.block + k) % n_));
    }
    ++blocks_;
    for (int phase = 0; phase < 3; ++phase) {
      plan_.insert(plan_.end(), members.begin(), members.end());
    }
  }
  if (adversary_.kind == AdversaryKind::block_reset) {
    in_serial_stretch_ = !in_serial_stretch_;
  }
}

std::optional<ScheduleEvent> ScheduleGenerator::next_planned() {
  if (plan_pos_ == plan_.size()) {
    if (!can_start()) return std::nullopt;
    plan_block();
  }
  return step_thread(plan_[plan_pos_++]);
}

Schedule generate_schedule(const SimConfig& config) {
  ScheduleGenerator generator(config);
  Schedule schedule;
  schedule.reserve(3 * config.total_ops);
  while (auto event = generator.next()) schedule.push_back(*event);
  return schedule;
}

std::optional<std::string> check_schedule(std::span<const ScheduleEvent> events,
                                          std::size_t n) {
  struct Open {
    std::uint64_t op = kNone;
    Phase expect = Phase::read_first;
  };
  std::vector<Open> open(n);
  std::unordered_set<std::uint64_t> finished_ops;
  std::size_t pending = 0;
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto& e = events[k];
    const std::string where = "event " + std::to_string(k) + ": ";
    if (e.thread >= n) {
      return where + "thread " + std::to_string(e.thread) + " >= n";
    }
    Open& slot = open[e.thread];
    if (e.phase == Phase::read_first) {
      if (slot.op != kNone) {
        return where + "thread " + std::to_string(e.thread) +
               " starts op " + std::to_string(e.op) + " while op " +
               std::to_string(slot.op) + " is pending";
      }
      if (finished_ops.contains(e.op)) {
        return where + "op " + std::to_string(e.op) + " restarted";
      }
      slot = {e.op, Phase::read_second};
      if (++pending > n) return where + "more than n pending operations";
      continue;
    }
    if (slot.op != e.op || slot.expect != e.phase) {
      return where + "op " + std::to_string(e.op) + " phase out of order";
    }
    if (e.phase == Phase::read_second) {
      slot.expect = Phase::update;
    } else {
      finished_ops.insert(e.op);
      slot = {};
      --pending;
    }
  }
  return std::nullopt;
}

Rng thread_stream(std::uint64_t seed, std::uint32_t thread) {
  return Rng(seed).split(thread);
}

namespace {

// Last access to a bin, plus the last access by a different operation.
struct BinAccess {
  std::uint64_t last_op = kNone;
  std::uint64_t last_step = 0;
  std::uint64_t prev_op = kNone;
  std::uint64_t prev_step = 0;

  void touch(std::uint64_t op, std::uint64_t step) {
    if (op != last_op) {
      prev_op = last_op;
      prev_step = last_step;
      last_op = op;
    }
    last_step = step;
  }

  // Most recent step at which an operation other than `op` accessed the bin.
  std::optional<std::uint64_t> last_other(std::uint64_t op) const {
    if (last_op != kNone && last_op != op) return last_step;
    if (prev_op != kNone) return prev_step;
    return std::nullopt;
  }
};

struct PendingOp {
  bool active = false;
  Phase expect = Phase::read_first;
  std::uint64_t op = 0;
  std::uint64_t start = 0;
  std::uint64_t completed_at_start = 0;
  std::uint64_t ordinal = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  double vi = 0.0;
  double vj = 0.0;
  // Per other thread: first and last ordinal of its operations seen inside
  // this operation's interval.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> seen;
};

class Simulator {
 public:
  explicit Simulator(const SimConfig& config)
      : config_(config),
        tracker_(LoadVector(config.m), config.params.alpha),
        bins_(config.m),
        pending_(config.n),
        ordinals_(config.n, 0),
        observer_(Rng(config.seed).split(kObserverStream)) {
    config.validate();
    streams_.reserve(config.n);
    for (std::uint32_t t = 0; t < config.n; ++t) {
      streams_.push_back(thread_stream(config.seed, t));
    }
    for (auto& p : pending_) p.seen.assign(config.n, {kNone, kNone});
    result_.history.source = HistorySource::simulator;
    if (config.total_ops > 0) {
      result_.records.reserve(config.total_ops);
      result_.trajectory.reserve(config.total_ops / config.snapshot_every);
    }
  }

  void apply(const ScheduleEvent& e) {
    ++step_;
    if (e.thread >= config_.n) fail(e, "thread id out of range");
    PendingOp& p = pending_[e.thread];
    Rng& rng = streams_[e.thread];
    const auto& x = tracker_.loads();
    std::uint64_t ordinal = 0;
    switch (e.phase) {
      case Phase::read_first: {
        if (p.active) fail(e, "thread already has a pending operation");
        if (++active_ > config_.n) fail(e, "more than n pending operations");
        p.active = true;
        p.expect = Phase::read_second;
        p.op = e.op;
        p.start = step_;
        p.completed_at_start = completed_;
        p.ordinal = ordinals_[e.thread]++;
        std::fill(p.seen.begin(), p.seen.end(),
                  std::pair<std::uint64_t, std::uint64_t>{kNone, kNone});
        p.i = rng.uniform_index(config_.m);
        p.vi = x[p.i];
        bins_[p.i].touch(e.op, step_);
        ordinal = p.ordinal;
        break;
      }
      case Phase::read_second: {
        if (!p.active || p.op != e.op || p.expect != Phase::read_second) {
          fail(e, "second read out of phase order");
        }
        p.expect = Phase::update;
        p.j = rng.uniform_index(config_.m);
        p.vj = x[p.j];
        bins_[p.j].touch(e.op, step_);
        ordinal = p.ordinal;
        break;
      }
      case Phase::update: {
        if (!p.active || p.op != e.op || p.expect != Phase::update) {
          fail(e, "update out of phase order");
        }
        ordinal = p.ordinal;
        finish(e.thread, p, rng);
        break;
      }
    }
    // This step lies inside every other pending operation's interval.
    for (std::uint32_t t = 0; t < config_.n; ++t) {
      if (t == e.thread || !pending_[t].active) continue;
      auto& range = pending_[t].seen[e.thread];
      if (range.first == kNone) range.first = ordinal;
      range.second = ordinal;
    }
  }

  SimResult take() {
    for (const auto& p : pending_) {
      if (p.active) {
        throw std::invalid_argument("schedule ends with pending operation " +
                                    std::to_string(p.op));
      }
    }
    result_.loads = tracker_.loads();
    result_.steps = step_;
    return std::move(result_);
  }

 private:
  [[noreturn]] void fail(const ScheduleEvent& e, const char* what) {
    throw std::invalid_argument("schedule step " + std::to_string(step_) +
                                " (thread " + std::to_string(e.thread) +
                                ", op " + std::to_string(e.op) + "): " + what);
  }

  void finish(std::uint32_t thread, PendingOp& p, Rng& rng) {
    const auto& x = tracker_.loads();
    OperationRecord rec;
    rec.op = p.op;
    rec.thread = thread;
    rec.start = p.start;
    rec.finish = step_;
    rec.choice_i = p.i;
    rec.choice_j = p.j;
    rec.read_i = p.vi;
    rec.read_j = p.vj;
    rec.updated = lighter_of(p.i, p.vi, p.j, p.vj);
    const std::size_t other = rec.updated == p.i ? p.j : p.i;
    rec.correct_choice = x[rec.updated] <= x[other];
    const auto touched_at = bins_[rec.updated].last_other(p.op);
    rec.untouched = !touched_at || *touched_at < p.start;
    for (const auto& [first, last] : p.seen) {
      if (first != kNone) rec.contention += last - first + 1;
    }
    rec.completed_within = completed_ - p.completed_at_start;

    bins_[rec.updated].touch(p.op, step_);
    tracker_.add(rec.updated, config_.weight.sample(rng));
    ++completed_;
    --active_;
    p.active = false;
    result_.max_gap = std::max(result_.max_gap, tracker_.gap());
    if (completed_ % config_.snapshot_every == 0) {
      result_.trajectory.push_back(tracker_.snapshot(step_));
    }
    if (config_.reads_per_update > 0) record_history(rec);
    result_.records.push_back(rec);
  }

  void record_history(const OperationRecord& rec) {
    auto& out = result_.history.records;
    out.push_back({seq_++, rec.thread, OpKind::increment, rec.start,
                   rec.finish, static_cast<std::int64_t>(rec.updated), 0});
    const auto& x = tracker_.loads();
    const double m = static_cast<double>(config_.m);
    for (std::uint32_t k = 0; k < config_.reads_per_update; ++k) {
      const std::size_t cell = observer_.uniform_index(config_.m);
      out.push_back({seq_++, static_cast<std::uint32_t>(config_.n),
                     OpKind::read, step_, step_,
                     static_cast<std::int64_t>(cell),
                     static_cast<std::int64_t>(std::llround(m * x[cell]))});
    }
  }

  const SimConfig& config_;
  PotentialTracker tracker_;
  std::vector<BinAccess> bins_;
  std::vector<PendingOp> pending_;
  std::vector<std::uint64_t> ordinals_;
  std::vector<Rng> streams_;
  Rng observer_;
  std::uint64_t step_ = 0;
  std::uint64_t completed_ = 0;
  std::uint64_t seq_ = 0;
  std::size_t active_ = 0;
  SimResult result_;
};

}  // namespace

SimResult simulate(const SimConfig& config) {
  Simulator sim(config);
  ScheduleGenerator generator(config);
  while (auto event = generator.next()) sim.apply(*event);
  return sim.take();
}

SimResult simulate(const SimConfig& config,
                   std::span<const ScheduleEvent> schedule) {
  Simulator sim(config);
  for (const auto& event : schedule) sim.apply(event);
  return sim.take();
}

Classification classify_operations(std::span<const OperationRecord> records,
                                   const SimConfig& config) {
  const std::uint64_t threshold = config.contention_threshold();
  Classification out;
  out.good.reserve(records.size());
  std::uint64_t correct_good = 0;
  std::uint64_t correct_bad = 0;
  std::uint64_t untouched_good = 0;
  for (const auto& rec : records) {
    const bool good = rec.contention <= threshold;
    out.good.push_back(good);
    if (good) {
      ++out.good_count;
      correct_good += rec.correct_choice;
      untouched_good += rec.untouched;
    } else {
      ++out.bad_count;
      correct_bad += rec.correct_choice;
    }
  }
  const auto ratio = [](std::uint64_t a, std::uint64_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  out.fraction_good = ratio(out.good_count, records.size());
  out.correct_among_good = ratio(correct_good, out.good_count);
  out.correct_among_bad = ratio(correct_bad, out.bad_count);
  out.untouched_among_good = ratio(untouched_good, out.good_count);
  return out;
}

ConsOpsCheck check_cons_ops(std::span<const OperationRecord> records,
                            std::size_t n, std::uint64_t threshold,
                            std::uint64_t window) {
  ConsOpsCheck out;
  if (window == 0 || records.size() < window) {
    // A short run is a single partial window.
    window = records.size();
  }
  if (window == 0) return out;
  std::uint64_t bad = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    bad += records[k].contention > threshold;
    if (k >= window) bad -= records[k - window].contention > threshold;
    if (k + 1 >= window) {
      ++out.windows;
      out.max_bad_in_window = std::max(out.max_bad_in_window, bad);
      if (bad >= n) ++out.violations;
    }
  }
  return out;
}

std::vector<WindowStats> drift_report(
    std::span<const PotentialSnapshot> trajectory,
    std::span<const OperationRecord> records, const SimConfig& config,
    double gamma_limit) {
  const std::uint64_t width = std::max<std::uint64_t>(
      1, config.contention_threshold());
  const std::uint64_t threshold = config.contention_threshold();
  const double limit = gamma_limit * static_cast<double>(config.m);
  std::vector<WindowStats> out;
  std::size_t snap = 0;
  double latest_gamma = 2.0 * static_cast<double>(config.m);
  for (std::uint64_t first = 0; first < records.size(); first += width) {
    const std::uint64_t last =
        std::min<std::uint64_t>(first + width, records.size()) - 1;
    WindowStats w;
    w.index = out.size();
    w.first_op = first;
    w.last_op = last;
    w.max_gamma = 0.0;
    for (std::uint64_t k = first; k <= last; ++k) {
      w.bad_ops += records[k].contention > threshold;
    }
    const std::uint64_t end_step = records[last].finish;
    while (snap < trajectory.size() && trajectory[snap].step <= end_step) {
      w.max_gamma = std::max(w.max_gamma, trajectory[snap].gamma);
      latest_gamma = trajectory[snap].gamma;
      ++snap;
    }
    w.end_gamma = latest_gamma;
    w.max_gamma = std::max(w.max_gamma, w.end_gamma);
    w.flagged = w.end_gamma > limit;
    out.push_back(w);
  }
  return out;
}

void write_records_csv(std::ostream& out,
                       std::span<const OperationRecord> records) {
  out << "op,thread,start,finish,contention,choice_i,choice_j,updated,"
         "correct\n";
  for (const auto& r : records) {
    out << r.op << ',' << r.thread << ',' << r.start << ',' << r.finish << ','
        << r.contention << ',' << r.choice_i << ',' << r.choice_j << ','
        << r.updated << ',' << (r.correct_choice ? 1 : 0) << '\n';
  }
}

void write_drift_csv(std::ostream& out, std::span<const WindowStats> windows) {
  out << "window,first_op,last_op,max_gamma,end_gamma,bad_ops,flagged\n";
  for (const auto& w : windows) {
    out << w.index << ',' << w.first_op << ',' << w.last_op << ','
        << format_number(w.max_gamma) << ',' << format_number(w.end_gamma)
        << ',' << w.bad_ops << ',' << (w.flagged ? 1 : 0) << '\n';
  }
}

}  // namespace relaxed
