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


#include "relaxed/stm.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

#include "relaxed/csv.hpp"

namespace relaxed {

namespace {

constexpr std::uint64_t kLockBit = 1;

constexpr std::uint64_t version_of(std::uint64_t word) { return word >> 1; }
constexpr bool is_locked(std::uint64_t word) { return (word & kLockBit) != 0; }

}  // namespace

const char* clock_name(ClockKind kind) {
  return kind == ClockKind::exact ? "exact" : "multicounter";
}

ClockKind parse_clock(std::string_view name) {
  if (name == "exact") return ClockKind::exact;
  if (name == "multicounter") return ClockKind::multicounter;
  throw std::invalid_argument("unknown clock '" + std::string(name) +
                              "' (expected exact or multicounter)");
}

std::uint64_t default_delta(std::size_t clock_cells) {
  const double m = static_cast<double>(clock_cells);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(16.0 * m * std::log(m))));
}

GlobalClock::GlobalClock(const ClockConfig& config) : kind_(config.kind) {
  if (kind_ == ClockKind::multicounter) {
    if (config.cells == 0) throw std::invalid_argument("clock needs at least one cell");
    counter_ = std::make_unique<PaddedMultiCounter>(config.cells);
    delta_ = config.delta == 0 ? default_delta(config.cells) : config.delta;
  }
}

std::size_t GlobalClock::cells() const noexcept {
  return counter_ ? counter_->size() : 1;
}

std::uint64_t GlobalClock::begin(StmThread& thread) {
  if (kind_ == ClockKind::exact) return exact_.load(std::memory_order_seq_cst);
  thread.t_max = std::max(thread.t_max, counter_->read(thread.rng));
  return thread.t_max;
}

std::uint64_t GlobalClock::commit_version(StmThread& thread, std::uint64_t rv,
                                          std::uint64_t overwritten_max) {
  if (kind_ == ClockKind::exact) return exact_.fetch_add(1, std::memory_order_seq_cst) + 1;
  counter_->increment(thread.rng);
  thread.t_max = std::max(thread.t_max, counter_->read(thread.rng));
  return std::max({thread.t_max, rv, overwritten_max}) + delta_;
}

void GlobalClock::on_abort(StmThread& thread) {
  if (kind_ == ClockKind::multicounter) counter_->increment(thread.rng);
}

std::uint64_t GlobalClock::total() const noexcept {
  return counter_ ? counter_->exact_total() : exact_.load(std::memory_order_seq_cst);
}

// ---------------------------------------------------------------------------

Stm::Stm(std::size_t objects, const ClockConfig& clock)
    : size_(objects), clock_(clock) {
  if (objects == 0) throw std::invalid_argument("STM needs at least one object");
  cells_ = std::make_unique<VersionedCell[]>(objects);
}

std::int64_t Stm::value(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("cell index out of range");
  return cells_[i].value.load(std::memory_order_acquire);
}

std::uint64_t Stm::version(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("cell index out of range");
  return version_of(cells_[i].lock.load(std::memory_order_acquire));
}

bool Stm::locked(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("cell index out of range");
  return is_locked(cells_[i].lock.load(std::memory_order_acquire));
}

std::int64_t Stm::sum() const {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < size_; ++i) total += cells_[i].value.load(std::memory_order_acquire);
  return total;
}

// ---------------------------------------------------------------------------

Transaction::Transaction(Stm& stm, StmThread& thread) : stm_(stm), thread_(thread) {
  rv_ = stm_.clock_.begin(thread_);
  step(TxStep::begun);
}

void Transaction::step(TxStep s) const {
  if (stm_.hook_) stm_.hook_(*this, s);
}

void Transaction::abort() {
  if (status_ != TxStatus::active) return;
  status_ = TxStatus::aborted;
  stm_.clock_.on_abort(thread_);
}

std::int64_t* Transaction::buffered(std::size_t cell) {
  for (auto& [c, v] : write_set_) {
    if (c == cell) return &v;
  }
  return nullptr;
}

std::optional<std::int64_t> Transaction::read(std::size_t cell) {
  if (status_ != TxStatus::active) return std::nullopt;
  if (cell >= stm_.size_) throw std::out_of_range("cell index out of range");
  if (const std::int64_t* own = buffered(cell)) return *own;

  VersionedCell& c = stm_.cells_[cell];
  const std::uint64_t before = c.lock.load(std::memory_order_acquire);
  if (is_locked(before) || version_of(before) > rv_) {
    abort();
    return std::nullopt;
  }
  const std::int64_t value = c.value.load(std::memory_order_acquire);
  const std::uint64_t after = c.lock.load(std::memory_order_acquire);
  if (after != before) {
    abort();
    return std::nullopt;
  }
  read_set_.emplace_back(cell, version_of(before));
  step(TxStep::read);
  return value;
}

void Transaction::write(std::size_t cell, std::int64_t value) {
  if (status_ != TxStatus::active) return;
  if (cell >= stm_.size_) throw std::out_of_range("cell index out of range");
  if (std::int64_t* own = buffered(cell)) {
    *own = value;
  } else {
    write_set_.emplace_back(cell, value);
  }
}

bool Transaction::commit() {
  if (status_ != TxStatus::active) return false;
  if (write_set_.empty()) {
    // Every read was checked against rv when it happened.
    status_ = TxStatus::committed;
    return true;
  }

  std::sort(write_set_.begin(), write_set_.end());
  std::vector<std::uint64_t> saved;  // lock words before locking
  saved.reserve(write_set_.size());
  auto release = [&](std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      stm_.cells_[write_set_[k].first].lock.store(saved[k], std::memory_order_release);
    }
  };

  std::uint64_t overwritten_max = 0;
  for (const auto& [cell, value] : write_set_) {
    auto& lock = stm_.cells_[cell].lock;
    std::uint64_t word = lock.load(std::memory_order_acquire);
    if (is_locked(word) ||
        !lock.compare_exchange_strong(word, word | kLockBit, std::memory_order_acq_rel)) {
      release(saved.size());
      abort();
      return false;
    }
    saved.push_back(word);
    overwritten_max = std::max(overwritten_max, version_of(word));
  }

  wv_ = stm_.clock_.commit_version(thread_, rv_, overwritten_max);
  step(TxStep::locked);

  for (const auto& [cell, seen] : read_set_) {
    const std::uint64_t word = stm_.cells_[cell].lock.load(std::memory_order_acquire);
    std::uint64_t version = version_of(word);
    if (is_locked(word)) {
      const auto it = std::lower_bound(
          write_set_.begin(), write_set_.end(), cell,
          [](const std::pair<std::size_t, std::int64_t>& w, std::size_t c) { return w.first < c; });
      if (it == write_set_.end() || it->first != cell) {
        release(saved.size());
        abort();
        return false;
      }
      version = version_of(saved[static_cast<std::size_t>(it - write_set_.begin())]);
    }
    if (version > rv_) {
      release(saved.size());
      abort();
      return false;
    }
  }
  step(TxStep::validated);

  for (const auto& [cell, value] : write_set_) {
    stm_.cells_[cell].value.store(value, std::memory_order_release);
  }
  for (const auto& [cell, value] : write_set_) {
    stm_.cells_[cell].lock.store(wv_ << 1, std::memory_order_release);
  }
  status_ = TxStatus::committed;
  step(TxStep::published);
  return true;
}

// ---------------------------------------------------------------------------

namespace {

bool pin_to_cpu(std::thread& worker, std::size_t index) {
#if defined(__linux__)
  const unsigned cpus = std::max(1u, std::thread::hardware_concurrency());
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(index % cpus, &set);
  return pthread_setaffinity_np(worker.native_handle(), sizeof(set), &set) == 0;
#else
  (void)worker;
  (void)index;
  return false;
#endif
}

}  // namespace

StmBenchResult run_stm_benchmark(const StmBenchConfig& config) {
  if (config.threads == 0 || config.objects == 0 || config.cells_per_thread == 0) {
    throw std::invalid_argument("STM benchmark parameters must be positive");
  }
  ClockConfig clock{config.clock, config.cells_per_thread * config.threads, config.delta};
  Stm stm(config.objects, clock);

  std::atomic<bool> go{false};
  std::atomic<bool> stop{false};
  std::vector<std::uint64_t> commits(config.threads, 0);
  std::vector<std::uint64_t> aborts(config.threads, 0);
  std::vector<std::thread> workers;
  workers.reserve(config.threads);
  for (std::size_t t = 0; t < config.threads; ++t) {
    workers.emplace_back([&, t] {
      StmThread self(config.seed, static_cast<std::uint32_t>(t));
      std::uint64_t done = 0;
      std::uint64_t failed = 0;
      while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
      while (!stop.load(std::memory_order_relaxed)) {
        const std::size_t a = self.rng.uniform_index(config.objects);
        const std::size_t b = self.rng.uniform_index(config.objects);
        std::uint32_t streak = 0;
        for (;;) {
          Transaction tx(stm, self);
          if (auto va = tx.read(a)) {
            tx.write(a, *va + 1);
            if (auto vb = tx.read(b)) {
              tx.write(b, *vb + 1);
              if (tx.commit()) {
                ++done;
                break;
              }
            }
          }
          ++failed;
          // A pair abandoned at shutdown left no writes behind.
          if (stop.load(std::memory_order_relaxed)) break;
          if (config.backoff_limit > 0) {
            const std::uint32_t yields =
                std::min<std::uint32_t>(config.backoff_limit, 1u << std::min(streak, 20u));
            for (std::uint32_t y = 0; y < yields; ++y) std::this_thread::yield();
            ++streak;
          }
        }
      }
      commits[t] = done;
      aborts[t] = failed;
    });
  }
  StmBenchResult result;
  if (config.pin_threads) {
    for (std::size_t t = 0; t < workers.size(); ++t) {
      if (pin_to_cpu(workers[t], t)) ++result.pinned;
    }
  }
  const auto begin = std::chrono::steady_clock::now();
  go.store(true, std::memory_order_release);
  std::this_thread::sleep_for(config.duration);
  stop.store(true);
  for (auto& w : workers) w.join();
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();

  result.threads = config.threads;
  result.objects = config.objects;
  result.clock = config.clock;
  result.delta = config.clock == ClockKind::multicounter ? stm.clock().delta() : 0;
  for (std::size_t t = 0; t < config.threads; ++t) {
    result.commits += commits[t];
    result.aborts += aborts[t];
  }
  result.commits_per_sec = static_cast<double>(result.commits) / result.seconds;
  result.aborts_per_commit =
      result.commits == 0 ? 0.0
                          : static_cast<double>(result.aborts) / static_cast<double>(result.commits);
  result.final_sum = stm.sum();
  result.consistent = result.final_sum == 2 * static_cast<std::int64_t>(result.commits);
  return result;
}

void write_stm_csv_header(std::ostream& out) {
  out << "threads,objects,clock,delta,commits_per_sec,aborts_per_commit,consistent\n";
}

void write_stm_csv_row(std::ostream& out, const StmBenchResult& r) {
  out << r.threads << ',' << r.objects << ',' << clock_name(r.clock) << ',' << r.delta << ','
      << format_number(r.commits_per_sec) << ',' << format_number(r.aborts_per_commit) << ','
      << (r.consistent ? "true" : "false") << '\n';
}

}  // namespace relaxed
