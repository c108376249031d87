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


#include "relaxed/multiqueue.hpp"

#include <algorithm>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

namespace relaxed {

struct alignas(64) MultiQueue::Lane {
  std::mutex mutex;
  std::vector<std::pair<QueueKey, std::uint64_t>> heap;  // min-heap on key
  std::atomic<std::uint64_t> top{kEmptyStamp};
  QueueKey last_removed;
  bool removed_any = false;
};

namespace {

constexpr int kSpinLimit = 64;
constexpr int kProbeAttempts = 16;

struct KeyGreater {
  bool operator()(const std::pair<QueueKey, std::uint64_t>& a,
                  const std::pair<QueueKey, std::uint64_t>& b) const {
    return a.first > b.first;
  }
};

}  // namespace

MultiQueue::MultiQueue(std::size_t m) : m_(m) {
  if (m == 0) throw std::invalid_argument("MultiQueue needs m >= 1 queues");
  lanes_ = std::make_unique<Lane[]>(m);
}

MultiQueue::~MultiQueue() = default;

std::size_t MultiQueue::size() const noexcept { return m_; }

QueueKey MultiQueue::add(std::size_t queue, std::uint64_t value,
                         QueueContext& ctx) {
  Lane& lane = lanes_[queue];
  std::lock_guard<std::mutex> guard(lane.mutex);
  const QueueKey key{clock_.fetch_add(1, std::memory_order_seq_cst), ctx.thread,
                     ctx.next_seq++};
  lane.heap.emplace_back(key, value);
  std::push_heap(lane.heap.begin(), lane.heap.end(), KeyGreater{});
  lane.top.store(lane.heap.front().first.stamp, std::memory_order_release);
  live_.fetch_add(1, std::memory_order_relaxed);
  return key;
}

QueueKey MultiQueue::enqueue(std::uint64_t value, QueueContext& ctx) {
  return add(ctx.rng.uniform_index(m_), value, ctx);
}

QueueKey MultiQueue::enqueue_to(std::size_t queue, std::uint64_t value,
                                QueueContext& ctx) {
  if (queue >= m_) throw std::out_of_range("queue index out of range");
  return add(queue, value, ctx);
}

// Caller holds lane.mutex.
std::optional<Dequeued> MultiQueue::delete_min(Lane& lane, std::size_t index) {
  if (lane.heap.empty()) return std::nullopt;
  std::pop_heap(lane.heap.begin(), lane.heap.end(), KeyGreater{});
  auto [key, value] = lane.heap.back();
  lane.heap.pop_back();
  lane.top.store(lane.heap.empty() ? kEmptyStamp : lane.heap.front().first.stamp,
                 std::memory_order_release);
  if (lane.removed_any && !(lane.last_removed < key)) {
    order_violations_.fetch_add(1, std::memory_order_relaxed);
  }
  lane.last_removed = key;
  lane.removed_any = true;
  live_.fetch_sub(1, std::memory_order_relaxed);
  return Dequeued{value, key, index};
}

std::uint64_t MultiQueue::read_min(std::size_t i) const noexcept {
  return lanes_[i].top.load(std::memory_order_acquire);
}

std::optional<Dequeued> MultiQueue::dequeue_with_choices(std::size_t i,
                                                         std::size_t j) {
  if (i >= m_ || j >= m_) throw std::out_of_range("queue index out of range");
  const std::uint64_t pi = read_min(i);
  const std::uint64_t pj = read_min(j);
  if (pi == kEmptyStamp && pj == kEmptyStamp) return std::nullopt;
  const std::size_t target = pi > pj ? j : i;
  Lane& lane = lanes_[target];
  std::lock_guard<std::mutex> guard(lane.mutex);
  return delete_min(lane, target);
}

std::optional<Dequeued> MultiQueue::dequeue(QueueContext& ctx) {
  for (int attempt = 0; attempt < kProbeAttempts; ++attempt) {
    const std::size_t i = ctx.rng.uniform_index(m_);
    const std::size_t j = ctx.rng.uniform_index(m_);
    const std::uint64_t pi = read_min(i);
    const std::uint64_t pj = read_min(j);
    if (pi == kEmptyStamp && pj == kEmptyStamp) return std::nullopt;
    const std::size_t target = pi > pj ? j : i;
    Lane& lane = lanes_[target];

    bool locked = false;
    if (attempt + 1 == kProbeAttempts) {
      lane.mutex.lock();  // stop retrying; wait for this queue
      locked = true;
    } else {
      for (int spin = 0; spin < kSpinLimit && !locked; ++spin) {
        locked = lane.mutex.try_lock();
        if (!locked && spin % 8 == 7) std::this_thread::yield();
      }
    }
    if (!locked) continue;
    auto result = delete_min(lane, target);
    lane.mutex.unlock();
    if (result) return result;
    // The queue emptied between the probe and the lock; probe again.
  }
  return std::nullopt;
}

std::vector<Dequeued> MultiQueue::drain() {
  std::vector<Dequeued> out;
  for (std::size_t q = 0; q < m_; ++q) {
    std::lock_guard<std::mutex> guard(lanes_[q].mutex);
    while (auto item = delete_min(lanes_[q], q)) out.push_back(*item);
  }
  return out;
}

std::uint64_t MultiQueue::live() const noexcept {
  return live_.load(std::memory_order_relaxed);
}

std::uint64_t MultiQueue::clock() const noexcept {
  return clock_.load(std::memory_order_relaxed);
}

std::uint64_t MultiQueue::order_violations() const noexcept {
  return order_violations_.load(std::memory_order_relaxed);
}

// ---------------------------------------------------------------------------

void RankOracle::grow(std::uint64_t key) {
  if (key < live_.size()) return;
  std::size_t size = std::max<std::size_t>(live_.size(), 1024);
  while (size <= key) size *= 2;
  live_.resize(size, 0);
  // Rebuild the Fenwick tree for the new length in O(size).
  tree_.assign(size + 1, 0);
  for (std::size_t i = 1; i <= size; ++i) {
    tree_[i] += live_[i - 1];
    const std::size_t parent = i + (i & (~i + 1));
    if (parent <= size) tree_[parent] += tree_[i];
  }
}

std::uint64_t RankOracle::prefix(std::uint64_t end) const {
  end = std::min<std::uint64_t>(end, live_.size());
  std::uint64_t total = 0;
  for (std::uint64_t i = end; i > 0; i -= i & (~i + 1)) total += tree_[i];
  return total;
}

void RankOracle::insert(std::uint64_t key) {
  std::lock_guard<std::mutex> guard(mutex_);
  grow(key);
  if (live_[key]) {
    throw std::invalid_argument("rank oracle: key " + std::to_string(key) +
                                " is already live");
  }
  live_[key] = 1;
  for (std::uint64_t i = key + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  ++count_;
}

void RankOracle::erase(std::uint64_t key) {
  std::lock_guard<std::mutex> guard(mutex_);
  if (key >= live_.size() || !live_[key]) {
    throw std::invalid_argument("rank oracle: key " + std::to_string(key) +
                                " is not live");
  }
  live_[key] = 0;
  for (std::uint64_t i = key + 1; i < tree_.size(); i += i & (~i + 1)) --tree_[i];
  --count_;
}

std::uint64_t RankOracle::rank_of(std::uint64_t key) const {
  std::lock_guard<std::mutex> guard(mutex_);
  if (key >= live_.size() || !live_[key]) {
    throw std::invalid_argument("rank oracle: key " + std::to_string(key) +
                                " is not live");
  }
  return prefix(key);
}

bool RankOracle::contains(std::uint64_t key) const {
  std::lock_guard<std::mutex> guard(mutex_);
  return key < live_.size() && live_[key] != 0;
}

std::uint64_t RankOracle::size() const {
  std::lock_guard<std::mutex> guard(mutex_);
  return count_;
}

// ---------------------------------------------------------------------------

std::vector<RankSample> measure_dequeue_ranks(std::size_t m,
                                              std::uint64_t prefill,
                                              std::uint64_t dequeues,
                                              std::uint64_t seed) {
  MultiQueue queue(m);
  RankOracle oracle;
  QueueContext ctx(seed, 0);
  for (std::uint64_t v = 0; v < prefill; ++v) {
    oracle.insert(queue.enqueue(v, ctx).stamp);
  }
  std::vector<RankSample> samples;
  samples.reserve(static_cast<std::size_t>(std::min(dequeues, prefill)));
  for (std::uint64_t d = 0; d < dequeues; ++d) {
    auto item = queue.dequeue(ctx);
    if (!item) continue;
    const std::uint64_t stamp = item->key.stamp;
    samples.push_back({d, oracle.rank_of(stamp), item->queue, stamp});
    oracle.erase(stamp);
  }
  return samples;
}

void write_rank_csv(std::ostream& out, std::span<const RankSample> samples) {
  out << "seq,rank,queue,stamp\n";
  for (const auto& s : samples) {
    out << s.seq << ',' << s.rank << ',' << s.queue << ',' << s.stamp << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kStressCapacity = std::uint64_t{1} << 25;  // per thread
constexpr int kThreadShift = 40;

struct SeenSet {
  std::unique_ptr<std::atomic<std::uint64_t>[]> words;

  SeenSet() : words(new std::atomic<std::uint64_t>[kStressCapacity / 64]) {
    for (std::uint64_t w = 0; w < kStressCapacity / 64; ++w) {
      words[w].store(0, std::memory_order_relaxed);
    }
  }

  // True if the value was seen before.
  bool mark(std::uint64_t index) {
    const std::uint64_t bit = std::uint64_t{1} << (index % 64);
    return (words[index / 64].fetch_or(bit, std::memory_order_relaxed) & bit) != 0;
  }
};

}  // namespace

QueueStressResult run_queue_stress(std::size_t threads, std::size_t m,
                                   std::chrono::milliseconds duration,
                                   std::uint64_t seed) {
  if (threads == 0) throw std::invalid_argument("stress needs at least one thread");
  MultiQueue queue(m);
  std::vector<SeenSet> seen(threads);
  std::vector<std::uint64_t> produced(threads, 0);
  std::atomic<std::uint64_t> duplicated{0};
  std::atomic<std::uint64_t> foreign{0};
  std::atomic<std::uint64_t> dequeued{0};
  std::atomic<std::uint64_t> empty_probes{0};
  std::atomic<bool> stop{false};

  auto account = [&](std::uint64_t value) {
    const std::uint64_t owner = value >> kThreadShift;
    const std::uint64_t index = value & ((std::uint64_t{1} << kThreadShift) - 1);
    if (owner >= threads || index >= kStressCapacity) {
      foreign.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    if (seen[owner].mark(index)) duplicated.fetch_add(1, std::memory_order_relaxed);
  };

  const auto begin = std::chrono::steady_clock::now();
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      QueueContext ctx(seed, static_cast<std::uint32_t>(t));
      std::uint64_t local_deq = 0;
      std::uint64_t local_empty = 0;
      std::uint64_t count = 0;
      while (!stop.load(std::memory_order_relaxed)) {
        for (int burst = 0; burst < 256; ++burst) {
          if (ctx.rng.bernoulli(0.5) && count < kStressCapacity) {
            queue.enqueue((std::uint64_t{t} << kThreadShift) | count, ctx);
            ++count;
          } else if (auto item = queue.dequeue(ctx)) {
            account(item->value);
            ++local_deq;
          } else {
            ++local_empty;
          }
        }
      }
      produced[t] = count;
      dequeued.fetch_add(local_deq, std::memory_order_relaxed);
      empty_probes.fetch_add(local_empty, std::memory_order_relaxed);
    });
  }
  std::this_thread::sleep_for(duration);
  stop.store(true);
  for (auto& w : workers) w.join();

  QueueStressResult result;
  result.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - begin).count();
  const auto rest = queue.drain();
  for (const auto& item : rest) account(item.value);
  result.drained = rest.size();
  result.dequeued = dequeued.load();
  result.empty_probes = empty_probes.load();
  for (std::size_t t = 0; t < threads; ++t) {
    result.enqueued += produced[t];
    for (std::uint64_t i = 0; i < produced[t]; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << (i % 64);
      if ((seen[t].words[i / 64].load(std::memory_order_relaxed) & bit) == 0) {
        ++result.lost;
      }
    }
  }
  result.duplicated = duplicated.load() + foreign.load();
  result.order_violations = queue.order_violations();
  return result;
}

}  // namespace relaxed
