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

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "relaxed/rng.hpp"

#ifndef RELAXED_PAD_CELLS
#define RELAXED_PAD_CELLS 0
#endif

namespace relaxed {

inline constexpr std::size_t kCacheLine = 64;

namespace detail {

struct PlainCell {
  std::atomic<std::uint64_t> value{0};
};

struct alignas(kCacheLine) PaddedCell {
  std::atomic<std::uint64_t> value{0};
};

}  // namespace detail

/// Approximate counter spread over m atomic cells.
///
/// increment() reads two uniformly chosen cells one after the other and adds
/// one to the cell whose value it saw as smaller (ties and i == j go to the
/// first draw). read() returns m times one uniformly chosen cell. Both are
/// wait-free: an increment is exactly two draws, two loads and one
/// fetch_add, whatever other threads do.
///
/// Value loads are relaxed; stale values only cost balance, never counts.
/// The fetch_add is sequentially consistent.
template <bool Padded>
class BasicMultiCounter {
  using Cell = std::conditional_t<Padded, detail::PaddedCell, detail::PlainCell>;

 public:
  static constexpr bool kPadded = Padded;

  explicit BasicMultiCounter(std::size_t m) : cells_(checked(m)) {}

  BasicMultiCounter(const BasicMultiCounter&) = delete;
  BasicMultiCounter& operator=(const BasicMultiCounter&) = delete;

  std::size_t size() const noexcept { return cells_.size(); }

  /// Returns the cell that was incremented.
  std::size_t increment(Rng& rng) noexcept {
    const std::size_t i = rng.uniform_index(cells_.size());
    const std::size_t j = rng.uniform_index(cells_.size());
    return increment_with_choices(i, j);
  }

  /// Increment with the two choices fixed by the caller.
  std::size_t increment_with_choices(std::size_t i, std::size_t j) noexcept {
    const std::uint64_t vi = cells_[i].value.load(std::memory_order_relaxed);
    const std::uint64_t vj = cells_[j].value.load(std::memory_order_relaxed);
    const std::size_t target = vj < vi ? j : i;
    cells_[target].value.fetch_add(1, std::memory_order_seq_cst);
    return target;
  }

  std::uint64_t read(Rng& rng) const noexcept {
    return read_cell_scaled(rng.uniform_index(cells_.size()));
  }

  /// m times cell i.
  std::uint64_t read_cell_scaled(std::size_t i) const noexcept {
    return cells_.size() * cells_[i].value.load(std::memory_order_acquire);
  }

  std::uint64_t cell(std::size_t i) const noexcept {
    return cells_[i].value.load(std::memory_order_acquire);
  }

  /// Sum of all cells; exact only when no increment is in flight.
  std::uint64_t exact_total() const noexcept {
    std::uint64_t total = 0;
    for (const auto& c : cells_) total += c.value.load(std::memory_order_acquire);
    return total;
  }

  std::uint64_t max_cell() const noexcept {
    std::uint64_t best = 0;
    for (const auto& c : cells_) {
      best = std::max(best, c.value.load(std::memory_order_acquire));
    }
    return best;
  }

  std::uint64_t min_cell() const noexcept {
    std::uint64_t best = cells_[0].value.load(std::memory_order_acquire);
    for (const auto& c : cells_) {
      best = std::min(best, c.value.load(std::memory_order_acquire));
    }
    return best;
  }

 private:
  static std::size_t checked(std::size_t m) {
    if (m == 0) throw std::invalid_argument("MultiCounter needs m >= 1 cells");
    return m;
  }

  std::vector<Cell> cells_;
};

using MultiCounter = BasicMultiCounter<RELAXED_PAD_CELLS != 0>;
using PlainMultiCounter = BasicMultiCounter<false>;
using PaddedMultiCounter = BasicMultiCounter<true>;

}  // namespace relaxed
