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


#include "relaxed/dlin.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "relaxed/csv.hpp"

namespace relaxed {

const char* op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::increment: return "inc";
    case OpKind::read: return "read";
    case OpKind::enqueue: return "enq";
    case OpKind::dequeue: return "deq";
  }
  return "?";
}

OpKind parse_op_kind(std::string_view name) {
  if (name == "inc") return OpKind::increment;
  if (name == "read") return OpKind::read;
  if (name == "enq") return OpKind::enqueue;
  if (name == "deq") return OpKind::dequeue;
  throw std::invalid_argument("unknown operation kind '" + std::string(name) + "'");
}

void History::validate() const {
  std::vector<const HistoryRecord*> by_seq;
  by_seq.reserve(records.size());
  for (const auto& r : records) {
    if (r.respond < r.invoke) {
      throw std::invalid_argument("history: operation " + std::to_string(r.seq) +
                                  " responds before it is invoked");
    }
    by_seq.push_back(&r);
  }
  std::sort(by_seq.begin(), by_seq.end(),
            [](const HistoryRecord* a, const HistoryRecord* b) { return a->seq < b->seq; });
  // No operation earlier in the sequence may have been invoked after this
  // one responded.
  std::uint64_t max_invoke = 0;
  for (std::size_t k = 0; k < by_seq.size(); ++k) {
    const HistoryRecord& r = *by_seq[k];
    if (k > 0 && by_seq[k - 1]->seq == r.seq) {
      throw std::invalid_argument("history: sequence number " +
                                  std::to_string(r.seq) + " repeats");
    }
    if (k > 0 && max_invoke > r.respond) {
      throw std::invalid_argument("history: operation " + std::to_string(r.seq) +
                                  " is sequenced after an operation that started"
                                  " once it had already responded");
    }
    max_invoke = std::max(max_invoke, r.invoke);
  }
}

namespace {

// Counts over a fixed universe of positions.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}

  void add(std::size_t pos, std::int64_t delta) {
    for (std::size_t i = pos + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }
  std::int64_t before(std::size_t pos) const {  // sum over [0, pos)
    std::int64_t total = 0;
    for (std::size_t i = pos; i > 0; i -= i & (~i + 1)) total += tree_[i];
    return total;
  }

 private:
  std::vector<std::int64_t> tree_;
};

std::vector<const HistoryRecord*> in_seq_order(const History& history) {
  std::vector<const HistoryRecord*> order;
  order.reserve(history.records.size());
  for (const auto& r : history.records) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const HistoryRecord* a, const HistoryRecord* b) { return a->seq < b->seq; });
  return order;
}

void check_kind(const HistoryRecord& r, ObjectKind kind) {
  const bool counter_op = r.kind == OpKind::increment || r.kind == OpKind::read;
  if (counter_op != (kind == ObjectKind::counter)) {
    throw std::invalid_argument(std::string("history: '") + op_kind_name(r.kind) +
                                "' operation in a history of the other object kind");
  }
}

}  // namespace

std::vector<CostSample> linearize_costs(const History& history, ObjectKind kind,
                                        std::size_t m) {
  if (m == 0) throw std::invalid_argument("linearize_costs needs m >= 1");
  history.validate();
  const auto order = in_seq_order(history);
  std::vector<CostSample> out;
  out.reserve(order.size());

  if (kind == ObjectKind::counter) {
    std::int64_t increments = 0;
    for (const HistoryRecord* r : order) {
      check_kind(*r, kind);
      double cost = 0.0;
      if (r->kind == OpKind::increment) {
        ++increments;
      } else {
        cost = std::fabs(static_cast<double>(r->ret) - static_cast<double>(increments));
      }
      out.push_back({r->seq, r->kind, cost});
    }
    return out;
  }

  // Queue: compress the enqueued keys, then track live ones.
  std::vector<std::int64_t> keys;
  for (const HistoryRecord* r : order) {
    check_kind(*r, kind);
    if (r->kind == OpKind::enqueue) keys.push_back(r->arg);
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw std::invalid_argument("history: a key is enqueued twice");
  }
  auto position = [&](std::int64_t key) -> std::size_t {
    const auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it == keys.end() || *it != key) {
      throw std::invalid_argument("history: dequeued key " + std::to_string(key) +
                                  " was never enqueued");
    }
    return static_cast<std::size_t>(it - keys.begin());
  };
  Fenwick live(keys.size());
  std::vector<std::uint8_t> is_live(keys.size(), 0);
  std::int64_t live_count = 0;
  for (const HistoryRecord* r : order) {
    double cost = 0.0;
    if (r->kind == OpKind::enqueue) {
      const std::size_t p = position(r->arg);
      live.add(p, 1);
      is_live[p] = 1;
      ++live_count;
    } else if (r->ret == kEmptyReturn) {
      cost = static_cast<double>(live_count);
    } else {
      const std::size_t p = position(r->ret);
      if (!is_live[p]) {
        throw std::invalid_argument("history: key " + std::to_string(r->ret) +
                                    " dequeued while not live");
      }
      cost = static_cast<double>(live.before(p));
      live.add(p, -1);
      is_live[p] = 0;
      --live_count;
    }
    out.push_back({r->seq, r->kind, cost});
  }
  return out;
}

std::vector<double> costs_of(std::span<const CostSample> samples, OpKind kind) {
  std::vector<double> out;
  for (const auto& s : samples) {
    if (s.kind == kind) out.push_back(s.cost);
  }
  return out;
}

double nearest_rank(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile outside [0, 1]");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

TailReport tail_report(std::span<const double> costs, std::size_t m,
                       std::span<const double> r_values) {
  if (costs.empty()) throw std::invalid_argument("tail_report: no samples");
  if (m == 0) throw std::invalid_argument("tail_report needs m >= 1");
  std::vector<double> sorted(costs.begin(), costs.end());
  std::sort(sorted.begin(), sorted.end());
  TailReport report;
  report.count = sorted.size();
  report.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
                static_cast<double>(sorted.size());
  report.p50 = nearest_rank(sorted, 0.50);
  report.p90 = nearest_rank(sorted, 0.90);
  report.p99 = nearest_rank(sorted, 0.99);
  report.max = sorted.back();
  const double scale = static_cast<double>(m) * std::log(static_cast<double>(m));
  for (const double r : r_values) {
    const double threshold = r * scale;
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), threshold);
    report.exceedance.push_back(
        {r, threshold, static_cast<double>(above) / static_cast<double>(sorted.size())});
  }
  return report;
}

void write_tail_report_csv(std::ostream& out, const TailReport& report) {
  out << "count,mean,p50,p90,p99,max,r,threshold,exceedance\n";
  const std::string head = std::to_string(report.count) + ',' +
                           format_number(report.mean) + ',' + format_number(report.p50) +
                           ',' + format_number(report.p90) + ',' +
                           format_number(report.p99) + ',' + format_number(report.max);
  if (report.exceedance.empty()) {
    out << head << ",,,\n";
    return;
  }
  for (const auto& e : report.exceedance) {
    out << head << ',' << format_number(e.r) << ',' << format_number(e.threshold) << ','
        << format_number(e.frequency) << '\n';
  }
}

void write_history_csv(std::ostream& out, const History& history) {
  out << "seq,thread,kind,invoke,respond,arg,ret\n";
  for (const auto& r : history.records) {
    out << r.seq << ',' << r.thread << ',' << op_kind_name(r.kind) << ',' << r.invoke
        << ',' << r.respond << ',' << r.arg << ',' << r.ret << '\n';
  }
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* name) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("history line " + std::to_string(line) + ": bad " +
                                name + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

History read_history_csv(std::istream& in, HistorySource source) {
  History history;
  history.source = source;
  std::string line;
  std::size_t number = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("seq,", 0) == 0) continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 7) {
      throw std::invalid_argument("history line " + std::to_string(number) +
                                  ": expected 7 fields");
    }
    HistoryRecord r;
    r.seq = parse_field<std::uint64_t>(f[0], number, "seq");
    r.thread = parse_field<std::uint32_t>(f[1], number, "thread");
    r.kind = parse_op_kind(f[2]);
    r.invoke = parse_field<std::uint64_t>(f[3], number, "invoke");
    r.respond = parse_field<std::uint64_t>(f[4], number, "respond");
    r.arg = parse_field<std::int64_t>(f[5], number, "arg");
    r.ret = parse_field<std::int64_t>(f[6], number, "ret");
    history.records.push_back(r);
  }
  history.validate();
  return history;
}

std::vector<std::vector<std::size_t>> real_time_linearizations(const History& history) {
  const auto& recs = history.records;
  const std::size_t n = recs.size();
  if (n > 10) {
    throw std::invalid_argument("real_time_linearizations: more than 10 records");
  }
  for (const auto& r : recs) {
    if (r.respond < r.invoke) {
      throw std::invalid_argument("history: response precedes invocation");
    }
  }
  // must_precede[b] = bitmask of records that end before b starts.
  std::vector<unsigned> must_precede(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && recs[a].respond < recs[b].invoke) must_precede[b] |= 1u << a;
    }
  }
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current;
  std::function<void(unsigned)> extend = [&](unsigned placed) {
    if (current.size() == n) {
      out.push_back(current);
      return;
    }
    for (std::size_t b = 0; b < n; ++b) {
      if ((placed >> b) & 1u) continue;
      if ((must_precede[b] & placed) != must_precede[b]) continue;
      current.push_back(b);
      extend(placed | (1u << b));
      current.pop_back();
    }
  };
  extend(0);
  return out;
}

std::vector<double> costs_for_order(const History& history,
                                    std::span<const std::size_t> order,
                                    ObjectKind kind) {
  const auto& recs = history.records;
  if (order.size() != recs.size()) {
    throw std::invalid_argument("costs_for_order: order must cover every record");
  }
  std::vector<double> costs(recs.size(), 0.0);
  const double unreachable = std::numeric_limits<double>::infinity();
  if (kind == ObjectKind::counter) {
    std::int64_t increments = 0;
    for (const std::size_t i : order) {
      check_kind(recs.at(i), kind);
      if (recs[i].kind == OpKind::increment) {
        ++increments;
      } else {
        costs[i] = std::fabs(static_cast<double>(recs[i].ret) -
                             static_cast<double>(increments));
      }
    }
    return costs;
  }
  std::vector<std::int64_t> live;  // sorted
  for (const std::size_t i : order) {
    const HistoryRecord& r = recs.at(i);
    check_kind(r, kind);
    if (r.kind == OpKind::enqueue) {
      live.insert(std::lower_bound(live.begin(), live.end(), r.arg), r.arg);
    } else if (r.ret == kEmptyReturn) {
      costs[i] = static_cast<double>(live.size());
    } else {
      const auto it = std::lower_bound(live.begin(), live.end(), r.ret);
      if (it == live.end() || *it != r.ret) {
        costs[i] = unreachable;  // returns a key that is not in the queue
      } else {
        costs[i] = static_cast<double>(it - live.begin());
        live.erase(it);
      }
    }
  }
  return costs;
}

std::vector<bool> zero_cost_possible(const History& history, ObjectKind kind) {
  std::vector<bool> possible(history.records.size(), false);
  for (const auto& order : real_time_linearizations(history)) {
    const auto costs = costs_for_order(history, order, kind);
    for (std::size_t i = 0; i < costs.size(); ++i) {
      if (costs[i] == 0.0) possible[i] = true;
    }
  }
  return possible;
}

HistoryLog::HistoryLog(std::size_t threads, std::size_t capacity_per_thread)
    : buffers_(threads), capacity_(capacity_per_thread) {
  if (threads == 0) throw std::invalid_argument("HistoryLog needs a thread");
  for (auto& b : buffers_) b.reserve(capacity_);
}

bool HistoryLog::append(std::uint32_t thread, const HistoryRecord& record) {
  auto& buffer = buffers_.at(thread);
  if (buffer.size() >= capacity_) {
    dropped_.fetch_add(1, std::memory_order_relaxed);
    return false;
  }
  buffer.push_back(record);
  return true;
}

History HistoryLog::merge() const {
  History history;
  history.source = HistorySource::live_threads;
  for (const auto& b : buffers_) {
    history.records.insert(history.records.end(), b.begin(), b.end());
  }
  std::sort(history.records.begin(), history.records.end(),
            [](const HistoryRecord& a, const HistoryRecord& b) { return a.seq < b.seq; });
  return history;
}

}  // namespace relaxed
