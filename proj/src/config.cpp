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


#include "relaxed/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "relaxed/csv.hpp"

namespace relaxed {

const char* experiment_name(Experiment kind) {
  switch (kind) {
    case Experiment::seq: return "seq";
    case Experiment::sim: return "sim";
    case Experiment::counter: return "counter";
    case Experiment::queue: return "queue";
    case Experiment::stm: return "stm";
  }
  return "?";
}

Experiment parse_experiment(std::string_view name) {
  for (Experiment e : {Experiment::seq, Experiment::sim, Experiment::counter,
                       Experiment::queue, Experiment::stm}) {
    if (name == experiment_name(e)) return e;
  }
  throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

const char* value_type_name(ValueType type) {
  switch (type) {
    case ValueType::integer: return "integer";
    case ValueType::real: return "real";
    case ValueType::boolean: return "boolean";
    case ValueType::text: return "text";
    case ValueType::integer_list: return "integer list";
    case ValueType::real_list: return "real list";
    case ValueType::text_list: return "text list";
  }
  return "?";
}

std::vector<ConfigKey> experiment_keys(Experiment kind) {
  using V = ValueType;
  std::vector<ConfigKey> keys = {
      {"seeds", V::integer_list, "1,2,3,4,5", "seeds, one run each"},
      {"repeats", V::integer, "10", "timed repetitions per point (live experiments)"},
      {"out_dir", V::text, "", "output directory; empty uses $RELAXED_OUT_DIR, then ."},
      {"out_prefix", V::text, "", "file name prefix; empty uses the experiment name"},
  };
  auto add = [&](std::initializer_list<ConfigKey> more) {
    keys.insert(keys.end(), more.begin(), more.end());
  };
  const std::initializer_list<ConfigKey> potential = {
      {"weight", V::text, "unit", "ball weights: unit or exponential"},
      {"rate", V::real, "1", "exponential rate; weights are scaled to mean 1"},
      {"snapshot_every", V::integer, "1000", "potential snapshot cadence in steps"},
      {"gamma", V::real, "0.2", "good-step margin used to derive the potential constant"},
      {"lambda", V::real, "1", "moment-generating radius of the weight distribution"},
  };
  switch (kind) {
    case Experiment::seq:
      add({{"m", V::integer, "64", "bins"},
           {"steps", V::integer, "1000000", "balls per run"},
           {"betas", V::real_list, "1", "two-choice probabilities to run"}});
      add(potential);
      break;
    case Experiment::sim:
      add({{"m", V::integer, "256", "bins"},
           {"n", V::integer, "4", "simulated threads"},
           {"ratio", V::real, "16", "contention ratio C"},
           {"ops", V::integer, "1000000", "operations per run"},
           {"adversaries", V::text_list, "stampede,block-reset",
            "serial, round-robin, random-interleave, stampede, block-reset"},
           {"block", V::integer, "0", "stampede block size; 0 means n"},
           {"serial_stretch", V::integer, "0", "serial operations between blocks; 0 means n"},
           {"schedule_seed_offset", V::integer, "1000003", "adversary seed = seed + offset"},
           {"gamma_limit", V::real, "64", "flag windows whose end potential exceeds this times m"},
           {"reads_per_update", V::integer, "0", "observer counter reads per update"},
           {"write_records", V::boolean, "false", "write the per-operation CSV"}});
      add(potential);
      break;
    case Experiment::counter:
      add({{"mode", V::text, "scalability", "scalability or quality"},
           {"threads", V::integer_list, "", "thread counts; empty sweeps 1..hardware"},
           {"ratios", V::integer_list, "1,2,4", "cells per thread"},
           {"layouts", V::text_list, "padded,plain,exact", "padded, plain, or exact (one fetch-and-add word)"},
           {"duration_ms", V::integer, "1000", "timed run length"},
           {"m", V::integer, "64", "cells for the quality run"},
           {"increments", V::integer, "1000000", "increments for the quality run"},
           {"log_every", V::integer, "1000", "quality log cadence"}});
      break;
    case Experiment::queue:
      add({{"mode", V::text, "rank", "rank or integrity"},
           {"m", V::integer, "64", "internal queues"},
           {"prefill", V::integer, "1000000", "elements enqueued before measuring"},
           {"dequeues", V::integer, "500000", "measured dequeues"},
           {"threads", V::integer, "0", "integrity threads; 0 means hardware"},
           {"duration_ms", V::integer, "10000", "integrity run length"}});
      break;
    case Experiment::stm:
      add({{"threads", V::integer_list, "", "thread counts; empty means hardware"},
           {"objects", V::integer_list, "10000,100000,1000000", "array sizes"},
           {"clocks", V::text_list, "exact,multicounter", "clock kinds"},
           {"duration_ms", V::integer, "1000", "run length"},
           {"cells_per_thread", V::integer, "4", "multicounter clock cells per thread"},
           {"delta", V::integer, "0", "future-write offset; 0 means 16 m ln m"},
           {"pin", V::boolean, "false", "try to pin workers to cores"},
           {"backoff", V::integer, "0", "max yields between retries; 0 retries at once"}});
      break;
  }
  return keys;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> list_items(std::string_view text) {
  std::vector<std::string_view> items;
  if (trim(text).empty()) return items;
  for (auto item : split_csv_line(text)) items.push_back(trim(item));
  return items;
}

bool parse_int(std::string_view text, std::int64_t& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec == std::errc() && ptr == text.data() + text.size()) return true;
  // Allow 1e6 and friends when they denote an integer exactly.
  double real = 0.0;
  const auto [p2, e2] = std::from_chars(text.data(), text.data() + text.size(), real);
  if (e2 != std::errc() || p2 != text.data() + text.size()) return false;
  if (!std::isfinite(real) || std::floor(real) != real || std::fabs(real) > 9.0e18) return false;
  out = static_cast<std::int64_t>(real);
  return true;
}

bool parse_real(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_bool(std::string_view text, bool& out) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") {
    out = true;
    return true;
  }
  if (text == "false" || text == "0" || text == "no" || text == "off") {
    out = false;
    return true;
  }
  return false;
}

bool well_typed(ValueType type, std::string_view text) {
  std::int64_t i = 0;
  double d = 0.0;
  bool b = false;
  switch (type) {
    case ValueType::integer: return parse_int(text, i);
    case ValueType::real: return parse_real(text, d);
    case ValueType::boolean: return parse_bool(text, b);
    case ValueType::text: return true;
    case ValueType::integer_list:
      for (auto item : list_items(text)) {
        if (!parse_int(item, i)) return false;
      }
      return true;
    case ValueType::real_list:
      for (auto item : list_items(text)) {
        if (!parse_real(item, d)) return false;
      }
      return true;
    case ValueType::text_list:
      for (auto item : list_items(text)) {
        if (item.empty()) return false;
      }
      return true;
  }
  return false;
}

}  // namespace

ExperimentConfig::ExperimentConfig(Experiment kind)
    : ExperimentConfig(kind, experiment_keys(kind)) {}

ExperimentConfig::ExperimentConfig(Experiment kind, std::vector<ConfigKey> keys)
    : kind_(kind), keys_(std::move(keys)) {
  for (std::size_t k = 0; k < keys_.size(); ++k) {
    const ConfigKey& key = keys_[k];
    if (!key.required && !well_typed(key.type, key.default_value)) {
      throw std::invalid_argument("default for key '" + key.name + "' is not a valid " +
                                  value_type_name(key.type));
    }
    entries_[key.name] = Entry{k, key.default_value, !key.required, false};
  }
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw std::invalid_argument("unknown key '" + std::string(key) + "' for experiment " +
                                experiment_name(kind_));
  }
  const ConfigKey& spec = keys_[it->second.key];
  value = trim(value);
  if (!well_typed(spec.type, value)) {
    throw std::invalid_argument("key '" + spec.name + "' expects " +
                                value_type_name(spec.type) + ", got '" + std::string(value) +
                                "'");
  }
  it->second.value = std::string(value);
  it->second.set = true;
  it->second.explicit_value = true;
}

void ExperimentConfig::load_text(std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text = newline == std::string_view::npos ? std::string_view{} : text.substr(newline + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(std::string(origin) + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(origin) + ":" + std::to_string(line_no) +
                                  ": " + e.what());
    }
  }
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  load_text(buffer.str(), path);
}

void ExperimentConfig::check_required() const {
  for (const auto& key : keys_) {
    if (!entries_.find(key.name)->second.set) {
      throw std::invalid_argument("missing required key '" + key.name + "'");
    }
  }
}

const ExperimentConfig::Entry& ExperimentConfig::entry_any(std::string_view key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw std::invalid_argument("unknown key '" + std::string(key) + "' for experiment " +
                                experiment_name(kind_));
  }
  if (!it->second.set) {
    throw std::invalid_argument("missing required key '" + std::string(key) + "'");
  }
  return it->second;
}

const ExperimentConfig::Entry& ExperimentConfig::entry(std::string_view key,
                                                       ValueType type) const {
  const Entry& e = entry_any(key);
  if (keys_[e.key].type != type) {
    throw std::invalid_argument("key '" + std::string(key) + "' is a " +
                                value_type_name(keys_[e.key].type) + ", not a " +
                                value_type_name(type));
  }
  return e;
}

bool ExperimentConfig::is_explicit(std::string_view key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw std::invalid_argument("unknown key '" + std::string(key) + "'");
  return it->second.explicit_value;
}

std::string ExperimentConfig::text(std::string_view key) const { return entry_any(key).value; }

std::int64_t ExperimentConfig::get_int(std::string_view key) const {
  std::int64_t v = 0;
  parse_int(entry(key, ValueType::integer).value, v);
  return v;
}

std::uint64_t ExperimentConfig::get_uint(std::string_view key) const {
  const std::int64_t v = get_int(key);
  if (v < 0) throw std::invalid_argument("key '" + std::string(key) + "' must be >= 0");
  return static_cast<std::uint64_t>(v);
}

double ExperimentConfig::get_double(std::string_view key) const {
  double v = 0.0;
  parse_real(entry(key, ValueType::real).value, v);
  return v;
}

bool ExperimentConfig::get_bool(std::string_view key) const {
  bool v = false;
  parse_bool(entry(key, ValueType::boolean).value, v);
  return v;
}

std::string ExperimentConfig::get_string(std::string_view key) const {
  return std::string(trim(entry(key, ValueType::text).value));
}

std::vector<std::int64_t> ExperimentConfig::get_int_list(std::string_view key) const {
  std::vector<std::int64_t> out;
  for (auto item : list_items(entry(key, ValueType::integer_list).value)) {
    std::int64_t v = 0;
    parse_int(item, v);
    out.push_back(v);
  }
  return out;
}

std::vector<std::uint64_t> ExperimentConfig::get_uint_list(std::string_view key) const {
  std::vector<std::uint64_t> out;
  for (const std::int64_t v : get_int_list(key)) {
    if (v < 0) throw std::invalid_argument("key '" + std::string(key) + "' must be >= 0");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<double> ExperimentConfig::get_double_list(std::string_view key) const {
  std::vector<double> out;
  for (auto item : list_items(entry(key, ValueType::real_list).value)) {
    double v = 0.0;
    parse_real(item, v);
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> ExperimentConfig::get_string_list(std::string_view key) const {
  std::vector<std::string> out;
  for (auto item : list_items(entry(key, ValueType::text_list).value)) out.emplace_back(item);
  return out;
}

void ExperimentConfig::write_header(std::ostream& out) const {
  out << "# experiment=" << experiment_name(kind_) << '\n';
  for (const auto& key : keys_) {
    const Entry& e = entries_.find(key.name)->second;
    out << "# " << key.name << '=' << (e.set ? e.value : "<unset>") << " ("
        << (e.explicit_value ? "explicit" : "default") << ")\n";
  }
}

}  // namespace relaxed
