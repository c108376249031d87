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

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace relaxed {

enum class Experiment { seq, sim, counter, queue, stm };

const char* experiment_name(Experiment kind);
/// Throws std::invalid_argument for unknown names.
Experiment parse_experiment(std::string_view name);

enum class ValueType { integer, real, boolean, text, integer_list, real_list, text_list };

const char* value_type_name(ValueType type);

struct ConfigKey {
  std::string name;
  ValueType type = ValueType::integer;
  std::string default_value;  // text form
  std::string help;
  bool required = false;  // no default; must be given
};

/// Key table for one experiment, common keys included.
std::vector<ConfigKey> experiment_keys(Experiment kind);

/// Resolved key=value settings with provenance. Values are type-checked when
/// set; lookups by the wrong type or unknown names throw. Every error names
/// the key it is about.
class ExperimentConfig {
 public:
  explicit ExperimentConfig(Experiment kind);
  /// Custom key table, for embedding and tests.
  ExperimentConfig(Experiment kind, std::vector<ConfigKey> keys);

  Experiment kind() const noexcept { return kind_; }
  const std::vector<ConfigKey>& keys() const noexcept { return keys_; }

  /// "key = value" lines; '#' starts a comment; blank lines ignored.
  void load_text(std::string_view text, std::string_view origin = "config");
  void load_file(const std::string& path);
  void set(std::string_view key, std::string_view value);

  /// Throws std::invalid_argument naming the first required key left unset.
  void check_required() const;

  bool is_explicit(std::string_view key) const;
  std::string text(std::string_view key) const;

  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;  // rejects negatives
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::string get_string(std::string_view key) const;
  std::vector<std::int64_t> get_int_list(std::string_view key) const;
  std::vector<std::uint64_t> get_uint_list(std::string_view key) const;
  std::vector<double> get_double_list(std::string_view key) const;
  std::vector<std::string> get_string_list(std::string_view key) const;

  /// "# key=value (default|explicit)" for every key, in table order.
  void write_header(std::ostream& out) const;

 private:
  struct Entry {
    std::size_t key = 0;  // index into keys_
    std::string value;
    bool set = false;
    bool explicit_value = false;
  };

  const Entry& entry(std::string_view key, ValueType type) const;
  const Entry& entry_any(std::string_view key) const;

  Experiment kind_;
  std::vector<ConfigKey> keys_;
  std::map<std::string, Entry, std::less<>> entries_;
};

}  // namespace relaxed
