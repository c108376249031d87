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

// Sequential balls-into-bins processes and the exponential potential used to
// measure how balanced a load vector is.
//
// Bins are ranked least-loaded first. A probability vector assigns a
// probability to each rank, not to each bin index.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "relaxed/rng.hpp"

namespace relaxed {

/// Ball weight law: unit balls, or exponential balls W / divisor.
///
/// The exponential case keeps the rate and the normalisation divisor as two
/// separate knobs; the default divisor (1 / rate) gives mean one.
struct WeightDistribution {
  enum class Kind { unit, exponential };

  Kind kind = Kind::unit;
  double rate = 1.0;
  double divisor = 1.0;

  static WeightDistribution unit() { return {}; }
  static WeightDistribution exponential(double rate = 1.0);
  static WeightDistribution exponential(double rate, double divisor);

  /// Unit weights consume no randomness.
  double sample(Rng& rng) const;
  double mean() const;
};

/// The m bin weights x_j. The running total is kept alongside so that the
/// mean is O(1); for unit balls every quantity stays an exact integer.
class LoadVector {
 public:
  explicit LoadVector(std::size_t m);
  explicit LoadVector(std::vector<double> weights);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t j) const { return weights_[j]; }
  std::span<const double> weights() const noexcept { return weights_; }

  double total() const noexcept { return total_; }
  double mean() const noexcept { return total_ / static_cast<double>(size()); }
  double centered(std::size_t j) const { return weights_[j] - mean(); }
  double max() const;
  double min() const;
  double gap() const { return max() - min(); }

  void add(std::size_t j, double weight);

  /// Bin indices sorted by (weight, index).
  std::vector<std::size_t> rank_order() const;

  bool operator==(const LoadVector&) const = default;

 private:
  std::vector<double> weights_;
  double total_ = 0.0;
};

/// Constants of the potential argument. Only alpha enters the potential;
/// the others are carried so a run can report what alpha was derived from.
/// drift_constant (c) is never evaluated.
struct PotentialParams {
  double alpha = 0.0;
  double epsilon = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double lambda = 1.0;
  double moment_bound = 1.0;  // S
  double drift_constant = 0.0;

  /// alpha = min(lambda / 2, epsilon / (6 S)).
  static double alpha_for(double epsilon, double lambda, double moment_bound);

  /// From a good(gamma) margin: epsilon = gamma / 6, beta = 2 gamma.
  /// moment_bound is 1 for unit balls and 8 for exponential balls.
  static PotentialParams from_good_margin(double gamma, double lambda = 1.0,
                                          double moment_bound = 1.0);

  /// Explicit epsilon (the two-choice results quote both beta/12 and beta/16).
  static PotentialParams from_epsilon(double epsilon, double beta,
                                      double lambda = 1.0,
                                      double moment_bound = 1.0);

  /// The good(1/5) margin that low-contention operations are shown to have.
  static PotentialParams standard(
      WeightDistribution::Kind kind = WeightDistribution::Kind::unit);

  /// Only alpha is set; for instrumentation at a chosen scale.
  static PotentialParams with_alpha(double alpha);
};

struct PotentialSnapshot {
  std::uint64_t step = 0;
  double phi = 0.0;
  double psi = 0.0;
  double gamma = 0.0;
  double gap = 0.0;
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
};

/// Largest alpha * |y_j| accepted before the potential is declared out of
/// range.
inline constexpr double kMaxExponent = 700.0;

/// Phi = sum exp(alpha y_j), Psi = sum exp(-alpha y_j), Gamma = Phi + Psi.
/// Throws std::out_of_range when alpha * |y_j| exceeds kMaxExponent.
PotentialSnapshot potential(const LoadVector& loads,
                            const PotentialParams& params,
                            std::uint64_t step = 0);

struct ProbabilityVector {
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
  /// sum_{i < k} probs[i].
  double prefix_sum(std::size_t k) const;
  /// Nonnegative entries summing to one within tolerance.
  bool valid(double tolerance = 1e-12) const;
};

/// (1 + beta)-choice rank probabilities, least loaded rank first.
ProbabilityVector one_plus_beta_probabilities(std::size_t m, double beta);

/// Closed form of the first k ranks' mass: (k/m)(1 + beta - beta k/m).
double one_plus_beta_prefix(std::size_t m, double beta, std::size_t k);

/// Worst case for a corrupted step: always the more loaded of the two
/// choices, p_i = (2i - 1) / m^2.
ProbabilityVector bad_step_probabilities(std::size_t m);

/// Rank probabilities of a step that picks the less loaded of its two choices
/// with probability rho.
ProbabilityVector good_step_probabilities(std::size_t m, double rho);

/// Two-choice decision on values: the smaller one, ties to the lower index.
inline std::size_t lighter_of(std::size_t i, double value_i, std::size_t j,
                              double value_j) {
  if (value_j < value_i || (value_j == value_i && j < i)) return j;
  return i;
}

/// Adds one ball to the bin at a rank drawn from probs. Returns the bin.
std::size_t step_with_probabilities(LoadVector& loads,
                                    const ProbabilityVector& probs,
                                    const WeightDistribution& weight,
                                    Rng& rng);

/// Adds one ball by the (1 + beta) process: with probability beta the lighter
/// of two uniform bins, else one uniform bin. beta == 1 draws no coin, so the
/// random stream is exactly (i, j[, weight]) per step. Returns the bin.
std::size_t step_one_plus_beta(LoadVector& loads, double beta,
                               const WeightDistribution& weight, Rng& rng);

/// Load vector plus O(1) potential snapshots.
///
/// Keeps sum exp(+-alpha (x_j - base)) incrementally and rebuilds them exactly
/// every m updates or when the mean drifts far from base.
class PotentialTracker {
 public:
  PotentialTracker(LoadVector loads, double alpha);

  void add(std::size_t bin, double weight);

  const LoadVector& loads() const noexcept { return loads_; }
  double max() const noexcept { return max_; }
  double min() const noexcept { return min_; }
  double gap() const noexcept { return max_ - min_; }

  /// Throws std::out_of_range on exponent overflow, like potential().
  PotentialSnapshot snapshot(std::uint64_t step) const;

 private:
  void rebuild();
  void recompute_min();

  LoadVector loads_;
  double alpha_;
  double base_ = 0.0;
  double pos_sum_ = 0.0;
  double neg_sum_ = 0.0;
  double max_ = 0.0;
  double min_ = 0.0;
  std::size_t min_count_ = 0;
  std::size_t since_rebuild_ = 0;
};

struct SequentialConfig {
  std::size_t m = 64;
  std::uint64_t steps = 0;
  double beta = 1.0;
  WeightDistribution weight;
  std::uint64_t seed = 1;
  std::uint64_t snapshot_every = 1;
  PotentialParams params = PotentialParams::standard();
};

struct SequentialRun {
  std::vector<PotentialSnapshot> trajectory;
  LoadVector loads{1};
  double max_gap = 0.0;  // over every step, not just snapshots
};

/// Stream used by run_sequential; the simulator's thread 0 uses the same one.
Rng sequential_stream(std::uint64_t seed);

/// Runs the (1 + beta) process for config.steps balls, snapshotting at every
/// multiple of snapshot_every.
SequentialRun run_sequential(const SequentialConfig& config);

void write_trajectory_csv(std::ostream& out,
                          std::span<const PotentialSnapshot> trajectory);

}  // namespace relaxed
