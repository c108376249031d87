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

#include "relaxed/balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "relaxed/csv.hpp"

namespace relaxed {

WeightDistribution WeightDistribution::exponential(double rate) {
  return exponential(rate, 1.0 / rate);
}

WeightDistribution WeightDistribution::exponential(double rate,
                                                   double divisor) {
  if (!(rate > 0.0) || !(divisor > 0.0)) {
    throw std::invalid_argument(
        "exponential weights need a positive rate and divisor");
  }
  return {Kind::exponential, rate, divisor};
}

double WeightDistribution::sample(Rng& rng) const {
  if (kind == Kind::unit) return 1.0;
  return rng.exponential(rate) / divisor;
}

double WeightDistribution::mean() const {
  if (kind == Kind::unit) return 1.0;
  return 1.0 / (rate * divisor);
}

LoadVector::LoadVector(std::size_t m) : weights_(m, 0.0) {
  if (m == 0) throw std::invalid_argument("load vector needs m >= 1 bins");
}

LoadVector::LoadVector(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) {
    throw std::invalid_argument("load vector needs m >= 1 bins");
  }
  total_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

double LoadVector::max() const {
  return *std::max_element(weights_.begin(), weights_.end());
}

double LoadVector::min() const {
  return *std::min_element(weights_.begin(), weights_.end());
}

void LoadVector::add(std::size_t j, double weight) {
  weights_.at(j) += weight;
  total_ += weight;
}

std::vector<std::size_t> LoadVector::rank_order() const {
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [this](std::size_t a, std::size_t b) {
                     return weights_[a] < weights_[b];
                   });
  return order;
}

double PotentialParams::alpha_for(double epsilon, double lambda,
                                  double moment_bound) {
  return std::min(lambda / 2.0, epsilon / (6.0 * moment_bound));
}

PotentialParams PotentialParams::from_good_margin(double gamma, double lambda,
                                                  double moment_bound) {
  return from_epsilon(gamma / 6.0, 2.0 * gamma, lambda, moment_bound);
}

PotentialParams PotentialParams::from_epsilon(double epsilon, double beta,
                                              double lambda,
                                              double moment_bound) {
  if (!(epsilon > 0.0) || !(lambda > 0.0) || !(moment_bound > 0.0)) {
    throw std::invalid_argument(
        "potential parameters need epsilon, lambda, S > 0");
  }
  PotentialParams params;
  params.epsilon = epsilon;
  params.beta = beta;
  params.gamma = beta / 2.0;
  params.lambda = lambda;
  params.moment_bound = moment_bound;
  params.alpha = alpha_for(epsilon, lambda, moment_bound);
  return params;
}

PotentialParams PotentialParams::standard(WeightDistribution::Kind kind) {
  const double moment_bound =
      kind == WeightDistribution::Kind::exponential ? 8.0 : 1.0;
  return from_good_margin(0.2, 1.0, moment_bound);
}

PotentialParams PotentialParams::with_alpha(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  PotentialParams params;
  params.alpha = alpha;
  return params;
}

namespace {

[[noreturn]] void throw_exponent_overflow(double exponent) {
  throw std::out_of_range("potential exponent alpha*|y| = " +
                          format_number(exponent) + " exceeds " +
                          format_number(kMaxExponent));
}

}  // namespace

PotentialSnapshot potential(const LoadVector& loads,
                            const PotentialParams& params,
                            std::uint64_t step) {
  const double mu = loads.mean();
  PotentialSnapshot snap;
  snap.step = step;
  snap.mean = mu;
  snap.max = loads.max();
  snap.min = loads.min();
  snap.gap = snap.max - snap.min;
  for (const double x : loads.weights()) {
    const double exponent = params.alpha * (x - mu);
    if (std::abs(exponent) > kMaxExponent) throw_exponent_overflow(exponent);
    snap.phi += std::exp(exponent);
    snap.psi += std::exp(-exponent);
  }
  snap.gamma = snap.phi + snap.psi;
  return snap;
}

double ProbabilityVector::prefix_sum(std::size_t k) const {
  return std::accumulate(probs.begin(),
                         probs.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
}

bool ProbabilityVector::valid(double tolerance) const {
  if (probs.empty()) return false;
  double sum = 0.0;
  for (const double p : probs) {
    if (!(p >= 0.0) || p > 1.0) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

ProbabilityVector one_plus_beta_probabilities(std::size_t m, double beta) {
  if (m == 0) throw std::invalid_argument("probability vector needs m >= 1");
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("beta must lie in [0, 1]");
  }
  const double md = static_cast<double>(m);
  ProbabilityVector out;
  out.probs.reserve(m);
  for (std::size_t i = 1; i <= m; ++i) {
    const double rank = static_cast<double>(i);
    out.probs.push_back((1.0 - beta) / md +
                        beta * ((2.0 / md) * (1.0 - (rank - 1.0) / md) -
                                1.0 / (md * md)));
  }
  return out;
}

double one_plus_beta_prefix(std::size_t m, double beta, std::size_t k) {
  const double frac = static_cast<double>(k) / static_cast<double>(m);
  return frac * (1.0 + beta - frac * beta);
}

ProbabilityVector bad_step_probabilities(std::size_t m) {
  if (m == 0) throw std::invalid_argument("probability vector needs m >= 1");
  const double m2 = static_cast<double>(m) * static_cast<double>(m);
  ProbabilityVector out;
  out.probs.reserve(m);
  for (std::size_t i = 1; i <= m; ++i) {
    out.probs.push_back(static_cast<double>(2 * i - 1) / m2);
  }
  return out;
}

ProbabilityVector good_step_probabilities(std::size_t m, double rho) {
  if (m == 0) throw std::invalid_argument("probability vector needs m >= 1");
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("rho must lie in [0, 1]");
  }
  const double md = static_cast<double>(m);
  const double m2 = md * md;
  ProbabilityVector out;
  out.probs.reserve(m);
  for (std::size_t i = 1; i <= m; ++i) {
    const double rank = static_cast<double>(i);
    out.probs.push_back(rho * 2.0 * (md - rank) / m2 + 1.0 / m2 +
                        (1.0 - rho) * 2.0 * (rank - 1.0) / m2);
  }
  return out;
}

std::size_t step_with_probabilities(LoadVector& loads,
                                    const ProbabilityVector& probs,
                                    const WeightDistribution& weight,
                                    Rng& rng) {
  if (probs.size() != loads.size()) {
    throw std::invalid_argument("probability vector length must equal m");
  }
  const auto order = loads.rank_order();
  const double u = rng.uniform01();
  double cumulative = 0.0;
  std::size_t rank = probs.size() - 1;
  for (std::size_t r = 0; r < probs.size(); ++r) {
    cumulative += probs[r];
    if (u < cumulative) {
      rank = r;
      break;
    }
  }
  const std::size_t bin = order[rank];
  loads.add(bin, weight.sample(rng));
  return bin;
}

std::size_t step_one_plus_beta(LoadVector& loads, double beta,
                               const WeightDistribution& weight, Rng& rng) {
  const std::uint64_t m = loads.size();
  const bool two_choice = beta >= 1.0 || rng.bernoulli(beta);
  std::size_t bin = rng.uniform_index(m);
  if (two_choice) {
    const std::size_t other = rng.uniform_index(m);
    bin = lighter_of(bin, loads[bin], other, loads[other]);
  }
  loads.add(bin, weight.sample(rng));
  return bin;
}

PotentialTracker::PotentialTracker(LoadVector loads, double alpha)
    : loads_(std::move(loads)), alpha_(alpha) {
  max_ = loads_.max();
  recompute_min();
  rebuild();
}

void PotentialTracker::recompute_min() {
  min_ = loads_.min();
  min_count_ = static_cast<std::size_t>(
      std::count(loads_.weights().begin(), loads_.weights().end(), min_));
}

void PotentialTracker::rebuild() {
  base_ = loads_.mean();
  pos_sum_ = 0.0;
  neg_sum_ = 0.0;
  for (const double x : loads_.weights()) {
    // Clamp only the cached sums; snapshot() reports the overflow.
    const double exponent =
        std::clamp(alpha_ * (x - base_), -kMaxExponent, kMaxExponent);
    pos_sum_ += std::exp(exponent);
    neg_sum_ += std::exp(-exponent);
  }
  since_rebuild_ = 0;
}

void PotentialTracker::add(std::size_t bin, double weight) {
  const double before = loads_[bin];
  loads_.add(bin, weight);
  const double after = loads_[bin];
  max_ = std::max(max_, after);
  if (before == min_ && --min_count_ == 0) recompute_min();

  if (++since_rebuild_ >= loads_.size() ||
      std::abs(alpha_ * (loads_.mean() - base_)) > 32.0 ||
      alpha_ * (after - base_) > 64.0) {
    rebuild();
    return;
  }
  pos_sum_ += std::exp(alpha_ * (after - base_)) -
              std::exp(alpha_ * (before - base_));
  neg_sum_ += std::exp(-alpha_ * (after - base_)) -
              std::exp(-alpha_ * (before - base_));
}

PotentialSnapshot PotentialTracker::snapshot(std::uint64_t step) const {
  const double mu = loads_.mean();
  const double high = alpha_ * (max_ - mu);
  const double low = alpha_ * (mu - min_);
  if (high > kMaxExponent) throw_exponent_overflow(high);
  if (low > kMaxExponent) throw_exponent_overflow(low);
  PotentialSnapshot snap;
  snap.step = step;
  snap.mean = mu;
  snap.max = max_;
  snap.min = min_;
  snap.gap = max_ - min_;
  snap.phi = std::exp(alpha_ * (base_ - mu)) * pos_sum_;
  snap.psi = std::exp(alpha_ * (mu - base_)) * neg_sum_;
  snap.gamma = snap.phi + snap.psi;
  return snap;
}

Rng sequential_stream(std::uint64_t seed) { return Rng(seed).split(0); }

SequentialRun run_sequential(const SequentialConfig& config) {
  if (config.snapshot_every == 0) {
    throw std::invalid_argument("snapshot_every must be >= 1");
  }
  if (!(config.beta >= 0.0 && config.beta <= 1.0)) {
    throw std::invalid_argument("beta must lie in [0, 1]");
  }
  Rng rng = sequential_stream(config.seed);
  LoadVector loads(config.m);
  PotentialTracker tracker(loads, config.params.alpha);
  SequentialRun run;
  run.trajectory.reserve(config.steps / config.snapshot_every);
  for (std::uint64_t t = 1; t <= config.steps; ++t) {
    const std::uint64_t m = loads.size();
    const bool two_choice = config.beta >= 1.0 || rng.bernoulli(config.beta);
    std::size_t bin = rng.uniform_index(m);
    if (two_choice) {
      const std::size_t other = rng.uniform_index(m);
      const auto& current = tracker.loads();
      bin = lighter_of(bin, current[bin], other, current[other]);
    }
    tracker.add(bin, config.weight.sample(rng));
    run.max_gap = std::max(run.max_gap, tracker.gap());
    if (t % config.snapshot_every == 0) {
      run.trajectory.push_back(tracker.snapshot(t));
    }
  }
  run.loads = tracker.loads();
  return run;
}

void write_trajectory_csv(std::ostream& out,
                          std::span<const PotentialSnapshot> trajectory) {
  out << "step,phi,psi,gamma,gap,max,min,mean\n";
  for (const auto& s : trajectory) {
    out << s.step << ',' << format_number(s.phi) << ','
        << format_number(s.psi) << ',' << format_number(s.gamma) << ','
        << format_number(s.gap) << ',' << format_number(s.max) << ','
        << format_number(s.min) << ',' << format_number(s.mean) << '\n';
  }
}

}  // namespace relaxed
