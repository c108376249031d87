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


#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "relaxed/balance.hpp"

using namespace relaxed;

TEST_CASE("load vector keeps an exact running total") {
  LoadVector x(4);
  CHECK(x.total() == 0.0);
  CHECK(x.gap() == 0.0);
  x.add(2, 3.0);
  x.add(0, 1.0);
  CHECK(x.total() == 4.0);
  CHECK(x.mean() == 1.0);
  CHECK(x.max() == 3.0);
  CHECK(x.min() == 0.0);
  CHECK(x.gap() == 3.0);
  CHECK(x.centered(2) == 2.0);
}

TEST_CASE("rank order is stable on ties") {
  const LoadVector x(std::vector<double>{2.0, 1.0, 2.0, 0.0});
  const std::vector<std::size_t> expected = {3, 1, 0, 2};
  CHECK(x.rank_order() == expected);
}

TEST_CASE("potential of equal loads is 2m with zero gap") {
  for (double alpha : {0.001, 0.5, 3.0}) {
    const LoadVector x(std::vector<double>(10, 7.0));
    const auto s = potential(x, PotentialParams::with_alpha(alpha));
    CHECK(s.phi == doctest::Approx(10.0));
    CHECK(s.psi == doctest::Approx(10.0));
    CHECK(s.gamma == doctest::Approx(20.0));
    CHECK(s.gap == 0.0);
  }
}

TEST_CASE("potential of a symmetric pair") {
  // y = (1, -1), alpha = 1: Phi = Psi = e + 1/e.
  const LoadVector x(std::vector<double>{2.0, 0.0});
  const auto s = potential(x, PotentialParams::with_alpha(1.0));
  const double expected = 2.0 * (std::exp(1.0) + std::exp(-1.0));
  CHECK(s.gamma == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s.gamma == doctest::Approx(6.1724).epsilon(1e-4));
  CHECK(s.phi == doctest::Approx(s.psi));
}

TEST_CASE("potential matches direct evaluation on random loads") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(1 + rng.uniform_index(40));
    for (auto& v : w) v = std::floor(rng.uniform01() * 30.0);
    const double alpha = 0.01 + rng.uniform01();
    const auto s = potential(LoadVector(w), PotentialParams::with_alpha(alpha));
    CHECK(s.gamma == doctest::Approx(oracle::potential_gamma(w, alpha)).epsilon(1e-12));
    CHECK(s.gap >= 0.0);
  }
}

TEST_CASE("potential refuses exponent overflow") {
  const LoadVector x(std::vector<double>{2000.0, 0.0});
  CHECK_THROWS_AS(potential(x, PotentialParams::with_alpha(1.0)), std::out_of_range);
}

TEST_CASE("standard potential constants") {
  CHECK(PotentialParams::standard().alpha == doctest::Approx(1.0 / 180.0));
  CHECK(PotentialParams::standard(WeightDistribution::Kind::exponential).alpha ==
        doctest::Approx(1.0 / 1440.0));
  const auto p = PotentialParams::from_good_margin(0.2);
  CHECK(p.epsilon == doctest::Approx(0.2 / 6.0));
  CHECK(p.beta == doctest::Approx(0.4));
  CHECK(PotentialParams::alpha_for(10.0, 1.0, 1.0) == 0.5);  // lambda / 2 binds
}

TEST_CASE("one_plus_beta probabilities match the rank-minimum derivation") {
  for (std::size_t m : {1u, 2u, 3u, 17u, 64u, 1000u}) {
    for (double beta : {0.0, 0.25, 0.5, 1.0}) {
      const auto p = one_plus_beta_probabilities(m, beta);
      REQUIRE(p.size() == m);
      CHECK(p.valid(1e-12));
      for (std::size_t i = 1; i <= m; ++i) {
        CHECK(p[i - 1] == doctest::Approx(oracle::one_plus_beta(m, beta, i)).epsilon(1e-12));
      }
      for (std::size_t k = 0; k <= m; ++k) {
        CHECK(std::fabs(p.prefix_sum(k) - one_plus_beta_prefix(m, beta, k)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("one_plus_beta edge cases") {
  const auto uniform = one_plus_beta_probabilities(4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(uniform[i] == doctest::Approx(0.25));
  const auto two = one_plus_beta_probabilities(2, 1.0);
  CHECK(two[0] == doctest::Approx(0.75));
  CHECK(two[1] == doctest::Approx(0.25));
  CHECK(one_plus_beta_probabilities(1, 0.5)[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(one_plus_beta_probabilities(0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(one_plus_beta_probabilities(4, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(one_plus_beta_probabilities(4, -0.1), std::invalid_argument);
}

TEST_CASE("bad and good step vectors") {
  for (std::size_t m : {1u, 2u, 10u, 257u}) {
    const auto bad = bad_step_probabilities(m);
    CHECK(bad.valid());
    const double m2 = static_cast<double>(m * m);
    for (std::size_t i = 1; i <= m; ++i) {
      CHECK(bad[i - 1] == doctest::Approx((2.0 * static_cast<double>(i) - 1.0) / m2));
    }
    CHECK(good_step_probabilities(m, 0.7).valid());
  }
  // rho = 1 is pure two-choice, rho = 1/2 is uniform.
  const auto pure = good_step_probabilities(50, 1.0);
  const auto two = one_plus_beta_probabilities(50, 1.0);
  const auto flat = good_step_probabilities(50, 0.5);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(pure[i] == doctest::Approx(two[i]));
    CHECK(flat[i] == doctest::Approx(0.02));
  }
}

TEST_CASE("probability vectors stay valid up to m = 10^4") {
  for (std::size_t m : {1000u, 4096u, 10000u}) {
    CHECK(one_plus_beta_probabilities(m, 0.3).valid(1e-12));
    CHECK(bad_step_probabilities(m).valid(1e-12));
    CHECK(good_step_probabilities(m, 0.7).valid(1e-12));
  }
}

TEST_CASE("good steps dominate the (1+beta) process for beta <= 2 gamma") {
  for (double gamma : {0.05, 0.2, 0.4}) {
    const double rho = 0.5 + gamma;
    for (double beta : {0.0, gamma, 2.0 * gamma}) {
      for (std::size_t m = 2; m <= 256; ++m) {
        const auto good = good_step_probabilities(m, rho);
        const auto opb = one_plus_beta_probabilities(m, beta);
        for (std::size_t k = 1; k <= m; ++k) {
          REQUIRE(good.prefix_sum(k) >= opb.prefix_sum(k) - 1e-12);
        }
      }
    }
  }
}

TEST_CASE("two-choice step follows the strict minimum") {
  CHECK(lighter_of(0, 0.0, 1, 5.0) == 0);
  CHECK(lighter_of(0, 5.0, 1, 0.0) == 1);
  CHECK(lighter_of(3, 2.0, 1, 2.0) == 1);  // tie to the lower index
  LoadVector single(1);
  Rng rng(5);
  for (int k = 0; k < 10; ++k) step_one_plus_beta(single, 1.0, WeightDistribution::unit(), rng);
  CHECK(single[0] == 10.0);
}

TEST_CASE("sampling by rank uses the probability vector") {
  // All mass on the heaviest rank: always the most loaded bin.
  ProbabilityVector heaviest{{0.0, 0.0, 1.0}};
  LoadVector x(std::vector<double>{1.0, 5.0, 3.0});
  Rng rng(3);
  for (int k = 0; k < 5; ++k) {
    CHECK(step_with_probabilities(x, heaviest, WeightDistribution::unit(), rng) == 1);
  }
  CHECK(x[1] == 10.0);
}

TEST_CASE("weight distributions") {
  Rng rng(9);
  const auto unit = WeightDistribution::unit();
  Rng before = rng;
  CHECK(unit.sample(rng) == 1.0);
  CHECK(rng() == before());  // unit weights draw nothing
  const auto expo = WeightDistribution::exponential(2.0);
  CHECK(expo.mean() == doctest::Approx(1.0));
  double sum = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double w = expo.sample(rng);
    REQUIRE(w > 0.0);
    sum += w;
  }
  CHECK(sum / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(WeightDistribution::exponential(2.0, 1.0).mean() == doctest::Approx(0.5));
}

TEST_CASE("potential tracker agrees with direct evaluation") {
  for (auto kind : {WeightDistribution::Kind::unit, WeightDistribution::Kind::exponential}) {
    const WeightDistribution w =
        kind == WeightDistribution::Kind::unit ? WeightDistribution::unit()
                                               : WeightDistribution::exponential(1.0);
    const auto params = PotentialParams::with_alpha(0.05);
    PotentialTracker tracker(LoadVector(33), params.alpha);
    LoadVector plain(33);
    Rng rng(17);
    for (int step = 0; step < 20000; ++step) {
      const std::size_t bin = rng.uniform_index(33);
      const double weight = w.sample(rng);
      tracker.add(bin, weight);
      plain.add(bin, weight);
      if (step % 97 == 0) {
        const auto fast = tracker.snapshot(step);
        const auto slow = potential(plain, params, step);
        REQUIRE(fast.gamma == doctest::Approx(slow.gamma).epsilon(1e-9));
        REQUIRE(fast.phi == doctest::Approx(slow.phi).epsilon(1e-9));
        REQUIRE(fast.gap == doctest::Approx(slow.gap).epsilon(1e-12));
        REQUIRE(fast.min == slow.min);
        REQUIRE(fast.max == slow.max);
      }
    }
  }
}

TEST_CASE("run_sequential with zero steps") {
  SequentialConfig c;
  c.m = 4;
  c.steps = 0;
  const auto run = run_sequential(c);
  CHECK(run.trajectory.empty());
  CHECK(run.loads == LoadVector(4));
}

TEST_CASE("run_sequential conserves unit balls and is deterministic") {
  SequentialConfig c;
  c.m = 16;
  c.steps = 5000;
  c.snapshot_every = 7;
  const auto a = run_sequential(c);
  const auto b = run_sequential(c);
  CHECK(a.loads.total() == 5000.0);
  CHECK(a.loads == b.loads);
  REQUIRE(a.trajectory.size() == 5000 / 7);
  CHECK(a.trajectory.front().step == 7);
  for (std::size_t k = 0; k < a.trajectory.size(); ++k) {
    CHECK(a.trajectory[k].gamma == b.trajectory[k].gamma);
    CHECK(a.trajectory[k].mean == doctest::Approx(static_cast<double>(7 * (k + 1)) / 16.0));
  }
  c.seed = 2;
  CHECK_FALSE(run_sequential(c).loads == a.loads);
}

TEST_CASE("run_sequential matches the reference two-choice process step for step") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SequentialConfig c;
    c.m = 64;
    c.steps = 20000;
    c.seed = seed;
    const auto run = run_sequential(c);
    oracle::TwoChoice ref(64, seed);
    REQUIRE(run.trajectory.size() == c.steps);
    for (std::uint64_t t = 0; t < c.steps; ++t) {
      ref.step();
      REQUIRE(run.trajectory[t].gap == static_cast<double>(ref.gap()));
    }
    for (std::size_t j = 0; j < 64; ++j) CHECK(run.loads[j] == static_cast<double>(ref.x[j]));
  }
}

TEST_CASE("two-choice gap at m = 64 after 10^5 balls (seed-frozen)") {
  // Values come from the reference process in oracles.hpp.
  const double frozen[] = {9, 9, 10, 9, 8};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SequentialConfig c;
    c.m = 64;
    c.steps = 100000;
    c.seed = seed;
    c.snapshot_every = 1000;
    CHECK(run_sequential(c).max_gap == frozen[seed - 1]);
  }
}

TEST_CASE("two-choice potential stays O(m) while one choice diverges") {
  SequentialConfig c;
  c.m = 64;
  c.steps = 1000000;
  c.snapshot_every = 100;
  const auto two = run_sequential(c);
  double worst = 0.0;
  for (const auto& s : two.trajectory) worst = std::max(worst, s.gamma);
  CHECK(worst <= 40.0 * 64.0);

  c.beta = 0.0;
  const auto one = run_sequential(c);
  bool exceeded = false;
  for (const auto& s : one.trajectory) exceeded = exceeded || s.gap > 4.0 * std::log2(64.0);
  CHECK(exceeded);
}

TEST_CASE("trajectory csv") {
  std::ostringstream out;
  write_trajectory_csv(out, std::vector<PotentialSnapshot>{{3, 1.0, 2.0, 3.0, 4.0, 5.0, 1.0, 2.5}});
  CHECK(out.str() == "step,phi,psi,gamma,gap,max,min,mean\n3,1,2,3,4,5,1,2.5\n");
}
