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


#include "relaxed/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "relaxed/adversary.hpp"
#include "relaxed/balance.hpp"
#include "relaxed/csv.hpp"
#include "relaxed/dlin.hpp"
#include "relaxed/multicounter.hpp"
#include "relaxed/multiqueue.hpp"
#include "relaxed/stm.hpp"

namespace relaxed {

std::string resolve_out_dir(const ExperimentConfig& config) {
  std::string dir = config.get_string("out_dir");
  if (dir.empty()) {
    if (const char* env = std::getenv("RELAXED_OUT_DIR"); env != nullptr && *env != '\0') {
      dir = env;
    }
  }
  return dir.empty() ? std::string(".") : dir;
}

std::size_t hardware_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

namespace {

class Run {
 public:
  Run(const ExperimentConfig& config, std::ostream& log)
      : config_(config), log_(log), dir_(resolve_out_dir(config)) {
    prefix_ = config.get_string("out_prefix");
    if (prefix_.empty()) prefix_ = experiment_name(config.kind());
    std::filesystem::create_directories(dir_);
  }

  std::ofstream open(const std::string& suffix) {
    const std::string path = (std::filesystem::path(dir_) / (prefix_ + "_" + suffix)).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    config_.write_header(out);
    outcome_.files.push_back(path);
    log_ << "writing " << path << '\n';
    return out;
  }

  void violation(std::string what) {
    log_ << "ORACLE VIOLATION: " << what << '\n';
    outcome_.violations.push_back(std::move(what));
  }

  ExperimentOutcome finish() {
    if (!outcome_.violations.empty()) {
      auto out = open("diagnostics.txt");
      for (const auto& v : outcome_.violations) out << v << '\n';
      outcome_.exit_code = kOracleViolationExit;
    }
    return outcome_;
  }

  const ExperimentConfig& config() const { return config_; }
  std::ostream& log() { return log_; }

 private:
  const ExperimentConfig& config_;
  std::ostream& log_;
  std::string dir_;
  std::string prefix_;
  ExperimentOutcome outcome_;
};

std::uint64_t positive(const ExperimentConfig& c, std::string_view key) {
  const std::uint64_t v = c.get_uint(key);
  if (v == 0) throw std::invalid_argument("key '" + std::string(key) + "' must be positive");
  return v;
}

WeightDistribution weight_from(const ExperimentConfig& c) {
  const std::string name = c.get_string("weight");
  if (name == "unit") return WeightDistribution::unit();
  if (name == "exponential") return WeightDistribution::exponential(c.get_double("rate"));
  throw std::invalid_argument("key 'weight' must be unit or exponential, got '" + name + "'");
}

PotentialParams params_from(const ExperimentConfig& c, const WeightDistribution& w) {
  const double s = w.kind == WeightDistribution::Kind::unit ? 1.0 : 8.0;
  return PotentialParams::from_good_margin(c.get_double("gamma"), c.get_double("lambda"), s);
}

std::vector<std::size_t> thread_counts(const ExperimentConfig& c, bool sweep_when_empty) {
  std::vector<std::size_t> out;
  for (const std::uint64_t t : c.get_uint_list("threads")) {
    if (t == 0) throw std::invalid_argument("key 'threads' entries must be positive");
    out.push_back(static_cast<std::size_t>(t));
  }
  if (out.empty()) {
    if (sweep_when_empty) {
      for (std::size_t t = 1; t <= hardware_threads(); ++t) out.push_back(t);
    } else {
      out.push_back(hardware_threads());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void run_seq(Run& run) {
  const auto& c = run.config();
  const WeightDistribution weight = weight_from(c);
  const auto betas = c.get_double_list("betas");
  // Reject bad parameters before any file is written.
  positive(c, "m");
  positive(c, "snapshot_every");
  c.get_uint("steps");
  for (const double beta : betas) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
      throw std::invalid_argument("key 'betas' entries must lie in [0, 1]");
    }
  }
  auto summary = run.open("summary.csv");
  summary << "beta,seed,steps,max_gap,final_gap,final_gamma\n";
  for (const double beta : betas) {
    for (const std::uint64_t seed : c.get_uint_list("seeds")) {
      SequentialConfig sc;
      sc.m = positive(c, "m");
      sc.steps = c.get_uint("steps");
      sc.beta = beta;
      sc.weight = weight;
      sc.seed = seed;
      sc.snapshot_every = positive(c, "snapshot_every");
      sc.params = params_from(c, weight);
      const SequentialRun r = run_sequential(sc);
      auto out = run.open("beta" + format_number(beta) + "_seed" + std::to_string(seed) +
                          ".csv");
      write_trajectory_csv(out, r.trajectory);

      const auto w = r.loads.weights();
      const double recomputed = std::accumulate(w.begin(), w.end(), 0.0);
      if (weight.kind == WeightDistribution::Kind::unit &&
          r.loads.total() != static_cast<double>(sc.steps)) {
        run.violation("seq beta=" + format_number(beta) + " seed=" + std::to_string(seed) +
                      ": total weight " + format_number(r.loads.total()) + " != steps " +
                      std::to_string(sc.steps));
      }
      if (std::fabs(recomputed - r.loads.total()) > 1e-9 * std::max(1.0, recomputed)) {
        run.violation("seq seed=" + std::to_string(seed) + ": bin weights sum to " +
                      format_number(recomputed) + " but the running total is " +
                      format_number(r.loads.total()));
      }
      const double final_gamma = r.trajectory.empty() ? 0.0 : r.trajectory.back().gamma;
      summary << format_number(beta) << ',' << seed << ',' << sc.steps << ','
              << format_number(r.max_gap) << ',' << format_number(r.loads.gap()) << ','
              << format_number(final_gamma) << '\n';
      run.log() << "seq beta=" << beta << " seed=" << seed << " max_gap=" << r.max_gap << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

void run_sim(Run& run) {
  const auto& c = run.config();
  const WeightDistribution weight = weight_from(c);
  for (const std::string& name : c.get_string_list("adversaries")) parse_adversary(name);
  positive(c, "m");
  positive(c, "n");
  positive(c, "snapshot_every");
  if (!(c.get_double("ratio") > 0.0)) throw std::invalid_argument("key 'ratio' must be positive");
  auto summary = run.open("summary.csv");
  summary << "adversary,seed,ops,max_gap,final_gap,end_gamma_over_m,fraction_good,"
             "correct_among_good,untouched_among_good,cons_ops_violations,flagged_windows,"
             "read_cost_p99\n";
  for (const std::string& name : c.get_string_list("adversaries")) {
    for (const std::uint64_t seed : c.get_uint_list("seeds")) {
      SimConfig sc;
      sc.m = positive(c, "m");
      sc.n = positive(c, "n");
      sc.ratio = c.get_double("ratio");
      sc.total_ops = c.get_uint("ops");
      sc.adversary.kind = parse_adversary(name);
      sc.adversary.block = c.get_uint("block");
      sc.adversary.serial_stretch = c.get_uint("serial_stretch");
      sc.seed = seed;
      sc.schedule_seed = seed + c.get_uint("schedule_seed_offset");
      sc.weight = weight;
      sc.params = params_from(c, weight);
      sc.snapshot_every = positive(c, "snapshot_every");
      sc.reads_per_update = static_cast<std::uint32_t>(c.get_uint("reads_per_update"));
      sc.validate();

      const SimResult r = simulate(sc);
      const std::string tag = name + "_seed" + std::to_string(seed);
      {
        auto out = run.open(tag + "_trajectory.csv");
        write_trajectory_csv(out, r.trajectory);
      }
      const auto windows = drift_report(r.trajectory, r.records, sc, c.get_double("gamma_limit"));
      {
        auto out = run.open(tag + "_drift.csv");
        write_drift_csv(out, windows);
      }
      if (c.get_bool("write_records")) {
        auto out = run.open(tag + "_ops.csv");
        write_records_csv(out, r.records);
      }

      if (r.records.size() != sc.total_ops) {
        run.violation("sim " + tag + ": " + std::to_string(r.records.size()) +
                      " operations completed, expected " + std::to_string(sc.total_ops));
      }
      if (weight.kind == WeightDistribution::Kind::unit &&
          r.loads.total() != static_cast<double>(r.records.size())) {
        run.violation("sim " + tag + ": total weight " + format_number(r.loads.total()) +
                      " != completed operations " + std::to_string(r.records.size()));
      }
      const std::uint64_t threshold = sc.contention_threshold();
      const ConsOpsCheck cons = check_cons_ops(r.records, sc.n, threshold, threshold);
      if (cons.violations != 0) {
        run.violation("sim " + tag + ": " + std::to_string(cons.violations) +
                      " windows of " + std::to_string(threshold) + " operations held " +
                      std::to_string(sc.n) + " or more high-contention operations");
      }
      const Classification cls = classify_operations(r.records, sc);
      std::uint64_t flagged = 0;
      for (const auto& w : windows) flagged += w.flagged;

      std::string p99 = "";
      if (sc.reads_per_update > 0 && weight.kind == WeightDistribution::Kind::unit) {
        const auto samples = linearize_costs(r.history, ObjectKind::counter, sc.m);
        const auto reads = costs_of(samples, OpKind::read);
        if (!reads.empty()) {
          const double rs[] = {1.0, 2.0, 4.0, 8.0};
          const TailReport report = tail_report(reads, sc.m, rs);
          auto out = run.open(tag + "_read_costs.csv");
          write_tail_report_csv(out, report);
          p99 = format_number(report.p99);
        }
      }
      const double end_gamma = r.trajectory.empty() ? 0.0 : r.trajectory.back().gamma;
      summary << name << ',' << seed << ',' << sc.total_ops << ',' << format_number(r.max_gap)
              << ',' << format_number(r.loads.gap()) << ','
              << format_number(end_gamma / static_cast<double>(sc.m)) << ','
              << format_number(cls.fraction_good) << ','
              << format_number(cls.correct_among_good) << ','
              << format_number(cls.untouched_among_good) << ',' << cons.violations << ','
              << flagged << ',' << p99 << '\n';
      run.log() << "sim " << tag << " max_gap=" << r.max_gap << " good=" << cls.fraction_good
                << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

struct CounterTiming {
  double ops_per_sec = 0.0;
  std::uint64_t ops = 0;
  std::uint64_t total = 0;  // what the counter says at quiescence
  double gap = 0.0;
};

template <typename Body>
std::uint64_t timed_workers(std::size_t threads, std::chrono::milliseconds duration,
                            double& seconds, Body body) {
  std::atomic<bool> go{false};
  std::atomic<bool> stop{false};
  std::vector<std::uint64_t> counts(threads, 0);
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
      std::uint64_t done = 0;
      while (!stop.load(std::memory_order_relaxed)) {
        for (int k = 0; k < 256; ++k) body(t);
        done += 256;
      }
      counts[t] = done;
    });
  }
  const auto begin = std::chrono::steady_clock::now();
  go.store(true, std::memory_order_release);
  std::this_thread::sleep_for(duration);
  stop.store(true);
  for (auto& w : workers) w.join();
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

template <typename Counter>
CounterTiming time_multicounter(std::size_t threads, std::size_t cells,
                                std::chrono::milliseconds duration, std::uint64_t seed) {
  Counter counter(cells);
  std::vector<Rng> rngs;
  for (std::size_t t = 0; t < threads; ++t) rngs.push_back(Rng(seed).split(t));
  double seconds = 0.0;
  CounterTiming out;
  out.ops = timed_workers(threads, duration, seconds,
                          [&](std::size_t t) { counter.increment(rngs[t]); });
  out.ops_per_sec = static_cast<double>(out.ops) / seconds;
  out.total = counter.exact_total();
  out.gap = static_cast<double>(counter.max_cell() - counter.min_cell());
  return out;
}

CounterTiming time_exact_counter(std::size_t threads, std::chrono::milliseconds duration) {
  alignas(kCacheLine) std::atomic<std::uint64_t> counter{0};
  double seconds = 0.0;
  CounterTiming out;
  out.ops = timed_workers(threads, duration, seconds, [&](std::size_t) {
    counter.fetch_add(1, std::memory_order_seq_cst);
  });
  out.ops_per_sec = static_cast<double>(out.ops) / seconds;
  out.total = counter.load();
  return out;
}

void run_counter_scalability(Run& run) {
  const auto& c = run.config();
  const std::chrono::milliseconds duration(positive(c, "duration_ms"));
  const std::uint64_t repeats = positive(c, "repeats");
  const std::uint64_t seed = c.get_uint_list("seeds").empty() ? 1 : c.get_uint_list("seeds")[0];
  auto out = run.open("scalability.csv");
  out << "threads,ratio,cells,layout,ops_per_sec,ops_per_sec_std,final_gap,runs\n";
  for (const std::size_t threads : thread_counts(c, true)) {
    for (const std::string& layout : c.get_string_list("layouts")) {
      if (layout != "padded" && layout != "plain" && layout != "exact") {
        throw std::invalid_argument("key 'layouts' entries must be padded, plain or exact");
      }
      const auto ratios = layout == "exact" ? std::vector<std::uint64_t>{0}
                                            : c.get_uint_list("ratios");
      for (const std::uint64_t ratio : ratios) {
        const std::size_t cells = layout == "exact" ? 1 : std::max<std::size_t>(1, ratio * threads);
        std::vector<double> rates;
        double gap = 0.0;
        for (std::uint64_t rep = 0; rep < repeats; ++rep) {
          CounterTiming t;
          if (layout == "exact") {
            t = time_exact_counter(threads, duration);
          } else if (layout == "padded") {
            t = time_multicounter<PaddedMultiCounter>(threads, cells, duration, seed + rep);
          } else {
            t = time_multicounter<PlainMultiCounter>(threads, cells, duration, seed + rep);
          }
          if (t.total != t.ops) {
            run.violation("counter " + layout + " threads=" + std::to_string(threads) +
                          ": counter holds " + std::to_string(t.total) + " after " +
                          std::to_string(t.ops) + " increments");
          }
          rates.push_back(t.ops_per_sec);
          gap = t.gap;
        }
        const MeanStd ms = mean_std(rates);
        out << threads << ',' << ratio << ',' << cells << ',' << layout << ','
            << format_number(ms.mean) << ',' << format_number(ms.std) << ','
            << format_number(gap) << ',' << repeats << '\n';
        run.log() << "counter " << layout << " threads=" << threads << " C=" << ratio
                  << " ops/s=" << ms.mean << '\n';
      }
    }
  }
}

void run_counter_quality(Run& run) {
  const auto& c = run.config();
  const std::size_t m = positive(c, "m");
  const std::uint64_t increments = c.get_uint("increments");
  const std::uint64_t every = positive(c, "log_every");
  for (const std::uint64_t seed : c.get_uint_list("seeds")) {
    MultiCounter counter(m);
    Rng rng(seed);
    auto out = run.open("quality_seed" + std::to_string(seed) + ".csv");
    out << "increments,read_value,exact,error,gap\n";
    std::vector<double> errors;
    for (std::uint64_t k = 1; k <= increments; ++k) {
      counter.increment(rng);
      if (k % every == 0) {
        const std::uint64_t value = counter.read(rng);
        const double error = std::fabs(static_cast<double>(value) - static_cast<double>(k));
        errors.push_back(error);
        out << k << ',' << value << ',' << k << ',' << format_number(error) << ','
            << (counter.max_cell() - counter.min_cell()) << '\n';
      }
    }
    if (counter.exact_total() != increments) {
      run.violation("counter quality seed=" + std::to_string(seed) + ": counter holds " +
                    std::to_string(counter.exact_total()) + " after " +
                    std::to_string(increments) + " increments");
    }
    if (!errors.empty()) {
      const double rs[] = {1.0, 2.0, 4.0, 8.0};
      auto tail = run.open("quality_seed" + std::to_string(seed) + "_tail.csv");
      write_tail_report_csv(tail, tail_report(errors, m, rs));
    }
  }
}

// ---------------------------------------------------------------------------

void run_queue_rank(Run& run) {
  const auto& c = run.config();
  const std::size_t m = positive(c, "m");
  auto summary = run.open("rank_summary.csv");
  summary << "seed,m,samples,mean_rank,p99_rank,max_rank,mean_over_m,p99_over_m_ln_m\n";
  for (const std::uint64_t seed : c.get_uint_list("seeds")) {
    const auto samples =
        measure_dequeue_ranks(m, c.get_uint("prefill"), c.get_uint("dequeues"), seed);
    {
      auto out = run.open("rank_seed" + std::to_string(seed) + ".csv");
      write_rank_csv(out, samples);
    }
    if (samples.empty()) continue;
    std::vector<double> ranks;
    ranks.reserve(samples.size());
    for (const auto& s : samples) ranks.push_back(static_cast<double>(s.rank));
    const TailReport report = tail_report(ranks, m, {});
    const double md = static_cast<double>(m);
    summary << seed << ',' << m << ',' << report.count << ',' << format_number(report.mean)
            << ',' << format_number(report.p99) << ',' << format_number(report.max) << ','
            << format_number(report.mean / md) << ','
            << format_number(m > 1 ? report.p99 / (md * std::log(md)) : 0.0) << '\n';
    run.log() << "queue rank seed=" << seed << " mean=" << report.mean << " p99=" << report.p99
              << '\n';
  }
}

void run_queue_integrity(Run& run) {
  const auto& c = run.config();
  std::size_t threads = c.get_uint("threads");
  if (threads == 0) threads = hardware_threads();
  const std::size_t m = positive(c, "m");
  auto out = run.open("integrity.csv");
  out << "seed,threads,m,seconds,enqueued,dequeued,drained,empty_probes,lost,duplicated,"
         "order_violations\n";
  for (const std::uint64_t seed : c.get_uint_list("seeds")) {
    const QueueStressResult r = run_queue_stress(
        threads, m, std::chrono::milliseconds(positive(c, "duration_ms")), seed);
    out << seed << ',' << threads << ',' << m << ',' << format_number(r.seconds) << ','
        << r.enqueued << ',' << r.dequeued << ',' << r.drained << ',' << r.empty_probes << ','
        << r.lost << ',' << r.duplicated << ',' << r.order_violations << '\n';
    if (!r.ok()) {
      run.violation("queue integrity seed=" + std::to_string(seed) + ": lost=" +
                    std::to_string(r.lost) + " duplicated=" + std::to_string(r.duplicated) +
                    " order_violations=" + std::to_string(r.order_violations));
    }
  }
}

// ---------------------------------------------------------------------------

void run_stm(Run& run) {
  const auto& c = run.config();
  const std::uint64_t repeats = positive(c, "repeats");
  const auto seeds = c.get_uint_list("seeds");
  const std::uint64_t seed = seeds.empty() ? 1 : seeds[0];
  for (const std::uint64_t objects : c.get_uint_list("objects")) {
    if (objects == 0) throw std::invalid_argument("key 'objects' entries must be positive");
    auto out = run.open("objects" + std::to_string(objects) + ".csv");
    out << "threads,objects,clock,delta,commits_per_sec,aborts_per_commit,consistent,"
           "commits_per_sec_std,aborts_per_commit_std,runs\n";
    for (const std::size_t threads : thread_counts(c, false)) {
      for (const std::string& clock : c.get_string_list("clocks")) {
        StmBenchConfig bc;
        bc.threads = threads;
        bc.objects = objects;
        bc.duration = std::chrono::milliseconds(positive(c, "duration_ms"));
        bc.clock = parse_clock(clock);
        bc.cells_per_thread = positive(c, "cells_per_thread");
        bc.delta = c.get_uint("delta");
        bc.pin_threads = c.get_bool("pin");
        bc.backoff_limit = static_cast<std::uint32_t>(c.get_uint("backoff"));
        std::vector<double> rates;
        std::vector<double> abort_rates;
        bool consistent = true;
        std::uint64_t delta = 0;
        for (std::uint64_t rep = 0; rep < repeats; ++rep) {
          bc.seed = seed + rep;
          const StmBenchResult r = run_stm_benchmark(bc);
          if (bc.pin_threads && r.pinned != threads) {
            run.log() << "stm: pinned " << r.pinned << " of " << threads << " workers\n";
          }
          rates.push_back(r.commits_per_sec);
          abort_rates.push_back(r.aborts_per_commit);
          delta = r.delta;
          if (!r.consistent) {
            consistent = false;
            run.violation("stm " + clock + " threads=" + std::to_string(threads) +
                          " objects=" + std::to_string(objects) + " run " +
                          std::to_string(rep) + ": cells sum to " +
                          std::to_string(r.final_sum) + " after " + std::to_string(r.commits) +
                          " commits (expected " + std::to_string(2 * r.commits) + ")");
          }
        }
        const MeanStd cr = mean_std(rates);
        const MeanStd ar = mean_std(abort_rates);
        out << threads << ',' << objects << ',' << clock << ',' << delta << ','
            << format_number(cr.mean) << ',' << format_number(ar.mean) << ','
            << (consistent ? "true" : "false") << ',' << format_number(cr.std) << ','
            << format_number(ar.std) << ',' << repeats << '\n';
        run.log() << "stm " << clock << " M=" << objects << " threads=" << threads
                  << " commits/s=" << cr.mean << " aborts/commit=" << ar.mean << '\n';
      }
    }
  }
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.check_required();
  Run run(config, log);
  switch (config.kind()) {
    case Experiment::seq:
      run_seq(run);
      break;
    case Experiment::sim:
      run_sim(run);
      break;
    case Experiment::counter: {
      const std::string mode = config.get_string("mode");
      if (mode == "scalability") {
        run_counter_scalability(run);
      } else if (mode == "quality") {
        run_counter_quality(run);
      } else {
        throw std::invalid_argument("key 'mode' must be scalability or quality, got '" + mode +
                                    "'");
      }
      break;
    }
    case Experiment::queue: {
      const std::string mode = config.get_string("mode");
      if (mode == "rank") {
        run_queue_rank(run);
      } else if (mode == "integrity") {
        run_queue_integrity(run);
      } else {
        throw std::invalid_argument("key 'mode' must be rank or integrity, got '" + mode + "'");
      }
      break;
    }
    case Experiment::stm:
      run_stm(run);
      break;
  }
  return run.finish();
}

}  // namespace relaxed
