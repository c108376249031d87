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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "relaxed/experiments.hpp"

using namespace relaxed;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("relaxed_test_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// First line after the comment header.
std::string column_header(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') return line;
  }
  return {};
}

ExperimentOutcome run(ExperimentConfig& c, const TempDir& dir, const std::string& text) {
  c.set("out_dir", dir.path.string());
  c.load_text(text);
  std::ostringstream log;
  return run_experiment(c, log);
}

}  // namespace

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto ms = mean_std(v);
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.std == doctest::Approx(1.2909944));
  CHECK(mean_std(std::vector<double>{7.0}).std == 0.0);
}

TEST_CASE("output directory resolution") {
  ExperimentConfig c(Experiment::seq);
  c.set("out_dir", "/tmp/explicit");
  CHECK(resolve_out_dir(c) == "/tmp/explicit");
}

TEST_CASE("sequential runs are reproducible and self-describing") {
  TempDir a("seq_a");
  TempDir b("seq_b");
  const std::string text = "m=16\nsteps=5000\nbetas=0.5,1\nseeds=1,2\nsnapshot_every=100\n";
  ExperimentConfig ca(Experiment::seq);
  ExperimentConfig cb(Experiment::seq);
  const auto ra = run(ca, a, text);
  const auto rb = run(cb, b, text);
  CHECK(ra.exit_code == 0);
  REQUIRE(ra.files.size() == 5);  // summary + 2 betas x 2 seeds
  for (std::size_t k = 0; k < ra.files.size(); ++k) {
    const auto body_a = slurp(ra.files[k]);
    const auto body_b = slurp(rb.files[k]);
    // Headers differ only in out_dir.
    CHECK(body_a.substr(body_a.find("\n#", body_a.find("out_dir"))) ==
          body_b.substr(body_b.find("\n#", body_b.find("out_dir"))));
    CHECK(body_a.rfind("# experiment=seq\n", 0) == 0);
  }
  CHECK(column_header(ra.files[0]) == "beta,seed,steps,max_gap,final_gap,final_gamma");
  CHECK(fs::exists(a.path / "seq_beta0.5_seed2.csv"));
  CHECK(column_header((a.path / "seq_beta1_seed1.csv").string()) ==
        "step,phi,psi,gamma,gap,max,min,mean");
}

TEST_CASE("simulator experiment writes summary, trajectory, drift and read costs") {
  TempDir d("sim");
  ExperimentConfig c(Experiment::sim);
  const auto r = run(c, d,
                     "m=64\nn=2\nratio=4\nops=3000\nseeds=1\nadversaries=stampede\n"
                     "reads_per_update=1\nwrite_records=true\nsnapshot_every=10\n");
  CHECK(r.exit_code == 0);
  CHECK(r.violations.empty());
  CHECK(fs::exists(d.path / "sim_summary.csv"));
  CHECK(fs::exists(d.path / "sim_stampede_seed1_trajectory.csv"));
  CHECK(fs::exists(d.path / "sim_stampede_seed1_drift.csv"));
  CHECK(fs::exists(d.path / "sim_stampede_seed1_ops.csv"));
  CHECK(fs::exists(d.path / "sim_stampede_seed1_read_costs.csv"));
}

TEST_CASE("counter quality and scalability runs") {
  TempDir d("counter");
  ExperimentConfig q(Experiment::counter);
  auto r = run(q, d, "mode=quality\nm=16\nincrements=10000\nlog_every=100\nseeds=3\n");
  CHECK(r.exit_code == 0);
  CHECK(column_header((d.path / "counter_quality_seed3.csv").string()) ==
        "increments,read_value,exact,error,gap");
  ExperimentConfig s(Experiment::counter);
  r = run(s, d, "threads=1,2\nratios=1\nlayouts=padded,exact\nduration_ms=20\nrepeats=2\n");
  CHECK(r.exit_code == 0);
  CHECK(column_header((d.path / "counter_scalability.csv").string()) ==
        "threads,ratio,cells,layout,ops_per_sec,ops_per_sec_std,final_gap,runs");
}

TEST_CASE("queue rank and integrity runs") {
  TempDir d("queue");
  ExperimentConfig rank(Experiment::queue);
  auto r = run(rank, d, "m=8\nprefill=2000\ndequeues=1000\nseeds=1\n");
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(d.path / "queue_rank_seed1.csv"));
  ExperimentConfig integrity(Experiment::queue);
  r = run(integrity, d, "mode=integrity\nthreads=2\nm=4\nduration_ms=100\nseeds=1\n");
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(d.path / "queue_integrity.csv"));
}

TEST_CASE("stm run writes one csv per array size") {
  TempDir d("stm");
  ExperimentConfig c(Experiment::stm);
  const auto r = run(c, d, "threads=1,2\nobjects=100,1000\nduration_ms=20\nrepeats=2\n");
  CHECK(r.exit_code == 0);
  const auto path = (d.path / "stm_objects100.csv").string();
  CHECK(column_header(path).rfind(
            "threads,objects,clock,delta,commits_per_sec,aborts_per_commit,consistent", 0) == 0);
  CHECK(fs::exists(d.path / "stm_objects1000.csv"));
}

TEST_CASE("bad parameters throw before anything runs") {
  TempDir d("bad");
  ExperimentConfig c(Experiment::sim);
  CHECK_THROWS_AS(run(c, d, "adversaries=chaos\nops=10\n"), std::invalid_argument);
  ExperimentConfig s(Experiment::seq);
  CHECK_THROWS_AS(run(s, d, "weight=heavy\n"), std::invalid_argument);
}

TEST_CASE("rejected parameters leave no files behind") {
  TempDir d("nofiles");
  ExperimentConfig s(Experiment::seq);
  CHECK_THROWS_AS(run(s, d, "m=0\n"), std::invalid_argument);
  ExperimentConfig b(Experiment::seq);
  CHECK_THROWS_AS(run(b, d, "betas=1.5\n"), std::invalid_argument);
  ExperimentConfig m(Experiment::sim);
  CHECK_THROWS_AS(run(m, d, "n=0\n"), std::invalid_argument);
  CHECK((!fs::exists(d.path) || fs::is_empty(d.path)));
}
