#include <filesystem>
#include <fstream>
#include <sstream>

#include "crc/error.hpp"
#include "crc/experiment.hpp"
#include "crc/synthetic.hpp"
#include "doctest.h"

using namespace crc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_blobs(const fs::path& dir, std::size_t size) {
  auto spec = synthetic_preset("blobs");
  spec.size = size;
  Rng rng(1);
  const auto path = dir / "blobs.csv";
  write_csv(path, generate_synthetic(spec, rng));
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

ExperimentConfig small(const fs::path& data) {
  ExperimentConfig c;
  c.data = data.string();
  c.n = 6;
  c.m_v = 20;
  c.t_max = 8;
  c.repetitions = 2;
  c.test_size = 100;
  return c;
}

}  // namespace

TEST_CASE("empty config gives the reference defaults") {
  const auto c = parse_config("");
  CHECK(c.n == 50);
  CHECK(c.m_v == 50);
  CHECK(c.t_max == 64);
  CHECK(c.iter == 1);
  CHECK(c.lr == 0.05);
  CHECK(!c.m0.has_value());
  CHECK(c.resolved_m0() == doctest::Approx(1000.0).epsilon(1e-15));
  CHECK(c.topology == TopologySpec{});
  CHECK(c.neighborhood == NeighborhoodMode::closed);
  CHECK(c.partition == PartitionMode::iid);
  CHECK(!c.delta.has_value());
  CHECK(c.repetitions == 5);
  CHECK(c.resolved_train_size() == 2500);
  CHECK(c.standardize);
}

TEST_CASE("flags override file values") {
  const auto c = parse_config("iter = 1\n", {{"iter", "3"}});
  CHECK(c.iter == 3);
}

TEST_CASE("config parsing") {
  const auto c = parse_config(
      "# comment\n"
      "data = some/file.csv   # trailing comment\n"
      "topology = tree+80\n"
      "m0 = 250.5\n"
      "delta = 4\n"
      "partition = drift_xy\n"
      "neighborhood = open\n"
      "dump_params = yes\n");
  CHECK(c.data == "some/file.csv");
  CHECK(c.topology == TopologySpec{TopologySpec::Kind::tree, 80});
  CHECK(*c.m0 == 250.5);
  CHECK(*c.delta == 4);
  CHECK(c.partition == PartitionMode::drift_xy);
  CHECK(c.neighborhood == NeighborhoodMode::open);
  CHECK(c.dump_params);
  CHECK(!parse_config("m0 = heuristic\n").m0.has_value());
  CHECK(!parse_config("delta = inf\n").delta.has_value());
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("colour = red\n"), Error);
  CHECK_THROWS_AS(parse_config("n = many\n"), Error);
  CHECK_THROWS_AS(parse_config("lr = 0\n"), Error);
  CHECK_THROWS_AS(parse_config("n = 1\n"), Error);  // a tree needs two nodes
  CHECK_NOTHROW(parse_config("n = 1\ntopology = full\n"));
  CHECK_THROWS_AS(parse_config("n = 10\ntopology = tree+40\n"), Error);
  CHECK_THROWS_AS(parse_config("iter = 0\n"), Error);
  CHECK_THROWS_AS(parse_config("delta = 0\n"), Error);
  CHECK_THROWS_AS(parse_config("n = 5\nn = 6\n"), Error);
  CHECK_THROWS_AS(parse_config("just words\n"), Error);
  CHECK_THROWS_AS(parse_config("", {{"bogus", "1"}}), Error);
  CHECK_THROWS_AS(parse_config("name = a/b\n"), Error);
  CHECK_THROWS_AS(parse_config("train_size = 10\n"), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), Error);
}

TEST_CASE("config text round-trips") {
  ExperimentConfig c;
  c.data = "x.csv";
  c.m0 = 0.1 + 0.2;
  c.lr = 1.0 / 3;
  c.delta = 2;
  c.train_size = 3000;
  c.test_size = 17;
  c.seed = 18446744073709551615ULL;
  c.topology = {TopologySpec::Kind::tree, 12};
  c.partition = PartitionMode::drift_y;
  c.m_total = 12800;
  c.dump_params = true;
  c.standardize = false;
  c.threads = 0;
  CHECK(parse_config(to_config_text(c)) == c);
  const ExperimentConfig defaults;
  CHECK(parse_config(to_config_text(defaults)) == defaults);
}

TEST_CASE("repetition seeds step by a fixed increment") {
  ExperimentConfig c;
  c.seed = 10;
  CHECK(repetition_seed(c, 0) == 10);
  CHECK(repetition_seed(c, 3) == 10 + 3 * kSeedStride);
}

TEST_CASE("sweep points") {
  ExperimentConfig base;
  base.name = "exp";
  const auto it = sweep_point(base, "iter", "3");
  CHECK(it.iter == 3);
  CHECK(it.name == "exp_iter-3");

  base.m_total = 12800;
  const std::vector<std::pair<int, std::size_t>> expected{{20, 640}, {40, 320}, {80, 160}, {160, 80}, {320, 40}};
  for (auto [n, m_v] : expected) {
    const auto p = sweep_point(base, "fragmentation", std::to_string(n));
    CHECK(p.n == n);
    CHECK(p.m_v == m_v);
  }
  CHECK(!sweep_point(base, "delta", "inf").delta.has_value());
  CHECK(*sweep_point(base, "delta", "8").delta == 8);
  CHECK(sweep_point(base, "topology", "chain").topology.kind == TopologySpec::Kind::chain);
  CHECK(sweep_point(base, "partition", "drift_x").partition == PartitionMode::drift_x);
  CHECK(sweep_point(base, "m_v", "160").m_v == 160);
  CHECK(sweep_point(base, "n", "20").n == 20);
  CHECK_THROWS_AS(sweep_point(base, "lr", "0.1"), Error);
}

TEST_CASE("run_experiment writes one file per repetition plus an aggregate") {
  TempDir dir("crc_test_run");
  const auto data = write_blobs(dir.path, 400);
  auto c = small(data);
  c.repetitions = 5;
  c.name = "blobs";
  const auto result = run_experiment(c, dir.path / "out");
  CHECK(result.repetitions.size() == 5);
  CHECK(result.aggregate.size() == 8);
  for (int k = 1; k <= 5; ++k) CHECK(fs::exists(dir.path / "out" / ("blobs_rep" + std::to_string(k) + ".csv")));
  CHECK(fs::exists(dir.path / "out" / "blobs_aggregate.csv"));
  CHECK(fs::exists(dir.path / "out" / "blobs_baselines.csv"));
  CHECK(load_config(dir.path / "out" / "blobs.config") == c);
  CHECK(!fs::exists(dir.path / "out" / "blobs_rep6.csv"));
}

TEST_CASE("a single repetition's aggregate equals the run") {
  TempDir dir("crc_test_single");
  const auto data = write_blobs(dir.path, 300);
  auto c = small(data);
  c.repetitions = 1;
  run_experiment(c, dir.path);
  CHECK(slurp(dir.path / "experiment_aggregate.csv") == slurp(dir.path / "experiment_rep1.csv"));
}

TEST_CASE("repeated runs are byte-identical, whatever the thread count") {
  TempDir dir("crc_test_determinism");
  const auto data = write_blobs(dir.path, 300);
  auto c = small(data);
  c.dump_params = true;
  c.delta = 3;
  c.partition = PartitionMode::drift_xy;
  run_experiment(c, dir.path / "a");
  c.threads = 6;
  run_experiment(c, dir.path / "b");
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir.path / "a")) {
    const auto name = entry.path().filename();
    if (name == "experiment.config") continue;  // records the thread count
    CHECK(slurp(entry.path()) == slurp(dir.path / "b" / name));
    ++compared;
  }
  CHECK(compared == 2 + 2 * (6 + 2) + 2);  // metrics, params dumps, aggregate and baselines
}

TEST_CASE("sweep writes one aggregate per value and a summary") {
  TempDir dir("crc_test_sweep");
  const auto data = write_blobs(dir.path, 400);
  auto c = small(data);
  c.repetitions = 1;
  const auto rows = sweep(c, "iter", {"1", "2", "3"}, dir.path);
  CHECK(rows.size() == 3);
  for (const char* v : {"1", "2", "3"}) {
    CHECK(fs::exists(dir.path / (std::string("experiment_iter-") + v + "_aggregate.csv")));
  }
  const auto summary = slurp(dir.path / "experiment_iter_summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 4);
  CHECK(summary.find("blobs,iter,2,6,20,") != std::string::npos);

  const auto deltas = sweep(c, "delta", {"inf", "8", "4", "2", "1"}, dir.path);
  CHECK(deltas.size() == 5);
  CHECK_THROWS_AS(sweep(c, "colour", {"1"}, dir.path), Error);
}

TEST_CASE("run_experiment surfaces data problems") {
  TempDir dir("crc_test_errors");
  const auto data = write_blobs(dir.path, 100);
  auto c = small(data);  // needs 120 training instances
  CHECK_THROWS_AS(run_experiment(c, dir.path), Error);
  c.data = (dir.path / "missing.csv").string();
  CHECK_THROWS_AS(run_experiment(c, dir.path), Error);
  c.data.clear();
  CHECK_THROWS_AS(run_experiment(c, dir.path), Error);
}

TEST_CASE("run_baselines writes RC traces") {
  TempDir dir("crc_test_baselines");
  const auto data = write_blobs(dir.path, 300);
  const auto c = small(data);
  const auto reports = run_baselines(c, dir.path);
  CHECK(reports.size() == 2);
  CHECK(reports[0].trace.records.size() == 9);
  CHECK(fs::exists(dir.path / "experiment_rep1_rc_trace.csv"));
  CHECK(fs::exists(dir.path / "experiment_baselines.csv"));
}
