#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crc/network.hpp"
#include "crc/partition.hpp"
#include "crc/sim.hpp"

namespace crc {

/// Every knob of one experiment. Defaults are the reference protocol:
/// 50 nodes with 50 local instances each, 64 rounds, one local iteration,
/// learning rate 0.05, m0 = m_v / lr, a random tree, i.i.d. local data,
/// a static network and 5 repetitions.
struct ExperimentConfig {
  std::string data;
  std::string label = "last";
  std::string name = "experiment";
  int n = 50;
  std::size_t m_v = 50;
  int t_max = 64;
  int iter = 1;
  double lr = 0.05;
  std::optional<double> m0;  // empty: m / (lr * n)
  TopologySpec topology;
  NeighborhoodMode neighborhood = NeighborhoodMode::closed;
  PartitionMode partition = PartitionMode::iid;
  std::optional<int> delta;  // empty: never rewire
  std::optional<std::size_t> train_size;  // empty: n * m_v
  std::optional<std::size_t> test_size;   // empty: every remaining instance
  std::uint64_t seed = 1;
  int repetitions = 5;
  unsigned threads = 1;  // 0: hardware concurrency
  double ml_smoothing = 1.0;
  std::optional<std::size_t> m_total;  // fragmentation sweeps; empty: n * m_v
  bool dump_params = false;
  bool standardize = true;  // z-score continuous features on the training pool

  double resolved_m0() const;
  std::size_t resolved_train_size() const;

  bool operator==(const ExperimentConfig&) const = default;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

// Names accepted in config files and as --key flags.
const std::vector<std::string>& config_keys();

// "key = value" lines, '#' starts a comment. Overrides are applied after
// the file. Throws Error on unknown keys, bad values and violated invariants.
ExperimentConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
void validate(const ExperimentConfig& config);
std::string to_config_text(const ExperimentConfig& config);

// Repetition k (0-based) draws from seed + k * kSeedStride.
inline constexpr std::uint64_t kSeedStride = 1000003;
std::uint64_t repetition_seed(const ExperimentConfig& config, int repetition);

struct RepetitionResult {
  std::vector<RoundMetrics> metrics;
  BaselinePoint ml;
  BaselinePoint rc;  // final RC iterate
  double m0 = 0.0;
  std::uint64_t seed = 0;
  std::vector<NBParams> node_params;  // after the last round
  NBParams ml_params;
  NBParams rc_params;
};

struct ExperimentResult {
  std::vector<RepetitionResult> repetitions;
  std::vector<RoundMetrics> aggregate;  // per-round means across repetitions
};

ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset& dataset);

Dataset load_dataset(const ExperimentConfig& config);

// Loads config.data, runs, and writes <name>_rep<k>.csv, <name>_aggregate.csv,
// <name>_baselines.csv and <name>.config into `output_dir`. With dump_params
// also <name>_rep<k>_node<v>.params, <name>_rep<k>_rc.params and
// <name>_rep<k>_ml.params.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_dir);

std::vector<RoundMetrics> average_metrics(const std::vector<std::vector<RoundMetrics>>& runs);

inline const std::vector<std::string> kSweepAxes = {"m_v", "n", "topology", "partition", "iter", "delta",
                                                    "fragmentation"};

// Config for one sweep point, named <name>_<axis>-<value>.
ExperimentConfig sweep_point(const ExperimentConfig& base, const std::string& axis, const std::string& value);

struct SweepRow {
  std::string value;
  ExperimentConfig config;
  RoundMetrics final_round;  // last aggregate round
  BaselinePoint ml;          // mean over repetitions
};

// One experiment per value, plus <name>_<axis>_summary.csv.
std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::string& axis,
                            const std::vector<std::string>& values, const std::filesystem::path& output_dir);

struct BaselineReport {
  BaselinePoint ml;
  BaselinePoint rc;
  RCTrace trace;
};

// RC and ML on the global sample of each repetition; writes
// <name>_rep<k>_rc_trace.csv and <name>_baselines.csv.
std::vector<BaselineReport> run_baselines(const ExperimentConfig& config, const std::filesystem::path& output_dir);

}  // namespace crc
