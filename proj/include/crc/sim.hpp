#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "crc/calibration.hpp"
#include "crc/data.hpp"
#include "crc/model.hpp"
#include "crc/network.hpp"

namespace crc {

// m / (lr * n): the equivalent sample size under which CRC on a full graph
// retraces centralized RC with learning rate lr.
double m0_heuristic(std::size_t global_size, double lr, int num_nodes);

struct NodeState {
  int id = 0;
  StatsVector stats;  // always projected
  NBParams params;    // param_map(stats)
};

struct BaselinePoint {
  double train_err = 0.0;
  double test_err = 0.0;
};

struct RoundMetrics {
  int t = 0;
  std::vector<double> train_errors;  // per node, on the global training set
  std::vector<double> test_errors;
  double train_err_mean = 0.0;
  double train_err_std = 0.0;  // population std across nodes
  double test_err_mean = 0.0;
  double test_err_std = 0.0;
  double soft_train_mean = 0.0;
  double rc_train_err = 0.0;
  double rc_test_err = 0.0;
  double train_gap = 0.0;  // mean - baseline
  double test_gap = 0.0;
};

struct CrcOptions {
  int t_max = 64;
  int iter = 1;
  double m0 = 1000.0;
  NeighborhoodMode neighborhood = NeighborhoodMode::closed;
  unsigned threads = 1;  // 0: hardware concurrency
  // Order in which node updates are issued within a round; empty means
  // natural order. Results never depend on it.
  std::vector<int> update_order;
};

/// Global sets and the gold-standard errors per round (index t; the last
/// entry is reused past its end).
struct EvaluationContext {
  const Dataset& train;
  const Dataset& test;
  std::vector<BaselinePoint> baseline;
};

// Mean of the round t-1 statistics over v's neighborhood, projected.
StatsVector aggregate(const Graph& graph, int v, NeighborhoodMode mode, std::span<const NodeState> previous);

// Called after each round with the round's graph, the aggregated statistics
// every node started from, and the published node states.
using RoundObserver = std::function<void(int round, const Graph& graph, std::span<const StatsVector> aggregated,
                                         std::span<const NodeState> nodes)>;

struct CrcResult {
  std::vector<RoundMetrics> metrics;  // empty without an EvaluationContext
  std::vector<NodeState> nodes;
};

/// Collaborative RC with synchronous rounds: every node averages its
/// neighbors' round t-1 statistics, then runs local RC on its own data.
CrcResult run_crc(const CrcOptions& options, std::span<const Dataset> local, const Graph& initial,
                  const RewireSchedule& schedule, const EvaluationContext* eval = nullptr,
                  const RoundObserver& observer = {});

enum class BaselineKind { rc, ml };

struct BaselineOptions {
  double lr = 0.05;
  int t_max = 64;
  std::optional<double> init_ess;  // RC start; defaults to the global size m
  double ml_smoothing = 1.0;       // ess of the uniform pseudo-counts added to ML
};

struct BaselineResult {
  NBParams params;
  std::optional<RCTrace> trace;  // RC only
};

BaselineResult run_baseline(BaselineKind kind, const Dataset& global, const BaselineOptions& options);

// Train and test 0-1 errors of every RC iterate.
std::vector<BaselinePoint> baseline_errors(const RCTrace& trace, const Dataset& train, const Dataset& test);

RoundMetrics evaluate_round(int t, std::span<const NodeState> nodes, const Dataset& train, const Dataset& test,
                            const BaselinePoint& baseline, unsigned threads = 1);

// Columns: t,train_err_mean,train_err_std,test_err_mean,test_err_std,
// soft_train_mean,rc_train_err,rc_test_err,train_gap,test_gap
void write_metrics_csv(std::ostream& out, std::span<const RoundMetrics> metrics);
void write_metrics_csv(const std::filesystem::path& path, std::span<const RoundMetrics> metrics);

// Runs fn(i) for i in [0, count) on up to `threads` workers (0: hardware
// concurrency) and joins before returning.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace crc
