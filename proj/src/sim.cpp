#include "crc/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "crc/error.hpp"
#include "crc/format.hpp"

namespace crc {

double m0_heuristic(std::size_t global_size, double lr, int num_nodes) {
  if (global_size < 1 || num_nodes < 1) throw Error("m0 heuristic needs m >= 1 and n >= 1");
  if (!(lr > 0.0)) throw Error("learning rate must be positive");
  return static_cast<double>(global_size) / (lr * num_nodes);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(threads, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

void check_local(std::span<const Dataset> local) {
  for (std::size_t v = 0; v < local.size(); ++v) {
    if (local[v].empty()) throw Error("local dataset of node " + std::to_string(v + 1) + " is empty");
    if (!(local[v].schema() == local.front().schema())) {
      throw Error("local dataset of node " + std::to_string(v + 1) + " has a different schema");
    }
  }
}

std::pair<double, double> mean_std(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

}  // namespace

StatsVector aggregate(const Graph& graph, int v, NeighborhoodMode mode, std::span<const NodeState> previous) {
  const auto members = neighbors(graph, v, mode);
  if (members.empty()) throw Error("node " + std::to_string(v + 1) + " has an empty neighborhood");
  StatsVector sum = previous[static_cast<std::size_t>(members.front())].stats;
  for (std::size_t k = 1; k < members.size(); ++k) sum += previous[static_cast<std::size_t>(members[k])].stats;
  sum *= 1.0 / static_cast<double>(members.size());
  // The mean of projected vectors is feasible up to rounding.
  project_in_place(sum);
  return sum;
}

CrcResult run_crc(const CrcOptions& options, std::span<const Dataset> local, const Graph& initial,
                  const RewireSchedule& schedule, const EvaluationContext* eval, const RoundObserver& observer) {
  const int n = initial.num_nodes();
  if (static_cast<std::size_t>(n) != local.size()) {
    throw Error("graph has " + std::to_string(n) + " nodes but " + std::to_string(local.size()) +
                " local datasets were given");
  }
  if (options.t_max < 1) throw Error("t_max must be at least 1");
  if (options.iter < 1) throw Error("iter must be at least 1");
  check_local(local);

  std::vector<int> order = options.update_order;
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
  } else {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int v = 0; v < n; ++v) {
      if (sorted.size() != static_cast<std::size_t>(n) || sorted[static_cast<std::size_t>(v)] != v) {
        throw Error("update order must be a permutation of the nodes");
      }
    }
  }

  const auto init = uniform_init(local.front().schema(), options.m0);
  const auto init_params = param_map(init);
  std::vector<NodeState> current;
  current.reserve(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) current.push_back({v, init, init_params});

  CrcResult result;
  Rng rewire_rng(schedule.seed);
  Graph graph = initial;
  std::vector<StatsVector> aggregated(static_cast<std::size_t>(n));
  std::vector<NodeState> next(current);

  for (int t = 1; t <= options.t_max; ++t) {
    graph = rewire(schedule, t, graph, rewire_rng);
    // Reads touch only `current` (round t-1); writes only `next`.
    parallel_for(order.size(), options.threads, [&](std::size_t k) {
      const int v = order[k];
      const auto vu = static_cast<std::size_t>(v);
      aggregated[vu] = aggregate(graph, v, options.neighborhood, current);
      auto updated = lrc(aggregated[vu], local[vu], options.iter);
      next[vu] = {v, std::move(updated.stats), std::move(updated.params)};
    });
    std::swap(current, next);

    if (eval) {
      const auto& points = eval->baseline;
      const BaselinePoint baseline =
          points.empty() ? BaselinePoint{} : points[std::min(static_cast<std::size_t>(t), points.size() - 1)];
      result.metrics.push_back(evaluate_round(t, current, eval->train, eval->test, baseline, options.threads));
    }
    if (observer) observer(t, graph, aggregated, current);
  }
  result.nodes = std::move(current);
  return result;
}

BaselineResult run_baseline(BaselineKind kind, const Dataset& global, const BaselineOptions& options) {
  if (global.empty()) throw Error("baseline needs a non-empty global dataset");
  if (kind == BaselineKind::ml) {
    auto stats = stat_map_dataset(global);
    if (options.ml_smoothing < 0.0) throw Error("ML smoothing must be non-negative");
    if (options.ml_smoothing > 0.0) stats += uniform_init(global.schema(), options.ml_smoothing);
    project_in_place(stats);
    return {param_map(stats), std::nullopt};
  }
  const double ess = options.init_ess.value_or(static_cast<double>(global.size()));
  auto trace = rc(global, options.lr, options.t_max, uniform_init(global.schema(), ess));
  auto params = trace.final().params;
  return {std::move(params), std::move(trace)};
}

std::vector<BaselinePoint> baseline_errors(const RCTrace& trace, const Dataset& train, const Dataset& test) {
  std::vector<BaselinePoint> points;
  points.reserve(trace.records.size());
  for (const auto& record : trace.records) {
    points.push_back({evaluate(record.params, train).err01, evaluate(record.params, test).err01});
  }
  return points;
}

RoundMetrics evaluate_round(int t, std::span<const NodeState> nodes, const Dataset& train, const Dataset& test,
                            const BaselinePoint& baseline, unsigned threads) {
  if (nodes.empty()) throw Error("no nodes to evaluate");
  RoundMetrics m;
  m.t = t;
  m.train_errors.resize(nodes.size());
  m.test_errors.resize(nodes.size());
  std::vector<double> soft(nodes.size());
  parallel_for(nodes.size(), threads, [&](std::size_t v) {
    const auto on_train = evaluate(nodes[v].params, train);
    m.train_errors[v] = on_train.err01;
    soft[v] = on_train.soft;
    m.test_errors[v] = evaluate(nodes[v].params, test).err01;
  });
  std::tie(m.train_err_mean, m.train_err_std) = mean_std(m.train_errors);
  std::tie(m.test_err_mean, m.test_err_std) = mean_std(m.test_errors);
  m.soft_train_mean = mean_std(soft).first;
  m.rc_train_err = baseline.train_err;
  m.rc_test_err = baseline.test_err;
  m.train_gap = m.train_err_mean - baseline.train_err;
  m.test_gap = m.test_err_mean - baseline.test_err;
  return m;
}

void write_metrics_csv(std::ostream& out, std::span<const RoundMetrics> metrics) {
  out << "t,train_err_mean,train_err_std,test_err_mean,test_err_std,soft_train_mean,rc_train_err,rc_test_err,"
         "train_gap,test_gap\n";
  for (const auto& m : metrics) {
    out << m.t;
    for (double v : {m.train_err_mean, m.train_err_std, m.test_err_mean, m.test_err_std, m.soft_train_mean,
                     m.rc_train_err, m.rc_test_err, m.train_gap, m.test_gap}) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const RoundMetrics> metrics) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_metrics_csv(out, metrics);
}

}  // namespace crc
