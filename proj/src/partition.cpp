#include "crc/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "crc/error.hpp"

namespace crc {

namespace {

constexpr int kMaxPowerIterations = 10000;
constexpr double kPowerTolerance = 1e-9;

std::vector<std::size_t> draw_sample(const Dataset& dataset, int num_nodes, std::size_t local_size,
                                     Rng& rng) {
  if (num_nodes < 1) throw Error("partition needs at least one node");
  if (local_size < 1) throw Error("local datasets need at least one instance");
  const std::size_t total = static_cast<std::size_t>(num_nodes) * local_size;
  if (total > dataset.size()) {
    throw Error("partition needs " + std::to_string(total) + " instances, dataset has " +
                std::to_string(dataset.size()));
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  order.resize(total);
  return order;
}

PartitionPlan contiguous_blocks(PartitionMode mode, int num_nodes, std::size_t local_size,
                                std::span<const std::size_t> ordered) {
  PartitionPlan plan{mode, num_nodes, local_size, {}};
  for (int v = 0; v < num_nodes; ++v) {
    auto first = ordered.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(v) * local_size);
    plan.assignment.emplace_back(first, first + static_cast<std::ptrdiff_t>(local_size));
  }
  return plan;
}

// Stable sort of `indices` by their principal-component score within `sample`.
std::vector<std::size_t> sort_by_projection(const Dataset& dataset, std::span<const std::size_t> sample,
                                            std::span<const std::size_t> indices) {
  const Matrix x = as_matrix(dataset, sample);
  const auto component = first_principal_component(x);
  const auto scores = principal_scores(x, component);
  std::vector<std::size_t> position(dataset.size());
  for (std::size_t k = 0; k < sample.size(); ++k) position[sample[k]] = k;
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
    return scores[position[a]] < scores[position[b]];
  });
  return sorted;
}

// Nodes are visited in order; node v prefers class v mod r, skipping to the
// next class with a full block available, and tops up across classes only
// when no class can fill a block on its own.
PartitionPlan class_blocks(PartitionMode mode, const Dataset& dataset, int num_nodes,
                           std::size_t local_size, std::vector<std::vector<std::size_t>> pools) {
  const int r = dataset.num_classes();
  std::vector<std::size_t> cursor(static_cast<std::size_t>(r), 0);
  auto remaining = [&](int c) {
    return pools[static_cast<std::size_t>(c)].size() - cursor[static_cast<std::size_t>(c)];
  };

  PartitionPlan plan{mode, num_nodes, local_size, {}};
  int next_class = 0;
  for (int v = 0; v < num_nodes; ++v) {
    int cls = next_class;
    for (int k = 0; k < r; ++k) {
      const int candidate = (next_class + k) % r;
      if (remaining(candidate) >= local_size) {
        cls = candidate;
        break;
      }
    }
    next_class = (cls + 1) % r;

    std::vector<std::size_t> block;
    block.reserve(local_size);
    while (block.size() < local_size) {
      while (remaining(cls) == 0) cls = (cls + 1) % r;
      auto& pool = pools[static_cast<std::size_t>(cls)];
      auto& at = cursor[static_cast<std::size_t>(cls)];
      const std::size_t take = std::min(local_size - block.size(), remaining(cls));
      block.insert(block.end(), pool.begin() + static_cast<std::ptrdiff_t>(at),
                   pool.begin() + static_cast<std::ptrdiff_t>(at + take));
      at += take;
    }
    plan.assignment.push_back(std::move(block));
  }
  return plan;
}

std::vector<std::vector<std::size_t>> class_pools(const Dataset& dataset, std::span<const std::size_t> sample) {
  std::vector<std::vector<std::size_t>> pools(static_cast<std::size_t>(dataset.num_classes()));
  for (auto i : sample) pools[static_cast<std::size_t>(dataset.label(i))].push_back(i);
  return pools;
}

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 / stddev, or 1 for constant columns
};

Standardizer fit_standardizer(const Matrix& x) {
  Standardizer s{std::vector<double>(x.cols, 0.0), std::vector<double>(x.cols, 1.0)};
  const auto n = static_cast<double>(x.rows);
  for (std::size_t c = 0; c < x.cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) sum += x(r, c);
    s.mean[c] = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) ss += (x(r, c) - s.mean[c]) * (x(r, c) - s.mean[c]);
    const double sd = std::sqrt(ss / n);
    if (sd > 0.0) s.scale[c] = 1.0 / sd;
  }
  return s;
}

double norm(std::span<const double> v) {
  double total = 0.0;
  for (double a : v) total += a * a;
  return std::sqrt(total);
}

std::vector<double> multiply(const std::vector<double>& a, std::span<const double> v, std::size_t d) {
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i] += a[i * d + j] * v[j];
  }
  return out;
}

}  // namespace

std::string to_string(PartitionMode mode) {
  switch (mode) {
    case PartitionMode::iid: return "iid";
    case PartitionMode::drift_x: return "drift_x";
    case PartitionMode::drift_y: return "drift_y";
    case PartitionMode::drift_xy: return "drift_xy";
  }
  return "iid";
}

PartitionMode parse_partition_mode(const std::string& text) {
  for (auto mode : {PartitionMode::iid, PartitionMode::drift_x, PartitionMode::drift_y, PartitionMode::drift_xy}) {
    if (text == to_string(mode)) return mode;
  }
  throw Error("unknown partition mode '" + text + "' (expected iid, drift_x, drift_y or drift_xy)");
}

std::vector<std::size_t> PartitionPlan::global_sample() const {
  std::vector<std::size_t> all;
  for (const auto& block : assignment) all.insert(all.end(), block.begin(), block.end());
  return all;
}

PartitionPlan split_iid(const Dataset& dataset, int num_nodes, std::size_t local_size, Rng& rng) {
  const auto sample = draw_sample(dataset, num_nodes, local_size, rng);
  return contiguous_blocks(PartitionMode::iid, num_nodes, local_size, sample);
}

PartitionPlan split_drift_x(const Dataset& dataset, int num_nodes, std::size_t local_size, Rng& rng) {
  const auto sample = draw_sample(dataset, num_nodes, local_size, rng);
  const auto sorted = sort_by_projection(dataset, sample, sample);
  return contiguous_blocks(PartitionMode::drift_x, num_nodes, local_size, sorted);
}

PartitionPlan split_drift_y(const Dataset& dataset, int num_nodes, std::size_t local_size, Rng& rng) {
  const auto sample = draw_sample(dataset, num_nodes, local_size, rng);
  return class_blocks(PartitionMode::drift_y, dataset, num_nodes, local_size, class_pools(dataset, sample));
}

PartitionPlan split_drift_xy(const Dataset& dataset, int num_nodes, std::size_t local_size, Rng& rng) {
  const auto sample = draw_sample(dataset, num_nodes, local_size, rng);
  auto pools = class_pools(dataset, sample);
  for (auto& pool : pools) {
    if (!pool.empty()) pool = sort_by_projection(dataset, sample, pool);
  }
  return class_blocks(PartitionMode::drift_xy, dataset, num_nodes, local_size, std::move(pools));
}

PartitionPlan split(PartitionMode mode, const Dataset& dataset, int num_nodes, std::size_t local_size,
                    Rng& rng) {
  switch (mode) {
    case PartitionMode::iid: return split_iid(dataset, num_nodes, local_size, rng);
    case PartitionMode::drift_x: return split_drift_x(dataset, num_nodes, local_size, rng);
    case PartitionMode::drift_y: return split_drift_y(dataset, num_nodes, local_size, rng);
    case PartitionMode::drift_xy: return split_drift_xy(dataset, num_nodes, local_size, rng);
  }
  throw Error("unknown partition mode");
}

Matrix as_matrix(const Dataset& dataset, std::span<const std::size_t> rows) {
  Matrix x{rows.size(), static_cast<std::size_t>(dataset.num_features()), {}};
  x.data.reserve(x.rows * x.cols);
  for (auto i : rows) {
    auto r = dataset.row(i);
    x.data.insert(x.data.end(), r.begin(), r.end());
  }
  return x;
}

std::vector<double> first_principal_component(const Matrix& x) {
  if (x.rows < 2) throw Error("principal component needs at least two instances");
  const std::size_t d = x.cols;
  const auto s = fit_standardizer(x);

  std::vector<double> cov(d * d, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      const double zi = (x(r, i) - s.mean[i]) * s.scale[i];
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += zi * (x(r, j) - s.mean[j]) * s.scale[j];
    }
  }
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov[i * d + j] /= static_cast<double>(x.rows);
      cov[j * d + i] = cov[i * d + j];
    }
    trace += cov[i * d + i];
  }
  if (!(trace > 0.0)) throw Error("principal component undefined: all instances are identical");

  // Warm start from a column of cov^(2^k): repeated squaring amplifies the
  // leading eigenvalue gap before the plain power iteration below.
  std::vector<double> power = cov;
  for (int k = 0; k < 12; ++k) {
    std::vector<double> next(d * d, 0.0);
    double scale = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (std::size_t l = 0; l < d; ++l) sum += power[i * d + l] * power[l * d + j];
        next[i * d + j] = sum;
      }
      scale += next[i * d + i];
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) break;
    for (auto& v : next) v /= scale;
    power = std::move(next);
  }
  std::vector<double> v(d, 0.0);
  std::size_t best_column = 0;
  double best_norm = -1.0;
  for (std::size_t j = 0; j < d; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < d; ++i) col += power[i * d + j] * power[i * d + j];
    if (col > best_norm) {
      best_norm = col;
      best_column = j;
    }
  }
  for (std::size_t i = 0; i < d; ++i) v[i] = power[i * d + best_column];
  if (!(norm(v) > 0.0)) v.assign(d, 1.0);
  {
    const double n0 = norm(v);
    for (auto& a : v) a /= n0;
  }

  // Stop once the eigen-residual |C v - lambda v| falls below tol * lambda.
  for (int it = 0; it < kMaxPowerIterations; ++it) {
    auto w = multiply(cov, v, d);
    double lambda = 0.0;
    for (std::size_t i = 0; i < d; ++i) lambda += v[i] * w[i];
    double residual = 0.0;
    for (std::size_t i = 0; i < d; ++i) residual += (w[i] - lambda * v[i]) * (w[i] - lambda * v[i]);
    const double wn = norm(w);
    if (!(wn > 0.0)) throw Error("principal component undefined: zero covariance");
    for (std::size_t i = 0; i < d; ++i) v[i] = w[i] / wn;
    if (std::sqrt(residual) <= kPowerTolerance * std::abs(lambda)) break;
  }

  std::size_t largest = 0;
  for (std::size_t i = 1; i < d; ++i) {
    if (std::abs(v[i]) > std::abs(v[largest])) largest = i;
  }
  if (v[largest] < 0) {
    for (auto& a : v) a = -a;
  }
  return v;
}

std::vector<double> principal_scores(const Matrix& x, std::span<const double> component) {
  const auto s = fit_standardizer(x);
  std::vector<double> scores(x.rows, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) scores[r] += (x(r, c) - s.mean[c]) * s.scale[c] * component[c];
  }
  return scores;
}

std::vector<Dataset> materialize(const PartitionPlan& plan, const Dataset& dataset) {
  std::vector<Dataset> local;
  local.reserve(plan.assignment.size());
  for (const auto& block : plan.assignment) local.push_back(dataset.subset(block));
  return local;
}

void write_plan_csv(std::ostream& out, const PartitionPlan& plan) {
  out << "node,global_index\n";
  for (std::size_t v = 0; v < plan.assignment.size(); ++v) {
    for (auto i : plan.assignment[v]) out << v + 1 << ',' << i + 1 << '\n';
  }
}

void write_plan_csv(const std::filesystem::path& path, const PartitionPlan& plan) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_plan_csv(out, plan);
}

}  // namespace crc
