#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "crc/data.hpp"
#include "crc/rng.hpp"

namespace crc {

enum class PartitionMode { iid, drift_x, drift_y, drift_xy };

std::string to_string(PartitionMode mode);
PartitionMode parse_partition_mode(const std::string& text);

/// Assignment of global instance indices to nodes. Blocks are disjoint and
/// each holds exactly `local_size` indices.
struct PartitionPlan {
  PartitionMode mode = PartitionMode::iid;
  int num_nodes = 0;
  std::size_t local_size = 0;
  std::vector<std::vector<std::size_t>> assignment;

  // Union of all blocks in node order.
  std::vector<std::size_t> global_sample() const;
};

PartitionPlan split_iid(const Dataset& dataset, int num_nodes, std::size_t local_size, Rng& rng);
PartitionPlan split_drift_x(const Dataset& dataset, int num_nodes, std::size_t local_size, Rng& rng);
PartitionPlan split_drift_y(const Dataset& dataset, int num_nodes, std::size_t local_size, Rng& rng);
PartitionPlan split_drift_xy(const Dataset& dataset, int num_nodes, std::size_t local_size, Rng& rng);
PartitionPlan split(PartitionMode mode, const Dataset& dataset, int num_nodes, std::size_t local_size,
                    Rng& rng);

/// Row-major real matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Discrete features become their category codes.
Matrix as_matrix(const Dataset& dataset, std::span<const std::size_t> rows);

/// Leading eigenvector of the covariance of the column-standardized data
/// (columns with zero variance are only centered), by power iteration.
/// Sign fixed so the largest-magnitude coordinate is positive.
std::vector<double> first_principal_component(const Matrix& x);

// Scores of each row of `x` on `component` after the same standardization.
std::vector<double> principal_scores(const Matrix& x, std::span<const double> component);

// The local datasets of a plan, in node order.
std::vector<Dataset> materialize(const PartitionPlan& plan, const Dataset& dataset);

// CSV "node,global_index", both 1-based.
void write_plan_csv(std::ostream& out, const PartitionPlan& plan);
void write_plan_csv(const std::filesystem::path& path, const PartitionPlan& plan);

}  // namespace crc
