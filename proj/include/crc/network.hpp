#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crc/rng.hpp"

namespace crc {

using Edge = std::pair<int, int>;  // u < v, 0-based

/// Undirected simple graph over nodes 0..n-1. Immutable once built.
class Graph {
 public:
  Graph() = default;
  // Throws Error on self-loops, duplicates or out-of-range endpoints.
  Graph(int num_nodes, std::vector<Edge> edges);

  int num_nodes() const { return num_nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }  // sorted
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<int>& adjacent(int v) const { return adjacency_.at(static_cast<std::size_t>(v)); }
  bool has_edge(int u, int v) const;

  // |E| / (n (n - 1) / 2); 0 for n < 2.
  double sparseness() const;
  bool connected() const;
  // Longest shortest path; -1 when disconnected.
  int diameter() const;

  bool operator==(const Graph& other) const {
    return num_nodes_ == other.num_nodes_ && edges_ == other.edges_;
  }

 private:
  int num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
};

enum class NeighborhoodMode { open, closed };

std::string to_string(NeighborhoodMode mode);
NeighborhoodMode parse_neighborhood_mode(const std::string& text);

// Sorted; closed mode includes v itself.
std::vector<int> neighbors(const Graph& graph, int v, NeighborhoodMode mode);

Graph random_tree(int num_nodes, Rng& rng);
Graph chain(int num_nodes);
Graph full_graph(int num_nodes);
Graph add_random_edges(const Graph& graph, std::size_t count, Rng& rng);

/// "tree", "chain", "full" or "tree+k".
struct TopologySpec {
  enum class Kind { tree, chain, full };
  Kind kind = Kind::tree;
  std::size_t extra_edges = 0;

  bool operator==(const TopologySpec&) const = default;
};

std::string to_string(const TopologySpec& spec);
TopologySpec parse_topology(const std::string& text);
// Throws Error when the topology cannot be realized on n nodes.
void check_topology(const TopologySpec& spec, int num_nodes);
Graph generate(const TopologySpec& spec, int num_nodes, Rng& rng);

/// Periodic regeneration of the communication graph. An empty period means
/// the graph never changes.
struct RewireSchedule {
  std::optional<int> period;
  TopologySpec topology;
  std::uint64_t seed = 0;
};

// At rounds t with t mod period == 0 returns a fresh graph of the schedule's
// topology; otherwise returns `current`.
Graph rewire(const RewireSchedule& schedule, int round, const Graph& current, Rng& rng);

// Edge-list text: one "u v" pair per line, 1-based ids. The node count is
// taken from `num_nodes` when given, else from the largest id present.
void write_edge_list(std::ostream& out, const Graph& graph);
void write_edge_list(const std::filesystem::path& path, const Graph& graph);
Graph read_edge_list(std::istream& in, std::optional<int> num_nodes = std::nullopt);
Graph read_edge_list(const std::filesystem::path& path, std::optional<int> num_nodes = std::nullopt);

}  // namespace crc
