#include "crc/network.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

#include "crc/error.hpp"
#include "crc/format.hpp"

namespace crc {

Graph::Graph(int num_nodes, std::vector<Edge> edges)
    : num_nodes_(num_nodes), adjacency_(static_cast<std::size_t>(std::max(num_nodes, 0))) {
  if (num_nodes < 1) throw Error("graph needs at least one node");
  for (auto& [u, v] : edges) {
    if (u == v) throw Error("self-loop at node " + std::to_string(u + 1));
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
      throw Error("edge (" + std::to_string(u + 1) + ", " + std::to_string(v + 1) + ") out of range");
    }
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) throw Error("duplicate edge");
  edges_ = std::move(edges);
  for (auto [u, v] : edges_) {
    adjacency_[static_cast<std::size_t>(u)].push_back(v);
    adjacency_[static_cast<std::size_t>(v)].push_back(u);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

bool Graph::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{u, v});
}

double Graph::sparseness() const {
  if (num_nodes_ < 2) return 0.0;
  const double possible = 0.5 * num_nodes_ * (num_nodes_ - 1);
  return static_cast<double>(edges_.size()) / possible;
}

namespace {

std::vector<int> bfs_distances(const Graph& graph, int source) {
  std::vector<int> dist(static_cast<std::size_t>(graph.num_nodes()), -1);
  std::queue<int> frontier;
  dist[static_cast<std::size_t>(source)] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int w : graph.adjacent(u)) {
      if (dist[static_cast<std::size_t>(w)] < 0) {
        dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
        frontier.push(w);
      }
    }
  }
  return dist;
}

}  // namespace

bool Graph::connected() const {
  if (num_nodes_ == 0) return false;
  const auto dist = bfs_distances(*this, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

int Graph::diameter() const {
  int best = 0;
  for (int s = 0; s < num_nodes_; ++s) {
    for (int d : bfs_distances(*this, s)) {
      if (d < 0) return -1;
      best = std::max(best, d);
    }
  }
  return best;
}

std::string to_string(NeighborhoodMode mode) {
  return mode == NeighborhoodMode::open ? "open" : "closed";
}

NeighborhoodMode parse_neighborhood_mode(const std::string& text) {
  if (text == "open") return NeighborhoodMode::open;
  if (text == "closed") return NeighborhoodMode::closed;
  throw Error("unknown neighborhood mode '" + text + "' (expected open or closed)");
}

std::vector<int> neighbors(const Graph& graph, int v, NeighborhoodMode mode) {
  if (v < 0 || v >= graph.num_nodes()) throw Error("node " + std::to_string(v + 1) + " out of range");
  std::vector<int> result = graph.adjacent(v);
  if (mode == NeighborhoodMode::closed) result.insert(std::upper_bound(result.begin(), result.end(), v), v);
  return result;
}

// Uniform over labeled trees: decode a uniformly random Pruefer sequence.
Graph random_tree(int num_nodes, Rng& rng) {
  if (num_nodes < 2) throw Error("a tree needs at least two nodes");
  const auto n = static_cast<std::size_t>(num_nodes);
  std::vector<int> code(n - 2);
  for (auto& c : code) c = static_cast<int>(rng.uniform_index(n));

  std::vector<int> degree(n, 1);
  for (int c : code) ++degree[static_cast<std::size_t>(c)];
  std::priority_queue<int, std::vector<int>, std::greater<>> leaves;
  for (std::size_t v = 0; v < n; ++v) {
    if (degree[v] == 1) leaves.push(static_cast<int>(v));
  }
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (int c : code) {
    const int leaf = leaves.top();
    leaves.pop();
    edges.emplace_back(leaf, c);
    if (--degree[static_cast<std::size_t>(c)] == 1) leaves.push(c);
  }
  const int u = leaves.top();
  leaves.pop();
  edges.emplace_back(u, leaves.top());
  return Graph(num_nodes, std::move(edges));
}

Graph chain(int num_nodes) {
  if (num_nodes < 2) throw Error("a chain needs at least two nodes");
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < num_nodes; ++i) edges.emplace_back(i, i + 1);
  return Graph(num_nodes, std::move(edges));
}

Graph full_graph(int num_nodes) {
  std::vector<Edge> edges;
  for (int u = 0; u < num_nodes; ++u) {
    for (int v = u + 1; v < num_nodes; ++v) edges.emplace_back(u, v);
  }
  return Graph(num_nodes, std::move(edges));
}

Graph add_random_edges(const Graph& graph, std::size_t count, Rng& rng) {
  if (count == 0) return graph;
  std::vector<Edge> absent;
  for (int u = 0; u < graph.num_nodes(); ++u) {
    for (int v = u + 1; v < graph.num_nodes(); ++v) {
      if (!graph.has_edge(u, v)) absent.emplace_back(u, v);
    }
  }
  if (count > absent.size()) {
    throw Error("cannot add " + std::to_string(count) + " edges: only " + std::to_string(absent.size()) +
                " absent");
  }
  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(absent.size() - i));
    std::swap(absent[i], absent[j]);
  }
  std::vector<Edge> edges = graph.edges();
  edges.insert(edges.end(), absent.begin(), absent.begin() + static_cast<std::ptrdiff_t>(count));
  return Graph(graph.num_nodes(), std::move(edges));
}

std::string to_string(const TopologySpec& spec) {
  switch (spec.kind) {
    case TopologySpec::Kind::chain: return "chain";
    case TopologySpec::Kind::full: return "full";
    case TopologySpec::Kind::tree:
      return spec.extra_edges == 0 ? "tree" : "tree+" + std::to_string(spec.extra_edges);
  }
  return "tree";
}

TopologySpec parse_topology(const std::string& text) {
  const auto t = std::string(trim(text));
  if (t == "tree") return {TopologySpec::Kind::tree, 0};
  if (t == "chain") return {TopologySpec::Kind::chain, 0};
  if (t == "full") return {TopologySpec::Kind::full, 0};
  if (t.rfind("tree+", 0) == 0) {
    auto k = parse_integer(std::string_view(t).substr(5));
    if (k && *k >= 0) return {TopologySpec::Kind::tree, static_cast<std::size_t>(*k)};
  }
  throw Error("unknown topology '" + text + "' (expected tree, chain, full or tree+k)");
}

void check_topology(const TopologySpec& spec, int num_nodes) {
  if (spec.kind == TopologySpec::Kind::full) {
    if (num_nodes < 1) throw Error("full topology needs at least one node");
    return;
  }
  if (num_nodes < 2) throw Error(to_string(spec) + " topology needs at least two nodes");
  const auto n = static_cast<std::size_t>(num_nodes);
  const std::size_t capacity = n * (n - 1) / 2 - (n - 1);
  if (spec.extra_edges > capacity) {
    throw Error("tree on " + std::to_string(num_nodes) + " nodes has room for only " + std::to_string(capacity) +
                " extra edges");
  }
}

Graph generate(const TopologySpec& spec, int num_nodes, Rng& rng) {
  check_topology(spec, num_nodes);
  switch (spec.kind) {
    case TopologySpec::Kind::chain: return chain(num_nodes);
    case TopologySpec::Kind::full: return full_graph(num_nodes);
    case TopologySpec::Kind::tree: return add_random_edges(random_tree(num_nodes, rng), spec.extra_edges, rng);
  }
  throw Error("unknown topology");
}

Graph rewire(const RewireSchedule& schedule, int round, const Graph& current, Rng& rng) {
  if (round < 1) throw Error("rounds start at 1");
  if (!schedule.period || round % *schedule.period != 0) return current;
  return generate(schedule.topology, current.num_nodes(), rng);
}

void write_edge_list(std::ostream& out, const Graph& graph) {
  for (auto [u, v] : graph.edges()) out << u + 1 << ' ' << v + 1 << '\n';
}

void write_edge_list(const std::filesystem::path& path, const Graph& graph) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_edge_list(out, graph);
}

Graph read_edge_list(std::istream& in, std::optional<int> num_nodes) {
  std::vector<Edge> edges;
  int largest = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::istringstream fields{std::string(text)};
    long long u = 0, v = 0;
    std::string extra;
    if (!(fields >> u >> v) || (fields >> extra) || u < 1 || v < 1) {
      throw Error("edge list line " + std::to_string(line_no) + ": expected two 1-based node ids");
    }
    edges.emplace_back(static_cast<int>(u - 1), static_cast<int>(v - 1));
    largest = std::max({largest, static_cast<int>(u), static_cast<int>(v)});
  }
  return Graph(num_nodes.value_or(largest), std::move(edges));
}

Graph read_edge_list(const std::filesystem::path& path, std::optional<int> num_nodes) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_edge_list(in, num_nodes);
}

}  // namespace crc
