#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <istream>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace radbound::graphgen {

// Undirected graph with mandatory self-loops. Stored as sorted neighbor
// lists; N(v) always contains v itself.
struct Graph {
  int n = 0;
  std::vector<std::vector<int>> neighbors;  // per node, ascending, self included
  std::optional<std::uint64_t> seed;

  bool has_edge(int i, int j) const;
  int degree(int v) const { return static_cast<int>(neighbors[v].size()); }
  // Unordered pairs {i, j}, i < j, self-loops excluded.
  std::vector<std::pair<int, int>> edge_list() const;
  Eigen::MatrixXd dense_adjacency() const;             // unit diagonal
  Eigen::SparseMatrix<double> sparse_adjacency() const;
};

struct DegreeStats {
  std::vector<int> degrees;  // |N(v)|, self included
  int min_degree = 0;
  int max_degree = 0;
  bool is_homogeneous = false;
  std::optional<int> q;  // defined only when is_homogeneous
};

// Circulant graph: node i connects to i +- 1, ..., i +- ring_degree/2
// (mod n), plus the self-loop, so |N(v)| = ring_degree + 1 for every v.
Graph gen_regular(int n, int ring_degree, std::uint64_t seed);

// ER(n, p): each pair {i, j}, i != j, kept independently with probability p;
// self-loops always present.
Graph gen_erdos_renyi(int n, double p, std::uint64_t seed);

// Builds a graph from explicit undirected edges (self-loops implied).
Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges,
                       std::optional<std::uint64_t> seed = {});

DegreeStats degree_stats(const Graph& g);

std::string degree_histogram(const DegreeStats& s);

std::uint64_t graph_hash(const Graph& g);

nlohmann::json to_json(const Graph& g);
Graph graph_from_json(const nlohmann::json& j);
// Plain text: one "i j" pair per line, 0-indexed; self-loop lines ignored.
Graph read_edge_list(std::istream& in);

}  // namespace radbound::graphgen
