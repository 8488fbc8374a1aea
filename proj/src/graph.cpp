#include "radbound/graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "radbound/rng.hpp"
#include "radbound/util.hpp"

namespace radbound::graphgen {

namespace {

Graph finalize(int n, std::vector<std::vector<int>> nbrs, std::optional<std::uint64_t> seed) {
  for (int v = 0; v < n; ++v) {
    auto& list = nbrs[v];
    list.push_back(v);  // mandatory self-loop
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  Graph g;
  g.n = n;
  g.neighbors = std::move(nbrs);
  g.seed = seed;
  return g;
}

}  // namespace

bool Graph::has_edge(int i, int j) const {
  const auto& list = neighbors[i];
  return std::binary_search(list.begin(), list.end(), j);
}

std::vector<std::pair<int, int>> Graph::edge_list() const {
  std::vector<std::pair<int, int>> edges;
  for (int v = 0; v < n; ++v)
    for (int u : neighbors[v])
      if (u > v) edges.emplace_back(v, u);
  return edges;
}

Eigen::MatrixXd Graph::dense_adjacency() const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int v = 0; v < n; ++v)
    for (int u : neighbors[v]) A(v, u) = 1.0;
  return A;
}

Eigen::SparseMatrix<double> Graph::sparse_adjacency() const {
  std::vector<Eigen::Triplet<double>> trip;
  for (int v = 0; v < n; ++v)
    for (int u : neighbors[v]) trip.emplace_back(v, u, 1.0);
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

Graph gen_regular(int n, int ring_degree, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("gen_regular: n must be positive");
  if (ring_degree <= 0 || ring_degree % 2 != 0)
    throw std::invalid_argument("gen_regular: ring_degree must be a positive even integer");
  if (ring_degree >= n)
    throw std::invalid_argument("gen_regular: ring_degree must be smaller than n");
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < n; ++i) {
    for (int s = 1; s <= ring_degree / 2; ++s) {
      nbrs[i].push_back((i + s) % n);
      nbrs[i].push_back(((i - s) % n + n) % n);
    }
  }
  return finalize(n, std::move(nbrs), seed);
}

Graph gen_erdos_renyi(int n, double p, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("gen_erdos_renyi: n must be positive");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("gen_erdos_renyi: p must lie in [0, 1]");
  std::vector<std::vector<int>> nbrs(n);
  auto eng = rng::engine(seed, {0x4552u});  // "ER" stream
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (unif(eng) < p) {
        nbrs[i].push_back(j);
        nbrs[j].push_back(i);
      }
    }
  }
  return finalize(n, std::move(nbrs), seed);
}

Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges,
                       std::optional<std::uint64_t> seed) {
  if (n <= 0) throw std::invalid_argument("graph_from_edges: n must be positive");
  std::vector<std::vector<int>> nbrs(n);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw std::invalid_argument("graph_from_edges: node index out of range");
    if (i == j) continue;  // self-loops are implicit
    nbrs[i].push_back(j);
    nbrs[j].push_back(i);
  }
  return finalize(n, std::move(nbrs), seed);
}

DegreeStats degree_stats(const Graph& g) {
  DegreeStats s;
  s.degrees.resize(g.n);
  for (int v = 0; v < g.n; ++v) s.degrees[v] = g.degree(v);
  auto [mn, mx] = std::minmax_element(s.degrees.begin(), s.degrees.end());
  s.min_degree = *mn;
  s.max_degree = *mx;
  s.is_homogeneous = (s.min_degree == s.max_degree);
  if (s.is_homogeneous) s.q = s.min_degree;
  return s;
}

std::string degree_histogram(const DegreeStats& s) {
  std::map<int, int> counts;
  for (int d : s.degrees) ++counts[d];
  std::ostringstream out;
  out << "degree histogram (|N(v)| incl. self):";
  for (auto [deg, cnt] : counts) out << " " << deg << "x" << cnt;
  return out.str();
}

std::uint64_t graph_hash(const Graph& g) {
  std::uint64_t h = util::fnv1a64_u64(static_cast<std::uint64_t>(g.n));
  for (auto [i, j] : g.edge_list()) {
    h = util::fnv1a64_u64(static_cast<std::uint64_t>(i), h);
    h = util::fnv1a64_u64(static_cast<std::uint64_t>(j), h);
  }
  return h;
}

nlohmann::json to_json(const Graph& g) {
  nlohmann::json j;
  j["n"] = g.n;
  auto edges = nlohmann::json::array();
  for (auto [a, b] : g.edge_list()) edges.push_back({a, b});
  j["edges"] = edges;
  if (g.seed)
    j["seed"] = *g.seed;
  else
    j["seed"] = nullptr;
  return j;
}

Graph graph_from_json(const nlohmann::json& j) {
  if (!j.contains("n") || !j.contains("edges"))
    throw std::invalid_argument("graph json: requires fields n and edges");
  int n = j.at("n").get<int>();
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2)
      throw std::invalid_argument("graph json: each edge must be a pair");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  std::optional<std::uint64_t> seed;
  if (j.contains("seed") && !j.at("seed").is_null()) seed = j.at("seed").get<std::uint64_t>();
  return graph_from_edges(n, edges, seed);
}

Graph read_edge_list(std::istream& in) {
  std::vector<std::pair<int, int>> edges;
  int max_node = -1;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    int i, j;
    if (!(ls >> i >> j)) {
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      throw std::invalid_argument("edge list: expected 'i j' per line, got: " + line);
    }
    if (i < 0 || j < 0) throw std::invalid_argument("edge list: negative node index");
    max_node = std::max({max_node, i, j});
    edges.emplace_back(i, j);
  }
  if (max_node < 0) throw std::invalid_argument("edge list: no edges found");
  return graph_from_edges(max_node + 1, edges);
}

}  // namespace radbound::graphgen
