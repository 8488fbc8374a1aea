#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "radbound/graph.hpp"

using namespace radbound;
using graphgen::Graph;

TEST_SUITE_BEGIN("graphgen");

TEST_CASE("gen_regular small cases") {
  SUBCASE("4-cycle") {
    Graph g = graphgen::gen_regular(4, 2, 0);
    auto s = graphgen::degree_stats(g);
    for (int v = 0; v < 4; ++v) CHECK(g.degree(v) == 3);
    CHECK(s.is_homogeneous);
    CHECK(*s.q == 3);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(0, 3));
    CHECK_FALSE(g.has_edge(0, 2));
  }
  SUBCASE("triangle") {
    Graph g = graphgen::gen_regular(3, 2, 0);
    for (int v = 0; v < 3; ++v) CHECK(g.degree(v) == 3);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(1, 2));
    CHECK(g.has_edge(0, 2));
  }
  SUBCASE("circulant C8(1,2)") {
    Graph g = graphgen::gen_regular(8, 4, 0);
    for (int v = 0; v < 8; ++v) CHECK(g.degree(v) == 5);
    CHECK(g.has_edge(0, 2));
    CHECK_FALSE(g.has_edge(0, 3));
  }
  SUBCASE("rejects bad ring degrees") {
    CHECK_THROWS_AS(graphgen::gen_regular(4, 4, 0), std::invalid_argument);
    CHECK_THROWS_AS(graphgen::gen_regular(4, 3, 0), std::invalid_argument);
    CHECK_THROWS_AS(graphgen::gen_regular(4, 0, 0), std::invalid_argument);
  }
}

TEST_CASE("gen_erdos_renyi endpoints and reproducibility") {
  SUBCASE("p = 0: self-loops only") {
    Graph g = graphgen::gen_erdos_renyi(10, 0.0, 1);
    for (int v = 0; v < 10; ++v) CHECK(g.degree(v) == 1);
  }
  SUBCASE("p = 1: complete") {
    Graph g = graphgen::gen_erdos_renyi(10, 1.0, 1);
    for (int v = 0; v < 10; ++v) CHECK(g.degree(v) == 10);
  }
  SUBCASE("p outside [0,1] rejected") {
    CHECK_THROWS_AS(graphgen::gen_erdos_renyi(10, -0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(graphgen::gen_erdos_renyi(10, 1.1, 1), std::invalid_argument);
  }
  SUBCASE("same seed, same graph; different seed, (almost surely) different") {
    Graph a = graphgen::gen_erdos_renyi(30, 0.3, 42);
    Graph b = graphgen::gen_erdos_renyi(30, 0.3, 42);
    CHECK(a.neighbors == b.neighbors);
    CHECK(graphgen::graph_hash(a) == graphgen::graph_hash(b));
    Graph c = graphgen::gen_erdos_renyi(30, 0.3, 43);
    CHECK(graphgen::graph_hash(a) != graphgen::graph_hash(c));
  }
  SUBCASE("ER(100, ln(100)/100) is heterogeneous") {
    Graph g = graphgen::gen_erdos_renyi(100, std::log(100.0) / 100.0, 7);
    CHECK_FALSE(graphgen::degree_stats(g).is_homogeneous);
  }
}

TEST_CASE("degree_stats on hand-built graphs") {
  SUBCASE("edgeless graph") {
    Graph g = graphgen::graph_from_edges(5, {});
    auto s = graphgen::degree_stats(g);
    CHECK(s.is_homogeneous);
    CHECK(*s.q == 1);
  }
  SUBCASE("star on 5 nodes") {
    Graph g = graphgen::graph_from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
    auto s = graphgen::degree_stats(g);
    CHECK_FALSE(s.is_homogeneous);
    CHECK(s.min_degree == 2);
    CHECK(s.max_degree == 5);
    CHECK_FALSE(s.q.has_value());
  }
}

TEST_CASE("adjacency invariants on generated graphs") {
  auto check_graph = [](const Graph& g) {
    Eigen::MatrixXd A = g.dense_adjacency();
    for (int i = 0; i < g.n; ++i) {
      CHECK(A(i, i) == 1.0);
      for (int j = 0; j < g.n; ++j) CHECK(A(i, j) == A(j, i));
    }
  };
  check_graph(graphgen::gen_regular(9, 4, 0));
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    check_graph(graphgen::gen_erdos_renyi(25, 0.3, seed));
}

TEST_CASE("gen_regular is always homogeneous") {
  for (int n : {4, 7, 12, 33})
    for (int rd : {2, 4}) {
      if (rd >= n) continue;
      auto s = graphgen::degree_stats(graphgen::gen_regular(n, rd, 0));
      CHECK(s.is_homogeneous);
      CHECK(*s.q == rd + 1);
    }
}

TEST_CASE("ER edge frequency concentrates at p") {
  // 1000 samples of ER(20, 0.3): empirical off-diagonal edge frequency
  // within 0.3 +- 0.02 (binomial concentration, ~19 sigma margin).
  long long edges = 0, pairs = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Graph g = graphgen::gen_erdos_renyi(20, 0.3, seed);
    edges += static_cast<long long>(g.edge_list().size());
    pairs += 20 * 19 / 2;
  }
  double freq = static_cast<double>(edges) / static_cast<double>(pairs);
  CHECK(freq > 0.28);
  CHECK(freq < 0.32);
}

TEST_CASE("json round trip drops nothing") {
  Graph g = graphgen::gen_erdos_renyi(12, 0.4, 9);
  auto j = graphgen::to_json(g);
  CHECK(j["n"] == 12);
  Graph back = graphgen::graph_from_json(j);
  CHECK(back.neighbors == g.neighbors);
  CHECK(back.seed.has_value());
  CHECK(*back.seed == 9);
}

TEST_CASE("edge list text reader") {
  std::istringstream in("0 1\n1 2\n2 2\n\n3 0\n");
  Graph g = graphgen::read_edge_list(in);
  CHECK(g.n == 4);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
  CHECK(g.has_edge(0, 3));
  CHECK(g.has_edge(2, 2));  // implicit self-loop, the "2 2" line is redundant
  CHECK_FALSE(g.has_edge(0, 2));
}

TEST_SUITE_END();
