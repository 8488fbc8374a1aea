#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "radbound/graph.hpp"
#include "radbound/spectral.hpp"

using namespace radbound;
using spectral::FilterKind;

namespace {

// Dense oracle, independent of spectral_radius: largest |eigenvalue| of a
// symmetric matrix.
double dense_abs_max(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

Eigen::MatrixXd rw_similar_dense(const graphgen::Graph& g) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(g.n, g.n);
  for (int i = 0; i < g.n; ++i)
    for (int j : g.neighbors[i]) {
      s(i, j) = 1.0 / std::sqrt(double(g.degree(i)) * double(g.degree(j)));
      if (i == j) s(i, j) += 1.0;
    }
  return s;
}

std::vector<spectral::GraphFilter> symmetric_zoo() {
  std::vector<spectral::GraphFilter> zoo;
  zoo.push_back(spectral::build_filter(graphgen::gen_regular(8, 2, 0), FilterKind::unnormalized));
  zoo.push_back(spectral::build_filter(graphgen::gen_regular(10, 4, 0), FilterKind::unnormalized));
  zoo.push_back(
      spectral::build_filter(graphgen::gen_erdos_renyi(20, 0.3, 5), FilterKind::unnormalized));
  zoo.push_back(spectral::build_filter(graphgen::gen_regular(8, 2, 0), FilterKind::polynomial,
                                       {0.5, -1.0, 0.25}));
  return zoo;
}

}  // namespace

TEST_SUITE_BEGIN("spectral");

TEST_CASE("laplacian") {
  SUBCASE("cycle rows sum to zero, symmetric") {
    auto g = graphgen::gen_regular(4, 2, 0);
    Eigen::MatrixXd L(spectral::laplacian(g));
    for (int i = 0; i < 4; ++i) CHECK(std::abs(L.row(i).sum()) < 1e-15);
    CHECK((L - L.transpose()).norm() == 0.0);
  }
  SUBCASE("edgeless graph: self-loop cancels, L = 0") {
    auto g = graphgen::graph_from_edges(5, {});
    CHECK(Eigen::MatrixXd(spectral::laplacian(g)).norm() == 0.0);
  }
  SUBCASE("K3: diagonal 2, off-diagonal -1") {
    auto g = graphgen::gen_regular(3, 2, 0);
    Eigen::MatrixXd L(spectral::laplacian(g));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(L(i, j) == (i == j ? 2.0 : -1.0));
  }
}

TEST_CASE("build_filter") {
  auto c4 = graphgen::gen_regular(4, 2, 0);
  SUBCASE("unnormalized on a cycle: three unit entries per row") {
    auto f = spectral::build_filter(c4, FilterKind::unnormalized);
    Eigen::MatrixXd d = f.dense();
    for (int i = 0; i < 4; ++i) {
      int ones = 0;
      for (int j = 0; j < 4; ++j)
        if (d(i, j) == 1.0) ++ones;
      CHECK(ones == 3);
      CHECK(d.row(i).sum() == 3.0);
    }
    CHECK(f.shift_property_holds);
  }
  SUBCASE("random_walk row sums are 2") {
    auto f = spectral::build_filter(c4, FilterKind::random_walk);
    Eigen::MatrixXd d = f.dense();
    for (int i = 0; i < 4; ++i) CHECK(std::abs(d.row(i).sum() - 2.0) < 1e-14);
    CHECK(f.shift_property_holds);
  }
  SUBCASE("constant polynomial is the identity") {
    auto f = spectral::build_filter(c4, FilterKind::polynomial, {1.0});
    CHECK((f.dense() - Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);
    CHECK(f.shift_property_holds);
  }
  SUBCASE("empty polynomial rejected") {
    CHECK_THROWS_AS(spectral::build_filter(c4, FilterKind::polynomial, {}),
                    std::invalid_argument);
  }
  SUBCASE("degree-2 polynomial on C8 breaks the shift property and is flagged") {
    auto c8 = graphgen::gen_regular(8, 2, 0);
    auto f = spectral::build_filter(c8, FilterKind::polynomial, {0.0, 0.0, 1.0});
    CHECK_FALSE(f.shift_property_holds);
  }
}

TEST_CASE("graph-shift mask holds for one-hop kinds") {
  for (auto kind : {FilterKind::unnormalized, FilterKind::random_walk}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto g = graphgen::gen_erdos_renyi(15, 0.25, seed);
      auto f = spectral::build_filter(g, kind);
      Eigen::MatrixXd d = f.dense();
      for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
          if (d(i, j) != 0.0) CHECK((i == j || g.has_edge(i, j)));
    }
  }
}

TEST_CASE("spectral_radius closed forms") {
  SUBCASE("cycles: |lambda_max| = 3") {
    for (int n : {4, 5, 16, 101}) {
      auto f = spectral::build_filter(graphgen::gen_regular(n, 2, 0), FilterKind::unnormalized);
      auto rep = spectral::spectral_radius(f);
      CHECK(std::abs(rep.lambda_max_abs - 3.0) < 1e-10);
    }
  }
  SUBCASE("complete graphs: |lambda_max| = n") {
    for (int n : {3, 7, 21}) {
      auto f =
          spectral::build_filter(graphgen::gen_regular(n, n - 1, 0), FilterKind::unnormalized);
      auto rep = spectral::spectral_radius(f);
      CHECK(std::abs(rep.lambda_max_abs - double(n)) < 1e-10);
    }
    auto kn = graphgen::gen_erdos_renyi(12, 1.0, 0);
    auto f = spectral::build_filter(kn, FilterKind::unnormalized);
    CHECK(std::abs(spectral::spectral_radius(f).lambda_max_abs - 12.0) < 1e-10);
  }
  SUBCASE("ER(30, 0.2, seed 3) vs dense oracle") {
    auto g = graphgen::gen_erdos_renyi(30, 0.2, 3);
    auto f = spectral::build_filter(g, FilterKind::unnormalized);
    auto rep = spectral::spectral_radius(f, 1e-10);
    CHECK(std::abs(rep.lambda_max_abs - dense_abs_max(f.dense())) < 1e-8);
  }
  SUBCASE("power iteration vs dense oracle on 100 random ER graphs") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      auto g = graphgen::gen_erdos_renyi(30, 0.2, seed);
      auto f = spectral::build_filter(g, FilterKind::unnormalized);
      auto rep = spectral::spectral_radius(f, 1e-10);
      CHECK(std::abs(rep.lambda_max_abs - dense_abs_max(f.dense())) <= 1e-8);
      if (rep.method == spectral::SpectralReport::Method::power_iteration)
        CHECK(rep.residual <= 1e-10 * std::max(1.0, rep.lambda_max_abs));
    }
  }
  SUBCASE("random_walk spectral radius equals the similar-matrix value") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto g = graphgen::gen_erdos_renyi(25, 0.3, seed);
      auto f = spectral::build_filter(g, FilterKind::random_walk);
      auto rep = spectral::spectral_radius(f);
      CHECK(std::abs(rep.lambda_max_abs - dense_abs_max(rw_similar_dense(g))) < 1e-10);
      // row-stochastic part always has top eigenvalue 1
      CHECK(std::abs(rep.lambda_max_abs - 2.0) < 1e-10);
    }
  }
  SUBCASE("tol must be positive") {
    auto f = spectral::build_filter(graphgen::gen_regular(4, 2, 0), FilterKind::unnormalized);
    CHECK_THROWS_AS(spectral::spectral_radius(f, 0.0), std::invalid_argument);
  }
}

TEST_CASE("random_walk eigenvalue magnitudes lie in [0, 2]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto g = graphgen::gen_erdos_renyi(20, 0.3, seed);
    Eigen::MatrixXd s = rw_similar_dense(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
    for (int i = 0; i < g.n; ++i) {
      CHECK(std::abs(solver.eigenvalues()(i)) <= 2.0 + 1e-9);
      CHECK(solver.eigenvalues()(i) >= -1e-9);
    }
  }
}

TEST_CASE("apply_filter") {
  auto c4 = graphgen::gen_regular(4, 2, 0);
  SUBCASE("identity filter leaves the signal unchanged") {
    auto f = spectral::build_filter(c4, FilterKind::polynomial, {1.0});
    Eigen::VectorXd s(4);
    s << 1.5, -2.0, 0.25, 3.0;
    CHECK((spectral::apply_filter(f, s) - s).norm() == 0.0);
  }
  SUBCASE("all-ones on a 4-cycle gives constant 3") {
    auto f = spectral::build_filter(c4, FilterKind::unnormalized);
    Eigen::VectorXd out = spectral::apply_filter(f, Eigen::VectorXd(Eigen::VectorXd::Ones(4)));
    for (int i = 0; i < 4; ++i) CHECK(out(i) == 3.0);
  }
  SUBCASE("direct product vs eigendecomposition route on C6") {
    auto f = spectral::build_filter(graphgen::gen_regular(6, 2, 0), FilterKind::unnormalized);
    std::mt19937_64 eng(77);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::VectorXd s(6);
    for (int i = 0; i < 6; ++i) s(i) = unif(eng);
    Eigen::MatrixXd d = f.dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(d);
    Eigen::VectorXd via_eig = solver.eigenvectors() *
                              (solver.eigenvalues().asDiagonal() *
                               (solver.eigenvectors().transpose() * s));
    CHECK((spectral::apply_filter(f, s) - via_eig).norm() <= 1e-10);
  }
  SUBCASE("linearity") {
    auto f = spectral::build_filter(graphgen::gen_erdos_renyi(12, 0.4, 2),
                                    FilterKind::random_walk);
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd s(12), t(12);
      for (int i = 0; i < 12; ++i) s(i) = unif(eng), t(i) = unif(eng);
      double a = unif(eng), b = unif(eng);
      Eigen::VectorXd lhs = spectral::apply_filter(f, Eigen::VectorXd(a * s + b * t));
      Eigen::VectorXd rhs =
          a * spectral::apply_filter(f, s) + b * spectral::apply_filter(f, t);
      CHECK((lhs - rhs).norm() <= 1e-10);
    }
  }
  SUBCASE("dimension mismatch throws") {
    auto f = spectral::build_filter(c4, FilterKind::unnormalized);
    CHECK_THROWS_AS(spectral::apply_filter(f, Eigen::VectorXd(Eigen::VectorXd::Ones(5))), std::invalid_argument);
  }
}

TEST_CASE("neighborhood submatrices and interlacing") {
  SUBCASE("edgeless graph: 1x1 submatrix") {
    auto g = graphgen::graph_from_edges(3, {});
    auto f = spectral::build_filter(g, FilterKind::unnormalized);
    Eigen::MatrixXd sub = spectral::neighborhood_submatrix(f, 1);
    CHECK(sub.rows() == 1);
    CHECK(sub(0, 0) == 1.0);
  }
  SUBCASE("4-cycle, v = 0: indices {0,1,3}") {
    auto f = spectral::build_filter(graphgen::gen_regular(4, 2, 0), FilterKind::unnormalized);
    Eigen::MatrixXd sub = spectral::neighborhood_submatrix(f, 0);
    Eigen::MatrixXd expect(3, 3);
    expect << 1, 1, 1, 1, 1, 0, 1, 0, 1;
    CHECK((sub - expect).norm() == 0.0);
  }
  SUBCASE("interlacing: ||g_v(L)||_2 <= |lambda_max| for symmetric filters") {
    for (const auto& f : symmetric_zoo()) {
      double lam = spectral::lambda_max_abs(f);
      for (int v = 0; v < f.n(); ++v) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(spectral::neighborhood_submatrix(f, v));
        CHECK(svd.singularValues()(0) <= lam + 1e-9);
      }
    }
  }
}

TEST_CASE("export formats") {
  auto f = spectral::build_filter(graphgen::gen_regular(4, 2, 0), FilterKind::unnormalized);
  std::ostringstream csv;
  spectral::write_filter_csv(f, csv);
  CHECK(csv.str().substr(0, 8) == "1,1,0,1\n");
  auto j = spectral::filter_to_json(f);
  CHECK(j["kind"] == "unnormalized");
  CHECK(j["n"] == 4);
  CHECK(j["triplets"].size() == 12);  // 4 diagonal + 8 edge entries
}

TEST_SUITE_END();
