#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "radbound/graph.hpp"

namespace radbound::spectral {

enum class FilterKind { unnormalized, random_walk, polynomial };

const char* to_string(FilterKind k);
FilterKind filter_kind_from_string(const std::string& s);

struct SpectralReport {
  enum class Method { power_iteration, dense };
  double lambda_max_abs = 0.0;
  Method method = Method::power_iteration;
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {
struct SpectralCache {
  std::once_flag flag;
  SpectralReport report;
};
}  // namespace detail

// A graph-shift-operator matrix g(L) with spectral metadata.
//   unnormalized : adjacency with unit diagonal ("A + I")
//   random_walk  : D^-1 A + I (row-stochastic part plus identity)
//   polynomial   : sum_k c_k L^k
struct GraphFilter {
  FilterKind kind = FilterKind::unnormalized;
  std::vector<double> coefficients;  // polynomial only
  graphgen::Graph graph;
  Eigen::SparseMatrix<double> matrix;
  // One-hop support: matrix(i,j) == 0 whenever i != j and {i,j} not an edge.
  // Structurally true for unnormalized/random_walk; checked (and possibly
  // false) for polynomial degree > 1.
  bool shift_property_holds = true;
  std::shared_ptr<detail::SpectralCache> spectral_radius_cache;

  int n() const { return graph.n; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
};

// L = D - A with D built from the self-looped adjacency, so self-loops
// cancel and every row sums to 0.
Eigen::SparseMatrix<double> laplacian(const graphgen::Graph& g);

GraphFilter build_filter(const graphgen::Graph& g, FilterKind kind,
                         std::vector<double> coefficients = {});

// |lambda_max| of g(L). Power iteration with a dense fallback for n <= 2000;
// the non-symmetric random_walk kind is handled through the similar symmetric
// matrix D^-1/2 A D^-1/2 + I.
SpectralReport spectral_radius(const GraphFilter& f, double tol = 1e-10, int max_iter = 0);

// Cached |lambda_max| (write-once, thread-safe).
double lambda_max_abs(const GraphFilter& f);

Eigen::VectorXd apply_filter(const GraphFilter& f, const Eigen::VectorXd& signal);
Eigen::MatrixXd apply_filter(const GraphFilter& f, const Eigen::MatrixXd& signal);

// Rows/columns of g(L) restricted to sorted N(v).
Eigen::MatrixXd neighborhood_submatrix(const GraphFilter& f, int v);

// Dense CSV, row-major, full precision.
void write_filter_csv(const GraphFilter& f, std::ostream& out);
// {kind, n, triplets: [[i, j, value], ...]} with (i, j) sorted.
nlohmann::json filter_to_json(const GraphFilter& f);

}  // namespace radbound::spectral
