#include "radbound/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "radbound/errors.hpp"
#include "radbound/rng.hpp"
#include "radbound/util.hpp"

namespace radbound::spectral {

namespace {

constexpr int kDenseLimit = 2000;
constexpr std::uint64_t kStartVectorSeed = 0x9d5ec7a1u;

std::vector<double> degrees_with_self(const graphgen::Graph& g) {
  std::vector<double> d(g.n);
  for (int v = 0; v < g.n; ++v) d[v] = static_cast<double>(g.degree(v));
  return d;
}

// Similar symmetric form of the random-walk filter: D^-1/2 A D^-1/2 + I.
// Shares the spectrum of D^-1 A + I.
Eigen::SparseMatrix<double> random_walk_symmetric(const graphgen::Graph& g) {
  auto deg = degrees_with_self(g);
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < g.n; ++i)
    for (int j : g.neighbors[i]) {
      double val = 1.0 / std::sqrt(deg[i] * deg[j]);
      if (i == j) val += 1.0;
      trip.emplace_back(i, j, val);
    }
  Eigen::SparseMatrix<double> s(g.n, g.n);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

double dense_abs_max_eig(const Eigen::SparseMatrix<double>& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(m),
                                                        Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

struct PowerResult {
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stagnated = false;
};

// Power iteration on a symmetric matrix. Start vector is all-ones plus a
// seeded perturbation; `perturbation` is relative to the ones vector. The
// polynomial kind passes O(1) because all-ones is an exact eigenvector of any
// polynomial in L and a tiny perturbation would let the residual test accept
// a non-dominant eigenvalue.
PowerResult power_iteration(const Eigen::SparseMatrix<double>& m, double tol, int max_iter,
                            double perturbation) {
  PowerResult res;
  const int n = static_cast<int>(m.rows());
  auto eng = rng::engine(kStartVectorSeed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) v(i) += perturbation * unif(eng);
  v.normalize();

  double lambda_prev = 0.0;
  int stagnant = 0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd w = m * v;
    double lambda = v.dot(w);
    double resid = (w - lambda * v).norm();
    res.lambda = lambda;
    res.residual = resid;
    res.iterations = it;
    if (resid <= tol * std::max(1.0, std::abs(lambda))) {
      res.converged = true;
      return res;
    }
    if (std::abs(lambda - lambda_prev) <= 1e-3 * tol * std::max(1.0, std::abs(lambda))) {
      if (++stagnant >= 30) {
        res.stagnated = true;
        return res;
      }
    } else {
      stagnant = 0;
    }
    lambda_prev = lambda;
    double wn = w.norm();
    if (wn == 0.0) {  // v lies in the kernel and the kernel dominates
      res.lambda = 0.0;
      res.residual = 0.0;
      res.converged = true;
      return res;
    }
    v = w / wn;
  }
  return res;
}

}  // namespace

const char* to_string(FilterKind k) {
  switch (k) {
    case FilterKind::unnormalized: return "unnormalized";
    case FilterKind::random_walk: return "random_walk";
    case FilterKind::polynomial: return "polynomial";
  }
  return "?";
}

FilterKind filter_kind_from_string(const std::string& s) {
  if (s == "unnormalized") return FilterKind::unnormalized;
  if (s == "random_walk") return FilterKind::random_walk;
  if (s == "polynomial") return FilterKind::polynomial;
  throw std::invalid_argument("unknown filter kind: " + s);
}

Eigen::SparseMatrix<double> laplacian(const graphgen::Graph& g) {
  auto deg = degrees_with_self(g);
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < g.n; ++i)
    for (int j : g.neighbors[i]) {
      double val = (i == j) ? deg[i] - 1.0 : -1.0;
      if (val != 0.0) trip.emplace_back(i, j, val);
    }
  Eigen::SparseMatrix<double> l(g.n, g.n);
  l.setFromTriplets(trip.begin(), trip.end());
  return l;
}

GraphFilter build_filter(const graphgen::Graph& g, FilterKind kind,
                         std::vector<double> coefficients) {
  GraphFilter f;
  f.kind = kind;
  f.graph = g;
  f.spectral_radius_cache = std::make_shared<detail::SpectralCache>();
  const int n = g.n;
  switch (kind) {
    case FilterKind::unnormalized: {
      f.matrix = g.sparse_adjacency();
      break;
    }
    case FilterKind::random_walk: {
      auto deg = degrees_with_self(g);
      std::vector<Eigen::Triplet<double>> trip;
      for (int i = 0; i < n; ++i)
        for (int j : g.neighbors[i]) {
          double val = 1.0 / deg[i];
          if (i == j) val += 1.0;
          trip.emplace_back(i, j, val);
        }
      f.matrix.resize(n, n);
      f.matrix.setFromTriplets(trip.begin(), trip.end());
      break;
    }
    case FilterKind::polynomial: {
      if (coefficients.empty())
        throw std::invalid_argument("polynomial filter: coefficient list must be non-empty");
      f.coefficients = coefficients;
      Eigen::SparseMatrix<double> l = laplacian(g);
      Eigen::SparseMatrix<double> acc(n, n);
      acc.setIdentity();
      Eigen::SparseMatrix<double> result(n, n);
      result = coefficients[0] * acc;
      for (std::size_t k = 1; k < coefficients.size(); ++k) {
        acc = (acc * l).pruned(1e-300);
        result += coefficients[k] * acc;
      }
      result.prune(0.0, 0.0);
      f.matrix = result;
      // One-hop support may fail for degree > 1; report, don't enforce.
      bool holds = true;
      for (int col = 0; col < result.outerSize() && holds; ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(result, col); it; ++it) {
          if (std::abs(it.value()) > 1e-12 &&
              !g.has_edge(static_cast<int>(it.row()), static_cast<int>(it.col()))) {
            holds = false;
            break;
          }
        }
      f.shift_property_holds = holds;
      break;
    }
  }
  return f;
}

SpectralReport spectral_radius(const GraphFilter& f, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_radius: tol must be positive");
  const int n = f.n();
  if (max_iter <= 0) max_iter = 10 * std::max(n, 30);

  const bool is_rw = f.kind == FilterKind::random_walk;
  Eigen::SparseMatrix<double> sym = is_rw ? random_walk_symmetric(f.graph) : f.matrix;

  SpectralReport rep;
  if (is_rw && n <= kDenseLimit) {
    rep.lambda_max_abs = dense_abs_max_eig(sym);
    rep.method = SpectralReport::Method::dense;
    rep.iterations = 0;
    rep.residual = 0.0;
    return rep;
  }

  double perturbation = (f.kind == FilterKind::polynomial) ? 1.0 : 1e-12;
  PowerResult pr = power_iteration(sym, tol, max_iter, perturbation);
  if (pr.converged) {
    rep.lambda_max_abs = std::abs(pr.lambda);
    rep.method = SpectralReport::Method::power_iteration;
    rep.iterations = pr.iterations;
    rep.residual = pr.residual;
    return rep;
  }
  if (n <= kDenseLimit) {
    rep.lambda_max_abs = dense_abs_max_eig(sym);
    rep.method = SpectralReport::Method::dense;
    rep.iterations = pr.iterations;
    rep.residual = 0.0;
    return rep;
  }
  if (pr.stagnated) {
    // Beyond the dense range; the Rayleigh value has settled, report it with
    // the achieved residual.
    rep.lambda_max_abs = std::abs(pr.lambda);
    rep.method = SpectralReport::Method::power_iteration;
    rep.iterations = pr.iterations;
    rep.residual = pr.residual;
    return rep;
  }
  std::ostringstream msg;
  msg << "spectral_radius did not converge: n=" << n << " iterations=" << pr.iterations
      << " residual=" << pr.residual << " (tol=" << tol << ")";
  throw numerical_error(msg.str());
}

double lambda_max_abs(const GraphFilter& f) {
  auto cache = f.spectral_radius_cache;
  if (!cache) return spectral_radius(f).lambda_max_abs;
  std::call_once(cache->flag, [&] { cache->report = spectral_radius(f); });
  return cache->report.lambda_max_abs;
}

Eigen::VectorXd apply_filter(const GraphFilter& f, const Eigen::VectorXd& signal) {
  if (signal.size() != f.n())
    throw std::invalid_argument("apply_filter: signal length does not match graph size");
  return f.matrix * signal;
}

Eigen::MatrixXd apply_filter(const GraphFilter& f, const Eigen::MatrixXd& signal) {
  if (signal.rows() != f.n())
    throw std::invalid_argument("apply_filter: signal rows do not match graph size");
  return f.matrix * signal;
}

Eigen::MatrixXd neighborhood_submatrix(const GraphFilter& f, int v) {
  if (v < 0 || v >= f.n()) throw std::invalid_argument("neighborhood_submatrix: bad node");
  const auto& nbrs = f.graph.neighbors[v];  // sorted, self included
  const int q = static_cast<int>(nbrs.size());
  Eigen::MatrixXd sub(q, q);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) sub(a, b) = f.matrix.coeff(nbrs[a], nbrs[b]);
  return sub;
}

void write_filter_csv(const GraphFilter& f, std::ostream& out) {
  Eigen::MatrixXd d = f.dense();
  for (int i = 0; i < d.rows(); ++i) {
    for (int j = 0; j < d.cols(); ++j) {
      if (j) out << ',';
      out << util::format_double(d(i, j));
    }
    out << '\n';
  }
}

nlohmann::json filter_to_json(const GraphFilter& f) {
  nlohmann::json j;
  j["kind"] = to_string(f.kind);
  j["n"] = f.n();
  if (f.kind == FilterKind::polynomial) j["coefficients"] = f.coefficients;
  auto triplets = nlohmann::json::array();
  std::vector<std::tuple<int, int, double>> entries;
  for (int col = 0; col < f.matrix.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(f.matrix, col); it; ++it)
      if (it.value() != 0.0)
        entries.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  std::sort(entries.begin(), entries.end());
  for (auto& [i, jj, val] : entries) triplets.push_back({i, jj, val});
  j["triplets"] = triplets;
  j["shift_property_holds"] = f.shift_property_holds;
  return j;
}

}  // namespace radbound::spectral
