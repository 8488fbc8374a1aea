#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "radbound/gcn.hpp"
#include "radbound/spectral.hpp"

namespace radbound::bounds {

// For each labeled node j, the fixed enumeration n_1(j), ..., n_qj(j) of N(j)
// in ascending node order. Part of the reproducibility contract: the upper
// bound's entry sum depends on it.
struct NeighborOrdering {
  std::vector<int> labeled;
  std::vector<std::vector<int>> lists;
  std::uint64_t hash() const;
};

NeighborOrdering build_ordering(const graphgen::Graph& g, const std::vector<int>& labeled);

struct BoundTerms {
  double prefactor = 0.0;       // 8 L^2 B D R
  double lambda_max_abs = 0.0;  // |lambda_max(g(L))|
  double sqrt_q_over_m = 0.0;
  double neighbor_entry_sum = 0.0;  // sum_l max_j |g(L)[j, n_l(j)]|
};

struct BoundReport {
  double upper_thm1 = 0.0;  // product of the four terms
  BoundTerms terms;
  std::optional<double> lower_thm2;
  bool lower_applicable = false;
  std::string lower_reason;
  bool relaxed = false;  // q taken as max degree on a non-homogeneous graph
  int q_used = 0;
  int m = 0;
  std::uint64_t ordering_hash = 0;
};

struct UpperOptions {
  bool allow_shift_violation = false;  // accept polynomial filters with >1-hop support
  bool relax_heterogeneous = false;    // q := max degree instead of rejecting
  double spectral_tol = 1e-10;
};

BoundReport upper_bound_thm1(const gcn::HypothesisSpec& spec, const spectral::GraphFilter& filter,
                             const NeighborOrdering& ordering, const UpperOptions& opts = {});

struct LowerBoundResult {
  std::optional<double> value;  // nonnegative when applicable
  bool applicable = false;
  std::string reason;
  int reference_node = -1;
  std::vector<double> per_k_norm;     // ||X(N(k),:)^T g(L)[N(k), k]||_2 per k in N(ref)
  std::vector<double> per_k_row_sum;  // sum_t g(L)[k, N(k)] per k in N(ref)
  double max_norm_term = 0.0;         // diagnostic: max_k of the norm factor
};

// min over k in N(reference) of the norm-times-row-sum product, scaled by
// L^2 D R / sqrt(m); inapplicable when the row sums vary over k.
LowerBoundResult lower_bound_thm2(const gcn::HypothesisSpec& spec,
                                  const spectral::GraphFilter& filter, const Eigen::MatrixXd& X,
                                  int reference_node = -1);

double thm3_complexity_term(double rc_term, double alpha_l);
double thm3_deviation_term(double delta, int n_count);
// empirical_risk + 2 alpha_l rc_term + sqrt(2 log(2/delta) / n_count).
// n_count is the caller's choice of deviation denominator (graph size by
// default; passing m instead is the documented deviation).
double generalization_bound_thm3(double empirical_risk, double rc_term, double alpha_l,
                                 double delta, int n_count);

enum class RateFamily { er_unnormalized, er_normalized, regular_unnormalized, regular_normalized };
const char* to_string(RateFamily f);
RateFamily rate_family_from_string(const std::string& s);

struct MRule {
  enum class Kind { fixed, fraction, sqrt_n };
  Kind kind = Kind::fixed;
  double value = 16.0;
  int labeled_count(int n) const;
};

struct RateOptions {
  double c = 2.0;  // ER edge probability p = c log(n) / n
  int ring_degree = 2;
  MRule m_rule;
  bool prefix_omega = false;  // default: random placement, seeded per row
  double L = 1.0, B = 1.0, R = 1.0, D_bound = 1.0;
  double spectral_tol = 1e-10;
};

struct RateRow {
  int n = 0;
  std::uint64_t seed = 0;
  double lambda_max = 0.0;
  int q = 0;
  bool relaxed = false;
  double upper_thm1 = 0.0;
};

struct RateAgg {
  int n = 0;
  double mean_lambda = 0.0;
  double mean_q = 0.0;
  double mean_upper = 0.0;
};

struct RateTable {
  RateFamily family{};
  std::vector<RateRow> rows;   // one per (n, seed)
  std::vector<RateAgg> per_n;  // seed-averaged
};

RateTable rate_table(RateFamily family, const std::vector<int>& sizes,
                     const std::vector<std::uint64_t>& seeds, const RateOptions& opts = {});

// Sorted labeled-node set: first m nodes, or a seeded uniform draw without
// replacement.
std::vector<int> pick_labeled(int n, int m, bool prefix, std::uint64_t seed);

// Header: n,seed,lambda_max,q,relaxed,upper_thm1
void write_rate_csv(const RateTable& table, std::ostream& out);

// Least-squares slope of log(upper_thm1) against log(log(n)) over the rows.
double fit_loglog_slope(const RateTable& table);

nlohmann::json report_to_json(const BoundReport& report);

}  // namespace radbound::bounds
