#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "radbound/gcn.hpp"
#include "radbound/spectral.hpp"

namespace radbound::radest {

// num_mc = kExhaustive enumerates all 2^m sign patterns (m <= 20).
inline constexpr std::int64_t kExhaustive = 0;

struct RcEstimate {
  enum class Method { closed_form_linear, pga, brute_force };
  double value = 0.0;
  double std_error = 0.0;  // Monte-Carlo error over sign draws; 0 when exhaustive
  Method method = Method::closed_form_linear;
  std::int64_t num_mc = 0;  // sign patterns evaluated
  int num_restarts = 0;     // pga only
  bool is_exact_in_sup = false;
  bool exhaustive = false;
  double grid_error = 0.0;  // brute_force only: bound on the value error
  std::uint64_t seed = 0;
};

const char* to_string(RcEstimate::Method m);

// Exact for the linear activation sigma(s) = L s: the sup collapses to
// L^2 R D ||M^T eps||_2 with M the labeled rows of g(L)^2 X.
RcEstimate rc_linear_closed_form(const gcn::HypothesisSpec& spec,
                                 const spectral::GraphFilter& filter, const Eigen::MatrixXd& X,
                                 std::int64_t num_mc, std::uint64_t seed);

struct PgaOptions {
  int num_restarts = 20;
  int steps = 300;
  double lr = 0.0;  // <= 0: default 0.05 R / sqrt(steps)
  int width_k = 4;
};

// Projected gradient ascent on |sum_j eps_j f(x_j)| over the norm balls,
// best of num_restarts seeded starts per sign draw. A certified lower
// estimate: every inner maximum is a feasible value of the sup.
RcEstimate rc_pga(const gcn::HypothesisSpec& spec, const spectral::GraphFilter& filter,
                  const Eigen::MatrixXd& X, const gcn::Activation& act, std::int64_t num_mc,
                  const PgaOptions& opts, std::uint64_t seed);

// Full sign enumeration plus a direction grid over the rank-one reduction
// (single nonzero W1 column of norm R, |w2 entry| = D_bound). m <= 12, d <= 3.
RcEstimate rc_brute_force(const gcn::HypothesisSpec& spec, const spectral::GraphFilter& filter,
                          const Eigen::MatrixXd& X, const gcn::Activation& act,
                          int grid_resolution);

// Grid size for which the reported brute-force error bound is <= target.
int suggested_grid_resolution(const gcn::HypothesisSpec& spec,
                              const spectral::GraphFilter& filter, const Eigen::MatrixXd& X,
                              double target_error);

// Includes the instance fingerprint (graph hash, filter kind, spec constants).
nlohmann::json estimate_to_json(const RcEstimate& est, const gcn::HypothesisSpec& spec,
                                const spectral::GraphFilter& filter);

}  // namespace radbound::radest
