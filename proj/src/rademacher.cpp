#include "radbound/rademacher.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "radbound/errors.hpp"
#include "radbound/rng.hpp"
#include "radbound/util.hpp"

namespace radbound::radest {

namespace {

constexpr int kExhaustiveMaxM = 20;

// Sign vector for Monte-Carlo draw `index` under counter-based seeding.
Eigen::VectorXd draw_signs(int m, std::uint64_t seed, std::uint64_t index) {
  auto eng = rng::engine(seed, {0xe125u, index});
  std::uniform_int_distribution<int> bit(0, 1);
  Eigen::VectorXd eps(m);
  for (int j = 0; j < m; ++j) eps(j) = bit(eng) ? 1.0 : -1.0;
  return eps;
}

Eigen::VectorXd pattern_signs(int m, std::uint64_t pattern) {
  Eigen::VectorXd eps(m);
  for (int j = 0; j < m; ++j) eps(j) = ((pattern >> j) & 1u) ? 1.0 : -1.0;
  return eps;
}

std::int64_t num_draws(std::int64_t num_mc, int m, const char* who) {
  if (num_mc == kExhaustive) {
    if (m > kExhaustiveMaxM)
      throw std::invalid_argument(std::string(who) +
                                  ": exhaustive enumeration requires m <= 20");
    return std::int64_t{1} << m;
  }
  if (num_mc < 1) throw std::invalid_argument(std::string(who) + ": num_mc must be positive");
  return num_mc;
}

struct Summary {
  double value;
  double std_error;
};

Summary summarize(const std::vector<double>& per_draw, bool exhaustive) {
  Summary s;
  s.value = util::mean(per_draw);
  s.std_error = exhaustive ? 0.0
                           : util::sample_stdev(per_draw) /
                                 std::sqrt(static_cast<double>(per_draw.size()));
  return s;
}

double operator_norm_dense(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

const char* to_string(RcEstimate::Method m) {
  switch (m) {
    case RcEstimate::Method::closed_form_linear: return "closed_form_linear";
    case RcEstimate::Method::pga: return "pga";
    case RcEstimate::Method::brute_force: return "brute_force";
  }
  return "?";
}

RcEstimate rc_linear_closed_form(const gcn::HypothesisSpec& spec,
                                 const spectral::GraphFilter& filter, const Eigen::MatrixXd& X,
                                 std::int64_t num_mc, std::uint64_t seed) {
  spec.validate(filter.n());
  if (X.rows() != filter.n())
    throw std::invalid_argument("rc_linear_closed_form: X rows must equal the node count");
  gcn::validate_features(spec, X);

  const int m = spec.m();
  const bool exhaustive = num_mc == kExhaustive;
  const std::int64_t draws = num_draws(num_mc, m, "rc_linear_closed_form");

  // Labeled rows of g(L)^2 X; the sup over the balls is L^2 R D ||M^T eps||.
  Eigen::MatrixXd M(m, X.cols());
  {
    Eigen::MatrixXd g2x = filter.matrix * (filter.matrix * X);
    for (int i = 0; i < m; ++i) M.row(i) = g2x.row(spec.labeled_set[i]);
  }
  const double scale =
      spec.lipschitz_L * spec.lipschitz_L * spec.R * spec.D_bound / static_cast<double>(m);

  std::vector<double> per_draw(static_cast<std::size_t>(draws));
  for (std::int64_t t = 0; t < draws; ++t) {
    Eigen::VectorXd eps = exhaustive ? pattern_signs(m, static_cast<std::uint64_t>(t))
                                     : draw_signs(m, seed, static_cast<std::uint64_t>(t));
    per_draw[static_cast<std::size_t>(t)] = scale * (M.transpose() * eps).norm();
  }

  Summary s = summarize(per_draw, exhaustive);
  RcEstimate est;
  est.value = s.value;
  est.std_error = s.std_error;
  est.method = RcEstimate::Method::closed_form_linear;
  est.num_mc = draws;
  est.is_exact_in_sup = true;
  est.exhaustive = exhaustive;
  est.seed = seed;
  return est;
}

RcEstimate rc_pga(const gcn::HypothesisSpec& spec, const spectral::GraphFilter& filter,
                  const Eigen::MatrixXd& X, const gcn::Activation& act, std::int64_t num_mc,
                  const PgaOptions& opts, std::uint64_t seed) {
  spec.validate(filter.n());
  if (X.rows() != filter.n())
    throw std::invalid_argument("rc_pga: X rows must equal the node count");
  gcn::validate_features(spec, X);
  if (opts.num_restarts < 1 || opts.steps < 1 || opts.width_k < 1)
    throw std::invalid_argument("rc_pga: restarts, steps and width must be positive");

  const int m = spec.m();
  const int n = filter.n();
  const int d = static_cast<int>(X.cols());
  const bool exhaustive = num_mc == kExhaustive;
  const std::int64_t draws = num_draws(num_mc, m, "rc_pga");
  const double lr = opts.lr > 0.0 ? opts.lr : 0.05 * spec.R / std::sqrt(opts.steps);

  std::vector<double> per_draw(static_cast<std::size_t>(draws));
  for (std::int64_t t = 0; t < draws; ++t) {
    Eigen::VectorXd eps = exhaustive ? pattern_signs(m, static_cast<std::uint64_t>(t))
                                     : draw_signs(m, seed, static_cast<std::uint64_t>(t));
    Eigen::VectorXd dLdf = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < m; ++j) dLdf(spec.labeled_set[j]) = eps(j);

    double best = 0.0;
    int diverged = 0;
    for (int r = 0; r < opts.num_restarts; ++r) {
      double ascent_sign = (r % 2 == 0) ? 1.0 : -1.0;
      gcn::GcnParams params =
          gcn::init_params(d, opts.width_k, act, spec,
                           rng::derive(seed, {0x96au, static_cast<std::uint64_t>(t),
                                              static_cast<std::uint64_t>(r)}));
      // The sup sits on the constraint boundary (positive homogeneity), so
      // start each restart there instead of near the origin.
      if (params.W1.norm() > 0.0) params.W1 *= spec.R / params.W1.norm();
      if (params.w2.norm() > 0.0) params.w2 *= spec.D_bound / params.w2.norm();
      bool bad = false;
      for (int step = 0; step <= opts.steps; ++step) {
        gcn::ForwardCache cache = gcn::forward_cached(params, filter, X);
        double obj = 0.0;
        for (int j = 0; j < m; ++j) obj += eps(j) * cache.f(spec.labeled_set[j]);
        if (!std::isfinite(obj)) {
          bad = true;
          break;
        }
        best = std::max(best, std::abs(obj));
        if (step == opts.steps) break;
        gcn::Grads g = gcn::backward(params, filter, X, cache, dLdf);
        params.W1 += lr * ascent_sign * g.W1;
        params.w2 += lr * ascent_sign * g.w2;
        params = gcn::project_params(std::move(params), spec);
      }
      if (bad) ++diverged;
    }
    if (diverged == opts.num_restarts) {
      std::ostringstream msg;
      msg << "rc_pga: all " << opts.num_restarts << " restarts diverged on draw " << t;
      throw numerical_error(msg.str());
    }
    per_draw[static_cast<std::size_t>(t)] = best / static_cast<double>(m);
  }

  Summary s = summarize(per_draw, exhaustive);
  RcEstimate est;
  est.value = s.value;
  est.std_error = s.std_error;
  est.method = RcEstimate::Method::pga;
  est.num_mc = draws;
  est.num_restarts = opts.num_restarts;
  est.is_exact_in_sup = false;  // a certified lower estimate of the sup
  est.exhaustive = exhaustive;
  est.seed = seed;
  return est;
}

namespace {

std::vector<Eigen::VectorXd> direction_grid(int d, int resolution, double& chord) {
  std::vector<Eigen::VectorXd> dirs;
  if (d == 1) {
    Eigen::VectorXd u(1);
    u(0) = 1.0;
    dirs.push_back(u);
    u(0) = -1.0;
    dirs.push_back(u);
    chord = 0.0;  // the 0-sphere is covered exactly
    return dirs;
  }
  resolution = std::max(resolution, 16);
  if (d == 2) {
    dirs.reserve(resolution);
    for (int i = 0; i < resolution; ++i) {
      double theta = 2.0 * M_PI * i / resolution;
      Eigen::VectorXd u(2);
      u << std::cos(theta), std::sin(theta);
      dirs.push_back(u);
    }
    chord = 2.0 * std::sin(M_PI / (2.0 * resolution));
    return dirs;
  }
  // d == 3: latitude-longitude grid; covering angle <= pi/(2P) + pi/res.
  int polar = std::max(2, resolution / 2);
  dirs.reserve(static_cast<std::size_t>(polar) * resolution);
  for (int j = 0; j < polar; ++j) {
    double theta = M_PI * (j + 0.5) / polar;
    for (int i = 0; i < resolution; ++i) {
      double phi = 2.0 * M_PI * i / resolution;
      Eigen::VectorXd u(3);
      u << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta);
      dirs.push_back(u);
    }
  }
  chord = M_PI / (2.0 * polar) + M_PI / resolution;
  return dirs;
}

double objective_lipschitz(const gcn::HypothesisSpec& spec, const spectral::GraphFilter& filter,
                           const Eigen::MatrixXd& GX) {
  double g_norm;
  if (filter.kind == spectral::FilterKind::random_walk) {
    if (filter.n() > 2000)
      throw std::invalid_argument("brute force: random_walk operator norm needs n <= 2000");
    g_norm = operator_norm_dense(filter.dense());
  } else {
    g_norm = spectral::lambda_max_abs(filter);  // symmetric: sigma_max = |lambda|_max
  }
  double gx_norm = operator_norm_dense(GX);
  double L = spec.lipschitz_L;
  return std::sqrt(static_cast<double>(spec.m())) * L * L * spec.D_bound * spec.R * g_norm *
         gx_norm;
}

}  // namespace

int suggested_grid_resolution(const gcn::HypothesisSpec& spec,
                              const spectral::GraphFilter& filter, const Eigen::MatrixXd& X,
                              double target_error) {
  if (!(target_error > 0.0))
    throw std::invalid_argument("suggested_grid_resolution: target must be positive");
  const int d = static_cast<int>(X.cols());
  if (d == 1) return 2;
  Eigen::MatrixXd GX = filter.matrix * X;
  double K = objective_lipschitz(spec, filter, GX);
  if (K == 0.0) return 16;
  double chord_target = static_cast<double>(spec.m()) * target_error / K;
  double res = (d == 2) ? M_PI / chord_target : 2.0 * M_PI / chord_target;
  double cap = (d == 2) ? 2000000.0 : 4000.0;
  return static_cast<int>(std::clamp(std::ceil(res), 16.0, cap));
}

RcEstimate rc_brute_force(const gcn::HypothesisSpec& spec, const spectral::GraphFilter& filter,
                          const Eigen::MatrixXd& X, const gcn::Activation& act,
                          int grid_resolution) {
  spec.validate(filter.n());
  if (X.rows() != filter.n())
    throw std::invalid_argument("rc_brute_force: X rows must equal the node count");
  gcn::validate_features(spec, X);
  const int m = spec.m();
  const int d = static_cast<int>(X.cols());
  if (m > 12) throw std::invalid_argument("rc_brute_force: requires m <= 12");
  if (d > 3) throw std::invalid_argument("rc_brute_force: requires d <= 3");

  Eigen::MatrixXd GX = filter.matrix * X;  // dense n x d
  double K = objective_lipschitz(spec, filter, GX);

  double chord = 0.0;
  auto dirs = direction_grid(d, grid_resolution, chord);

  const std::size_t patterns = std::size_t{1} << m;
  std::vector<double> best(patterns, 0.0);
  Eigen::VectorXd f_omega(m);

  for (const auto& u : dirs) {
    // Scale optima sit on the constraint boundary: one W1 column of norm R,
    // |w2 entry| = D_bound; positive homogeneity pulls both scales out.
    Eigen::VectorXd hidden_pre = spec.R * (GX * u);
    Eigen::VectorXd hidden = act.apply(hidden_pre);
    Eigen::VectorXd out_pre = filter.matrix * hidden;
    for (double s : {1.0, -1.0}) {
      for (int j = 0; j < m; ++j)
        f_omega(j) = spec.D_bound * act.apply(s * out_pre(spec.labeled_set[j]));
      // Gray-code sweep over all sign patterns, one +-2 f_j update each.
      double dot = -f_omega.sum();  // pattern 0: all signs -1
      if (std::abs(dot) > best[0]) best[0] = std::abs(dot);
      for (std::size_t i = 1; i < patterns; ++i) {
        int bitpos = std::countr_zero(i);
        std::size_t gray = i ^ (i >> 1);
        bool now_plus = (gray >> bitpos) & 1u;
        dot += (now_plus ? 2.0 : -2.0) * f_omega(bitpos);
        if (std::abs(dot) > best[gray]) best[gray] = std::abs(dot);
      }
    }
  }

  std::vector<double> per_pattern(patterns);
  for (std::size_t i = 0; i < patterns; ++i) per_pattern[i] = best[i] / static_cast<double>(m);

  RcEstimate est;
  est.value = util::mean(per_pattern);
  est.std_error = 0.0;
  est.method = RcEstimate::Method::brute_force;
  est.num_mc = static_cast<std::int64_t>(patterns);
  est.is_exact_in_sup = true;
  est.exhaustive = true;
  est.grid_error = K * chord / static_cast<double>(m);
  return est;
}

nlohmann::json estimate_to_json(const RcEstimate& est, const gcn::HypothesisSpec& spec,
                                const spectral::GraphFilter& filter) {
  nlohmann::json j;
  j["method"] = to_string(est.method);
  j["value"] = est.value;
  j["std_error"] = est.std_error;
  j["num_mc"] = est.num_mc;
  j["num_restarts"] = est.num_restarts;
  j["is_exact_in_sup"] = est.is_exact_in_sup;
  j["exhaustive"] = est.exhaustive;
  j["grid_error"] = est.grid_error;
  j["seed"] = est.seed;
  j["fingerprint"] = {{"graph_hash", util::hex64(graphgen::graph_hash(filter.graph))},
                      {"filter_kind", spectral::to_string(filter.kind)},
                      {"spec",
                       {{"lipschitz_L", spec.lipschitz_L},
                        {"B", spec.B},
                        {"R", spec.R},
                        {"D_bound", spec.D_bound},
                        {"q", spec.q},
                        {"m", spec.m()}}}};
  return j;
}

}  // namespace radbound::radest
