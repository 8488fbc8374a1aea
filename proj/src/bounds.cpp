#include "radbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "radbound/errors.hpp"
#include "radbound/rng.hpp"
#include "radbound/util.hpp"

namespace radbound::bounds {

std::uint64_t NeighborOrdering::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    h = util::fnv1a64_u64(static_cast<std::uint64_t>(labeled[i]), h);
    for (int v : lists[i]) h = util::fnv1a64_u64(static_cast<std::uint64_t>(v) + 1, h);
  }
  return h;
}

NeighborOrdering build_ordering(const graphgen::Graph& g, const std::vector<int>& labeled) {
  NeighborOrdering o;
  o.labeled = labeled;
  o.lists.reserve(labeled.size());
  for (int j : labeled) {
    if (j < 0 || j >= g.n) throw std::invalid_argument("build_ordering: labeled node out of range");
    o.lists.push_back(g.neighbors[j]);  // already sorted ascending, self included
  }
  return o;
}

BoundReport upper_bound_thm1(const gcn::HypothesisSpec& spec, const spectral::GraphFilter& filter,
                             const NeighborOrdering& ordering, const UpperOptions& opts) {
  const auto& g = filter.graph;
  spec.validate(g.n);
  if (ordering.labeled != spec.labeled_set)
    throw std::invalid_argument("upper_bound_thm1: ordering does not match the labeled set");
  if (!filter.shift_property_holds && !opts.allow_shift_violation)
    throw assumption_error(
        "upper_bound_thm1: filter violates the one-hop graph-shift property; "
        "pass allow_shift_violation to override");

  auto stats = graphgen::degree_stats(g);
  BoundReport rep;
  if (stats.is_homogeneous) {
    rep.q_used = *stats.q;
    if (spec.q != rep.q_used)
      throw std::invalid_argument("upper_bound_thm1: spec.q does not match the graph degree");
  } else {
    if (!opts.relax_heterogeneous)
      throw assumption_error("upper_bound_thm1: graph is not homogeneous; " +
                             graphgen::degree_histogram(stats));
    rep.q_used = stats.max_degree;
    rep.relaxed = true;
  }

  const int m = spec.m();
  rep.m = m;
  double entry_sum = 0.0;
  for (int l = 0; l < rep.q_used; ++l) {
    double best = 0.0;
    bool any = false;
    for (std::size_t idx = 0; idx < ordering.labeled.size(); ++idx) {
      const auto& list = ordering.lists[idx];
      if (l >= static_cast<int>(list.size())) continue;  // relaxed rows may run short
      any = true;
      double v = std::abs(filter.matrix.coeff(ordering.labeled[idx], list[l]));
      best = std::max(best, v);
    }
    if (any) entry_sum += best;
  }

  double lambda = spectral::spectral_radius(filter, opts.spectral_tol).lambda_max_abs;

  rep.terms.prefactor = 8.0 * spec.lipschitz_L * spec.lipschitz_L * spec.B * spec.D_bound * spec.R;
  rep.terms.lambda_max_abs = lambda;
  rep.terms.sqrt_q_over_m = std::sqrt(static_cast<double>(rep.q_used) / static_cast<double>(m));
  rep.terms.neighbor_entry_sum = entry_sum;
  rep.upper_thm1 = rep.terms.prefactor * rep.terms.lambda_max_abs * rep.terms.sqrt_q_over_m *
                   rep.terms.neighbor_entry_sum;
  rep.ordering_hash = ordering.hash();
  return rep;
}

LowerBoundResult lower_bound_thm2(const gcn::HypothesisSpec& spec,
                                  const spectral::GraphFilter& filter, const Eigen::MatrixXd& X,
                                  int reference_node) {
  const auto& g = filter.graph;
  spec.validate(g.n);
  if (X.rows() != g.n)
    throw std::invalid_argument("lower_bound_thm2: X rows must equal the node count");
  gcn::validate_features(spec, X);

  auto stats = graphgen::degree_stats(g);
  if (!stats.is_homogeneous)
    throw assumption_error("lower_bound_thm2: graph is not homogeneous; " +
                           graphgen::degree_histogram(stats));

  LowerBoundResult res;
  res.reference_node = reference_node >= 0 ? reference_node : spec.labeled_set.front();
  if (res.reference_node >= g.n)
    throw std::invalid_argument("lower_bound_thm2: reference node out of range");

  const auto& candidates = g.neighbors[res.reference_node];
  for (int k : candidates) {
    const auto& nk = g.neighbors[k];
    const int qk = static_cast<int>(nk.size());
    Eigen::VectorXd col(qk);
    double row_sum = 0.0;
    for (int a = 0; a < qk; ++a) {
      col(a) = filter.matrix.coeff(nk[a], k);
      row_sum += filter.matrix.coeff(k, nk[a]);
    }
    Eigen::MatrixXd Xk(qk, X.cols());
    for (int a = 0; a < qk; ++a) Xk.row(a) = X.row(nk[a]);
    res.per_k_norm.push_back((Xk.transpose() * col).norm());
    res.per_k_row_sum.push_back(row_sum);
  }
  res.max_norm_term = *std::max_element(res.per_k_norm.begin(), res.per_k_norm.end());

  double ref_sum = res.per_k_row_sum.front();
  for (double s : res.per_k_row_sum) {
    if (std::abs(s - ref_sum) > 1e-9 * std::max(1.0, std::abs(ref_sum))) {
      res.applicable = false;
      std::ostringstream msg;
      msg << "row sums over the reference neighborhood are not invariant (" << ref_sum << " vs "
          << s << ")";
      res.reason = msg.str();
      return res;
    }
  }

  double min_product = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < res.per_k_norm.size(); ++i)
    min_product = std::min(min_product, res.per_k_norm[i] * res.per_k_row_sum[i]);
  // B enters through the feature norms; the prefactor carries L^2 D R only.
  double value = spec.lipschitz_L * spec.lipschitz_L * spec.D_bound * spec.R /
                 std::sqrt(static_cast<double>(spec.m())) * min_product;
  res.value = std::max(0.0, value);
  res.applicable = true;
  return res;
}

double thm3_complexity_term(double rc_term, double alpha_l) { return 2.0 * alpha_l * rc_term; }

double thm3_deviation_term(double delta, int n_count) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("generalization bound: delta must lie in (0, 1)");
  if (n_count < 1) throw std::invalid_argument("generalization bound: n_count must be positive");
  return std::sqrt(2.0 * std::log(2.0 / delta) / static_cast<double>(n_count));
}

double generalization_bound_thm3(double empirical_risk, double rc_term, double alpha_l,
                                 double delta, int n_count) {
  return empirical_risk + thm3_complexity_term(rc_term, alpha_l) +
         thm3_deviation_term(delta, n_count);
}

const char* to_string(RateFamily f) {
  switch (f) {
    case RateFamily::er_unnormalized: return "er_unnormalized";
    case RateFamily::er_normalized: return "er_normalized";
    case RateFamily::regular_unnormalized: return "regular_unnormalized";
    case RateFamily::regular_normalized: return "regular_normalized";
  }
  return "?";
}

RateFamily rate_family_from_string(const std::string& s) {
  if (s == "er_unnormalized") return RateFamily::er_unnormalized;
  if (s == "er_normalized") return RateFamily::er_normalized;
  if (s == "regular_unnormalized") return RateFamily::regular_unnormalized;
  if (s == "regular_normalized") return RateFamily::regular_normalized;
  throw std::invalid_argument("unknown rate family: " + s);
}

int MRule::labeled_count(int n) const {
  int m = 0;
  switch (kind) {
    case Kind::fixed: m = static_cast<int>(value); break;
    case Kind::fraction: m = static_cast<int>(value * n); break;
    case Kind::sqrt_n: m = static_cast<int>(std::sqrt(static_cast<double>(n))); break;
  }
  return std::clamp(m, 1, n);
}

std::vector<int> pick_labeled(int n, int m, bool prefix, std::uint64_t seed) {
  std::vector<int> omega;
  if (prefix) {
    omega.resize(m);
    for (int i = 0; i < m; ++i) omega[i] = i;
    return omega;
  }
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  auto eng = rng::engine(seed, {0x03e6au});
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(pool[i], pool[pick(eng)]);
  }
  omega.assign(pool.begin(), pool.begin() + m);
  std::sort(omega.begin(), omega.end());
  return omega;
}

RateTable rate_table(RateFamily family, const std::vector<int>& sizes,
                     const std::vector<std::uint64_t>& seeds, const RateOptions& opts) {
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1])
      throw std::invalid_argument("rate_table: sizes must be strictly increasing");
  if (sizes.empty() || seeds.empty())
    throw std::invalid_argument("rate_table: sizes and seeds must be non-empty");

  const bool er =
      family == RateFamily::er_unnormalized || family == RateFamily::er_normalized;
  const auto kind = (family == RateFamily::er_unnormalized ||
                     family == RateFamily::regular_unnormalized)
                        ? spectral::FilterKind::unnormalized
                        : spectral::FilterKind::random_walk;

  RateTable table;
  table.family = family;
  for (int n : sizes) {
    double sum_lambda = 0.0, sum_q = 0.0, sum_upper = 0.0;
    for (std::uint64_t seed : seeds) {
      graphgen::Graph g = er ? graphgen::gen_erdos_renyi(
                                   n, std::min(1.0, opts.c * std::log(n) / n), seed)
                             : graphgen::gen_regular(n, opts.ring_degree, seed);
      auto filter = spectral::build_filter(g, kind);
      auto stats = graphgen::degree_stats(g);
      int m = opts.m_rule.labeled_count(n);
      auto omega = pick_labeled(n, m, opts.prefix_omega,
                                rng::derive(seed, {static_cast<std::uint64_t>(n)}));
      gcn::HypothesisSpec spec;
      spec.lipschitz_L = opts.L;
      spec.B = opts.B;
      spec.R = opts.R;
      spec.D_bound = opts.D_bound;
      spec.q = stats.is_homogeneous ? *stats.q : stats.max_degree;
      spec.labeled_set = omega;
      auto ordering = build_ordering(g, omega);
      UpperOptions uo;
      uo.relax_heterogeneous = true;
      uo.spectral_tol = opts.spectral_tol;
      BoundReport rep = upper_bound_thm1(spec, filter, ordering, uo);
      RateRow row;
      row.n = n;
      row.seed = seed;
      row.lambda_max = rep.terms.lambda_max_abs;
      row.q = rep.q_used;
      row.relaxed = rep.relaxed;
      row.upper_thm1 = rep.upper_thm1;
      table.rows.push_back(row);
      sum_lambda += row.lambda_max;
      sum_q += row.q;
      sum_upper += row.upper_thm1;
    }
    double cnt = static_cast<double>(seeds.size());
    table.per_n.push_back({n, sum_lambda / cnt, sum_q / cnt, sum_upper / cnt});
  }
  return table;
}

void write_rate_csv(const RateTable& table, std::ostream& out) {
  out << "n,seed,lambda_max,q,relaxed,upper_thm1\n";
  for (const auto& r : table.rows) {
    out << r.n << ',' << r.seed << ',' << util::format_double(r.lambda_max) << ',' << r.q << ','
        << (r.relaxed ? 1 : 0) << ',' << util::format_double(r.upper_thm1) << '\n';
  }
}

double fit_loglog_slope(const RateTable& table) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (const auto& r : table.rows) {
    if (r.n < 3 || r.upper_thm1 <= 0.0) continue;
    double x = std::log(std::log(static_cast<double>(r.n)));
    double y = std::log(r.upper_thm1);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt < 2) throw std::invalid_argument("fit_loglog_slope: need at least two usable rows");
  double denom = cnt * sxx - sx * sx;
  if (std::abs(denom) < 1e-300)
    throw std::invalid_argument("fit_loglog_slope: degenerate abscissa (single size?)");
  return (cnt * sxy - sx * sy) / denom;
}

nlohmann::json report_to_json(const BoundReport& report) {
  nlohmann::json j;
  j["upper_thm1"] = report.upper_thm1;
  j["terms"] = {{"prefactor", report.terms.prefactor},
                {"lambda_max_abs", report.terms.lambda_max_abs},
                {"sqrt_q_over_m", report.terms.sqrt_q_over_m},
                {"neighbor_entry_sum", report.terms.neighbor_entry_sum}};
  if (report.lower_thm2)
    j["lower_thm2"] = *report.lower_thm2;
  else
    j["lower_thm2"] = nullptr;
  j["lower_applicable"] = report.lower_applicable;
  j["lower_reason"] = report.lower_reason;
  j["relaxed"] = report.relaxed;
  j["q"] = report.q_used;
  j["m"] = report.m;
  j["ordering_hash"] = util::hex64(report.ordering_hash);
  return j;
}

}  // namespace radbound::bounds
