#include "radbound/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "radbound/errors.hpp"
#include "radbound/rng.hpp"
#include "radbound/util.hpp"

namespace radbound::harness {

using nlohmann::json;

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::bound: return "bound";
    case Scenario::estimate: return "estimate";
    case Scenario::sandwich: return "sandwich";
    case Scenario::scaling: return "scaling";
    case Scenario::gap: return "gap";
  }
  return "?";
}

namespace {

std::optional<Scenario> scenario_from_string(const std::string& s) {
  if (s == "bound") return Scenario::bound;
  if (s == "estimate") return Scenario::estimate;
  if (s == "sandwich") return Scenario::sandwich;
  if (s == "scaling") return Scenario::scaling;
  if (s == "gap") return Scenario::gap;
  return std::nullopt;
}

struct Validator {
  std::vector<ConfigError>* errors;

  void fail(const std::string& path, const std::string& msg) { errors->push_back({path, msg}); }

  void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown key");
  }

  template <typename T>
  bool read(const json& obj, const char* key, const std::string& path, T& out) {
    if (!obj.contains(key)) return false;
    try {
      out = obj.at(key).get<T>();
      return true;
    } catch (const json::exception&) {
      fail(path + "." + key, "wrong type");
      return false;
    }
  }
};

}  // namespace

ValidationResult validate_config(const json& raw, std::optional<Scenario> scenario_override,
                                 std::optional<std::uint64_t> seed_override) {
  ValidationResult result;
  Validator v{&result.errors};

  if (!raw.is_object()) {
    v.fail("", "config must be a JSON object (required: scenario, graph or scaling section)");
    return result;
  }

  v.check_keys(raw, "$",
               {"scenario", "seed", "output_dir", "delta", "relax_heterogeneous", "graph",
                "filter", "hypothesis", "omega", "features", "estimator", "training", "scaling"});

  ScenarioConfig cfg;

  // scenario
  std::string scen;
  bool has_scen = v.read(raw, "scenario", "$", scen);
  if (scenario_override) {
    cfg.scenario = *scenario_override;
    if (has_scen) {
      auto parsed = scenario_from_string(scen);
      if (!parsed)
        v.fail("$.scenario", "unknown scenario '" + scen + "'");
      else if (*parsed != *scenario_override)
        v.fail("$.scenario", "config scenario '" + scen + "' does not match the subcommand");
    }
  } else if (has_scen) {
    auto parsed = scenario_from_string(scen);
    if (!parsed)
      v.fail("$.scenario", "unknown scenario '" + scen + "' (bound|estimate|sandwich|scaling|gap)");
    else
      cfg.scenario = *parsed;
  } else {
    v.fail("$.scenario", "required (bound|estimate|sandwich|scaling|gap)");
  }

  v.read(raw, "seed", "$", cfg.seed);
  if (seed_override) cfg.seed = *seed_override;
  v.read(raw, "output_dir", "$", cfg.output_dir);
  if (v.read(raw, "delta", "$", cfg.delta) || true) {
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) v.fail("$.delta", "delta must be in (0,1)");
  }
  v.read(raw, "relax_heterogeneous", "$", cfg.relax_heterogeneous);

  const bool needs_graph = cfg.scenario != Scenario::scaling;

  // graph
  if (raw.contains("graph")) {
    const json& jg = raw.at("graph");
    if (!jg.is_object()) {
      v.fail("$.graph", "must be an object");
    } else {
      v.check_keys(jg, "$.graph", {"family", "n", "ring_degree", "p", "seed", "path"});
      v.read(jg, "family", "$.graph", cfg.graph.family);
      if (cfg.graph.family != "regular" && cfg.graph.family != "erdos_renyi" &&
          cfg.graph.family != "file")
        v.fail("$.graph.family", "must be regular | erdos_renyi | file");
      v.read(jg, "n", "$.graph", cfg.graph.n);
      v.read(jg, "ring_degree", "$.graph", cfg.graph.ring_degree);
      v.read(jg, "p", "$.graph", cfg.graph.p);
      if (!v.read(jg, "seed", "$.graph", cfg.graph.seed))
        cfg.graph.seed = rng::derive(cfg.seed, {1});
      v.read(jg, "path", "$.graph", cfg.graph.path);
      if (cfg.graph.family == "regular") {
        if (cfg.graph.n <= 0) v.fail("$.graph.n", "required positive integer");
        if (cfg.graph.ring_degree <= 0 || cfg.graph.ring_degree % 2 != 0)
          v.fail("$.graph.ring_degree", "must be a positive even integer");
        if (cfg.graph.n > 0 && cfg.graph.ring_degree >= cfg.graph.n)
          v.fail("$.graph.ring_degree", "must be smaller than n");
      } else if (cfg.graph.family == "erdos_renyi") {
        if (cfg.graph.n <= 0) v.fail("$.graph.n", "required positive integer");
        if (!jg.contains("p"))
          v.fail("$.graph.p", "required for erdos_renyi");
        else if (!(cfg.graph.p >= 0.0 && cfg.graph.p <= 1.0))
          v.fail("$.graph.p", "must lie in [0,1]");
      } else if (cfg.graph.family == "file" && cfg.graph.path.empty()) {
        v.fail("$.graph.path", "required for family=file");
      }
    }
  } else if (needs_graph) {
    v.fail("$.graph", "required for this scenario");
  } else {
    cfg.graph.seed = rng::derive(cfg.seed, {1});
  }

  // filter
  if (raw.contains("filter")) {
    const json& jf = raw.at("filter");
    if (!jf.is_object()) {
      v.fail("$.filter", "must be an object");
    } else {
      v.check_keys(jf, "$.filter", {"kind", "coefficients", "allow_shift_violation"});
      std::string kind = "unnormalized";
      v.read(jf, "kind", "$.filter", kind);
      try {
        cfg.filter.kind = spectral::filter_kind_from_string(kind);
      } catch (const std::invalid_argument&) {
        v.fail("$.filter.kind", "must be unnormalized | random_walk | polynomial");
      }
      v.read(jf, "coefficients", "$.filter", cfg.filter.coefficients);
      if (cfg.filter.kind == spectral::FilterKind::polynomial && cfg.filter.coefficients.empty())
        v.fail("$.filter.coefficients", "required non-empty list for polynomial filters");
      v.read(jf, "allow_shift_violation", "$.filter", cfg.filter.allow_shift_violation);
    }
  }

  // hypothesis
  if (raw.contains("hypothesis")) {
    const json& jh = raw.at("hypothesis");
    if (!jh.is_object()) {
      v.fail("$.hypothesis", "must be an object");
    } else {
      v.check_keys(jh, "$.hypothesis", {"lipschitz_L", "B", "R", "D_bound"});
      v.read(jh, "lipschitz_L", "$.hypothesis", cfg.hypothesis.lipschitz_L);
      v.read(jh, "B", "$.hypothesis", cfg.hypothesis.B);
      v.read(jh, "R", "$.hypothesis", cfg.hypothesis.R);
      v.read(jh, "D_bound", "$.hypothesis", cfg.hypothesis.D_bound);
      if (!(cfg.hypothesis.lipschitz_L > 0)) v.fail("$.hypothesis.lipschitz_L", "must be positive");
      if (!(cfg.hypothesis.B > 0)) v.fail("$.hypothesis.B", "must be positive");
      if (!(cfg.hypothesis.R > 0)) v.fail("$.hypothesis.R", "must be positive");
      if (!(cfg.hypothesis.D_bound > 0)) v.fail("$.hypothesis.D_bound", "must be positive");
    }
  }

  // omega
  if (raw.contains("omega")) {
    const json& jo = raw.at("omega");
    if (!jo.is_object()) {
      v.fail("$.omega", "must be an object");
    } else {
      v.check_keys(jo, "$.omega", {"m", "placement", "seed"});
      v.read(jo, "m", "$.omega", cfg.omega.m);
      v.read(jo, "placement", "$.omega", cfg.omega.placement);
      if (cfg.omega.placement != "random" && cfg.omega.placement != "prefix")
        v.fail("$.omega.placement", "must be random | prefix");
      if (!v.read(jo, "seed", "$.omega", cfg.omega.seed))
        cfg.omega.seed = rng::derive(cfg.seed, {2});
    }
  } else {
    cfg.omega.seed = rng::derive(cfg.seed, {2});
  }
  if (needs_graph) {
    if (cfg.omega.m <= 0) v.fail("$.omega.m", "required positive labeled-set size");
    if (cfg.graph.n > 0 && cfg.omega.m > cfg.graph.n && cfg.graph.family != "file")
      v.fail("$.omega.m", "m exceeds the node count");
    if (cfg.scenario == Scenario::gap && cfg.graph.n > 0 && cfg.omega.m >= cfg.graph.n)
      v.fail("$.omega.m", "gap scenario needs m < n (nonempty unlabeled set)");
  }

  // features
  if (raw.contains("features")) {
    const json& jx = raw.at("features");
    if (!jx.is_object()) {
      v.fail("$.features", "must be an object");
    } else {
      v.check_keys(jx, "$.features", {"kind", "d", "seed"});
      v.read(jx, "kind", "$.features", cfg.features.kind);
      if (cfg.features.kind != "canonical" && cfg.features.kind != "random")
        v.fail("$.features.kind", "must be canonical | random");
      v.read(jx, "d", "$.features", cfg.features.d);
      if (cfg.features.d <= 0) v.fail("$.features.d", "must be positive");
      if (!v.read(jx, "seed", "$.features", cfg.features.seed))
        cfg.features.seed = rng::derive(cfg.seed, {3});
    }
  } else {
    cfg.features.seed = rng::derive(cfg.seed, {3});
  }

  // estimator
  if (raw.contains("estimator")) {
    const json& je = raw.at("estimator");
    if (!je.is_object()) {
      v.fail("$.estimator", "must be an object");
    } else {
      v.check_keys(je, "$.estimator",
                   {"method", "activation", "num_mc", "num_restarts", "steps", "lr", "width_k",
                    "grid_resolution", "grid_target"});
      v.read(je, "method", "$.estimator", cfg.estimator.method);
      if (cfg.estimator.method != "closed_form" && cfg.estimator.method != "pga" &&
          cfg.estimator.method != "brute_force")
        v.fail("$.estimator.method", "must be closed_form | pga | brute_force");
      if (je.contains("activation")) {
        const json& ja = je.at("activation");
        if (!ja.is_object()) {
          v.fail("$.estimator.activation", "must be an object");
        } else {
          v.check_keys(ja, "$.estimator.activation", {"kind", "slope"});
          std::string kind = "linear";
          v.read(ja, "kind", "$.estimator.activation", kind);
          double slope = 0.01;
          v.read(ja, "slope", "$.estimator.activation", slope);
          try {
            if (kind == "relu")
              cfg.estimator.activation = gcn::Activation::relu();
            else if (kind == "linear")
              cfg.estimator.activation = gcn::Activation::linear(cfg.hypothesis.lipschitz_L);
            else if (kind == "leaky_relu")
              cfg.estimator.activation = gcn::Activation::leaky_relu(slope);
            else
              v.fail("$.estimator.activation.kind", "must be relu | linear | leaky_relu");
          } catch (const std::invalid_argument& e) {
            v.fail("$.estimator.activation", e.what());
          }
        }
      } else {
        cfg.estimator.activation = gcn::Activation::linear(cfg.hypothesis.lipschitz_L);
      }
      v.read(je, "num_mc", "$.estimator", cfg.estimator.num_mc);
      if (cfg.estimator.num_mc < 0) v.fail("$.estimator.num_mc", "must be >= 0 (0 = exhaustive)");
      v.read(je, "num_restarts", "$.estimator", cfg.estimator.num_restarts);
      if (cfg.estimator.num_restarts < 1) v.fail("$.estimator.num_restarts", "must be positive");
      v.read(je, "steps", "$.estimator", cfg.estimator.steps);
      if (cfg.estimator.steps < 1) v.fail("$.estimator.steps", "must be positive");
      v.read(je, "lr", "$.estimator", cfg.estimator.lr);
      v.read(je, "width_k", "$.estimator", cfg.estimator.width_k);
      if (cfg.estimator.width_k < 1) v.fail("$.estimator.width_k", "must be positive");
      v.read(je, "grid_resolution", "$.estimator", cfg.estimator.grid_resolution);
      v.read(je, "grid_target", "$.estimator", cfg.estimator.grid_target);
      if (!(cfg.estimator.grid_target > 0)) v.fail("$.estimator.grid_target", "must be positive");
      if (cfg.estimator.method == "closed_form" &&
          cfg.estimator.activation.kind != gcn::Activation::Kind::linear)
        v.fail("$.estimator.activation.kind", "closed_form requires the linear activation");
    }
  } else {
    cfg.estimator.activation = gcn::Activation::linear(cfg.hypothesis.lipschitz_L);
  }

  // training
  if (raw.contains("training")) {
    const json& jt = raw.at("training");
    if (!jt.is_object()) {
      v.fail("$.training", "must be an object");
    } else {
      v.check_keys(jt, "$.training", {"width_k", "lr", "epochs", "loss", "num_seeds", "minibatch"});
      v.read(jt, "width_k", "$.training", cfg.training.width_k);
      if (cfg.training.width_k < 1) v.fail("$.training.width_k", "must be positive");
      v.read(jt, "lr", "$.training", cfg.training.lr);
      if (!(cfg.training.lr >= 0)) v.fail("$.training.lr", "must be nonnegative");
      v.read(jt, "epochs", "$.training", cfg.training.epochs);
      if (cfg.training.epochs < 0) v.fail("$.training.epochs", "must be nonnegative");
      v.read(jt, "loss", "$.training", cfg.training.loss);
      if (cfg.training.loss != "hinge" && cfg.training.loss != "squared")
        v.fail("$.training.loss", "must be hinge | squared");
      v.read(jt, "num_seeds", "$.training", cfg.training.num_seeds);
      if (cfg.training.num_seeds < 1) v.fail("$.training.num_seeds", "must be positive");
      v.read(jt, "minibatch", "$.training", cfg.training.minibatch);
      if (cfg.training.minibatch < 0) v.fail("$.training.minibatch", "must be nonnegative");
    }
  }

  // scaling
  if (raw.contains("scaling")) {
    const json& js = raw.at("scaling");
    if (!js.is_object()) {
      v.fail("$.scaling", "must be an object");
    } else {
      v.check_keys(js, "$.scaling",
                   {"family", "sizes", "num_seeds", "m_rule", "c", "ring_degree"});
      std::string family = "regular_unnormalized";
      v.read(js, "family", "$.scaling", family);
      try {
        cfg.scaling.family = bounds::rate_family_from_string(family);
      } catch (const std::invalid_argument&) {
        v.fail("$.scaling.family",
               "must be er_unnormalized | er_normalized | regular_unnormalized | "
               "regular_normalized");
      }
      v.read(js, "sizes", "$.scaling", cfg.scaling.sizes);
      for (std::size_t i = 1; i < cfg.scaling.sizes.size(); ++i)
        if (cfg.scaling.sizes[i] <= cfg.scaling.sizes[i - 1]) {
          v.fail("$.scaling.sizes", "must be strictly increasing");
          break;
        }
      v.read(js, "num_seeds", "$.scaling", cfg.scaling.num_seeds);
      if (cfg.scaling.num_seeds < 1) v.fail("$.scaling.num_seeds", "must be positive");
      if (js.contains("m_rule")) {
        const json& jm = js.at("m_rule");
        if (!jm.is_object()) {
          v.fail("$.scaling.m_rule", "must be an object");
        } else {
          v.check_keys(jm, "$.scaling.m_rule", {"type", "value"});
          std::string type = "fixed";
          v.read(jm, "type", "$.scaling.m_rule", type);
          if (type == "fixed")
            cfg.scaling.m_rule.kind = bounds::MRule::Kind::fixed;
          else if (type == "fraction")
            cfg.scaling.m_rule.kind = bounds::MRule::Kind::fraction;
          else if (type == "sqrt")
            cfg.scaling.m_rule.kind = bounds::MRule::Kind::sqrt_n;
          else
            v.fail("$.scaling.m_rule.type", "must be fixed | fraction | sqrt");
          v.read(jm, "value", "$.scaling.m_rule", cfg.scaling.m_rule.value);
          if (!(cfg.scaling.m_rule.value > 0)) v.fail("$.scaling.m_rule.value", "must be positive");
        }
      }
      v.read(js, "c", "$.scaling", cfg.scaling.c);
      if (!(cfg.scaling.c > 0)) v.fail("$.scaling.c", "must be positive");
      v.read(js, "ring_degree", "$.scaling", cfg.scaling.ring_degree);
      if (cfg.scaling.ring_degree <= 0 || cfg.scaling.ring_degree % 2 != 0)
        v.fail("$.scaling.ring_degree", "must be a positive even integer");
    }
  } else if (cfg.scenario == Scenario::scaling) {
    v.fail("$.scaling", "required for the scaling scenario");
  }
  if (cfg.scenario == Scenario::scaling && cfg.scaling.sizes.empty())
    v.fail("$.scaling.sizes", "required non-empty increasing list");

  if (!result.errors.empty()) return result;

  // normalized config with defaults filled
  json norm;
  norm["scenario"] = to_string(cfg.scenario);
  norm["seed"] = cfg.seed;
  norm["output_dir"] = cfg.output_dir;
  norm["delta"] = cfg.delta;
  norm["relax_heterogeneous"] = cfg.relax_heterogeneous;
  norm["graph"] = {{"family", cfg.graph.family}, {"n", cfg.graph.n},
                   {"ring_degree", cfg.graph.ring_degree}, {"p", cfg.graph.p},
                   {"seed", cfg.graph.seed}, {"path", cfg.graph.path}};
  json jf;
  jf["kind"] = spectral::to_string(cfg.filter.kind);
  jf["coefficients"] = cfg.filter.coefficients;
  jf["allow_shift_violation"] = cfg.filter.allow_shift_violation;
  norm["filter"] = jf;
  norm["hypothesis"] = {{"lipschitz_L", cfg.hypothesis.lipschitz_L}, {"B", cfg.hypothesis.B},
                        {"R", cfg.hypothesis.R}, {"D_bound", cfg.hypothesis.D_bound}};
  norm["omega"] = {{"m", cfg.omega.m}, {"placement", cfg.omega.placement},
                   {"seed", cfg.omega.seed}};
  norm["features"] = {{"kind", cfg.features.kind}, {"d", cfg.features.d},
                      {"seed", cfg.features.seed}};
  json ja;
  ja["kind"] = gcn::to_string(cfg.estimator.activation.kind);
  ja["slope"] = cfg.estimator.activation.slope;
  norm["estimator"] = {{"method", cfg.estimator.method},
                       {"activation", ja},
                       {"num_mc", cfg.estimator.num_mc},
                       {"num_restarts", cfg.estimator.num_restarts},
                       {"steps", cfg.estimator.steps},
                       {"lr", cfg.estimator.lr},
                       {"width_k", cfg.estimator.width_k},
                       {"grid_resolution", cfg.estimator.grid_resolution},
                       {"grid_target", cfg.estimator.grid_target}};
  norm["training"] = {{"width_k", cfg.training.width_k}, {"lr", cfg.training.lr},
                      {"epochs", cfg.training.epochs}, {"loss", cfg.training.loss},
                      {"num_seeds", cfg.training.num_seeds},
                      {"minibatch", cfg.training.minibatch}};
  norm["scaling"] = {{"family", bounds::to_string(cfg.scaling.family)},
                     {"sizes", cfg.scaling.sizes},
                     {"num_seeds", cfg.scaling.num_seeds},
                     {"m_rule",
                      {{"type", cfg.scaling.m_rule.kind == bounds::MRule::Kind::fixed
                                    ? "fixed"
                                    : cfg.scaling.m_rule.kind == bounds::MRule::Kind::fraction
                                          ? "fraction"
                                          : "sqrt"},
                       {"value", cfg.scaling.m_rule.value}}},
                     {"c", cfg.scaling.c},
                     {"ring_degree", cfg.scaling.ring_degree}};
  cfg.normalized = norm;
  // Hash the experiment, not its disk location.
  json hash_src = norm;
  hash_src.erase("output_dir");
  cfg.config_hash = util::fnv1a64(hash_src.dump());
  result.config = std::move(cfg);
  return result;
}

namespace {

struct Instance {
  graphgen::Graph graph;
  spectral::GraphFilter filter;
  graphgen::DegreeStats stats;
  gcn::HypothesisSpec spec;
  Eigen::MatrixXd X;
  bounds::NeighborOrdering ordering;
};

Instance build_instance(const ScenarioConfig& cfg) {
  Instance inst;
  if (cfg.graph.family == "regular") {
    inst.graph = graphgen::gen_regular(cfg.graph.n, cfg.graph.ring_degree, cfg.graph.seed);
  } else if (cfg.graph.family == "erdos_renyi") {
    inst.graph = graphgen::gen_erdos_renyi(cfg.graph.n, cfg.graph.p, cfg.graph.seed);
  } else {
    std::ifstream in(cfg.graph.path);
    if (!in) throw std::invalid_argument("graph file not readable: " + cfg.graph.path);
    if (cfg.graph.path.size() > 5 &&
        cfg.graph.path.compare(cfg.graph.path.size() - 5, 5, ".json") == 0) {
      json j = json::parse(in);
      inst.graph = graphgen::graph_from_json(j);
    } else {
      inst.graph = graphgen::read_edge_list(in);
    }
  }
  inst.filter = spectral::build_filter(inst.graph, cfg.filter.kind, cfg.filter.coefficients);
  inst.stats = graphgen::degree_stats(inst.graph);

  if (cfg.omega.m > inst.graph.n)
    throw std::invalid_argument("omega.m exceeds the node count of the loaded graph");
  auto omega = bounds::pick_labeled(inst.graph.n, cfg.omega.m, cfg.omega.placement == "prefix",
                                    cfg.omega.seed);

  inst.spec.lipschitz_L = cfg.hypothesis.lipschitz_L;
  inst.spec.B = cfg.hypothesis.B;
  inst.spec.R = cfg.hypothesis.R;
  inst.spec.D_bound = cfg.hypothesis.D_bound;
  inst.spec.q = inst.stats.is_homogeneous ? *inst.stats.q : inst.stats.max_degree;
  inst.spec.labeled_set = omega;
  inst.spec.validate(inst.graph.n);

  inst.X = cfg.features.kind == "canonical"
               ? gcn::canonical_features(inst.graph.n, cfg.features.d, cfg.hypothesis.B)
               : gcn::random_features(inst.graph.n, cfg.features.d, cfg.hypothesis.B,
                                      cfg.features.seed);
  inst.ordering = bounds::build_ordering(inst.graph, omega);
  return inst;
}

json report_header(const ScenarioConfig& cfg) {
  json j;
  j["schema_version"] = util::kSchemaVersion;
  j["version"] = util::kVersion;
  j["config_hash"] = util::hex64(cfg.config_hash);
  return j;
}

std::string scaling_svg(const bounds::RateTable& table) {
  // Log-log plot of the seed-averaged upper bound against n. No timestamps:
  // identical tables give identical bytes.
  const double width = 640, height = 440, ml = 70, mr = 20, mt = 30, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& a : table.per_n) {
    double x = std::log10(static_cast<double>(a.n));
    double y = std::log10(std::max(a.mean_upper, 1e-300));
    xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
    << height - mb << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << (width / 2) << "\" y=\"" << height - 12
    << "\" text-anchor=\"middle\" font-size=\"13\">n (log scale)</text>\n";
  s << "<text x=\"16\" y=\"" << (height / 2)
    << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " << (height / 2)
    << ")\">upper_thm1 (log scale)</text>\n";
  s << "<text x=\"" << (width / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
    << bounds::to_string(table.family) << "</text>\n";
  s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (const auto& a : table.per_n)
    s << px(std::log10(static_cast<double>(a.n))) << ','
      << py(std::log10(std::max(a.mean_upper, 1e-300))) << ' ';
  s << "\"/>\n";
  for (const auto& a : table.per_n) {
    double cx = px(std::log10(static_cast<double>(a.n)));
    double cy = py(std::log10(std::max(a.mean_upper, 1e-300)));
    s << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    s << "<text x=\"" << cx << "\" y=\"" << height - mb + 16
      << "\" text-anchor=\"middle\" font-size=\"11\">" << a.n << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

double asymptotic_exponent(bounds::RateFamily f) {
  switch (f) {
    case bounds::RateFamily::er_unnormalized: return 2.5;
    case bounds::RateFamily::er_normalized: return 1.5;
    default: return 0.0;
  }
}

}  // namespace

bounds::BoundReport run_bound(const ScenarioConfig& cfg) {
  Instance inst = build_instance(cfg);
  bounds::UpperOptions uo;
  uo.allow_shift_violation = cfg.filter.allow_shift_violation;
  uo.relax_heterogeneous = cfg.relax_heterogeneous;
  bounds::BoundReport rep = bounds::upper_bound_thm1(inst.spec, inst.filter, inst.ordering, uo);
  if (inst.stats.is_homogeneous) {
    auto lower = bounds::lower_bound_thm2(inst.spec, inst.filter, inst.X);
    rep.lower_thm2 = lower.value;
    rep.lower_applicable = lower.applicable;
    rep.lower_reason = lower.reason;
  } else {
    rep.lower_applicable = false;
    rep.lower_reason = "graph is not homogeneous; " + graphgen::degree_histogram(inst.stats);
  }
  return rep;
}

namespace {

radest::RcEstimate estimate_on(const Instance& inst, const ScenarioConfig& cfg) {
  const auto& e = cfg.estimator;
  std::uint64_t est_seed = rng::derive(cfg.seed, {4});
  if (e.method == "closed_form")
    return radest::rc_linear_closed_form(inst.spec, inst.filter, inst.X, e.num_mc, est_seed);
  if (e.method == "pga") {
    radest::PgaOptions po;
    po.num_restarts = e.num_restarts;
    po.steps = e.steps;
    po.lr = e.lr;
    po.width_k = e.width_k;
    return radest::rc_pga(inst.spec, inst.filter, inst.X, e.activation, e.num_mc, po, est_seed);
  }
  int res = e.grid_resolution > 0
                ? e.grid_resolution
                : radest::suggested_grid_resolution(inst.spec, inst.filter, inst.X, e.grid_target);
  return radest::rc_brute_force(inst.spec, inst.filter, inst.X, e.activation, res);
}

}  // namespace

radest::RcEstimate run_estimate(const ScenarioConfig& cfg) {
  Instance inst = build_instance(cfg);
  return estimate_on(inst, cfg);
}

json run_sandwich(const ScenarioConfig& cfg) {
  Instance inst = build_instance(cfg);
  auto lower = bounds::lower_bound_thm2(inst.spec, inst.filter, inst.X);
  auto rc = estimate_on(inst, cfg);
  bounds::UpperOptions uo;
  uo.allow_shift_violation = cfg.filter.allow_shift_violation;
  uo.relax_heterogeneous = cfg.relax_heterogeneous;
  auto upper = bounds::upper_bound_thm1(inst.spec, inst.filter, inst.ordering, uo);

  const double tol = 1e-9;
  bool lower_ok = !lower.applicable || !lower.value ||
                  *lower.value <= rc.value + 3.0 * rc.std_error + tol;
  bool upper_ok = rc.value - 3.0 * rc.std_error <= upper.upper_thm1 + tol;

  json j = report_header(cfg);
  if (lower.applicable && lower.value)
    j["lower_thm2"] = *lower.value;
  else
    j["lower_thm2"] = nullptr;
  j["lower_applicable"] = lower.applicable;
  j["lower_reason"] = lower.reason;
  j["rc_estimate"] = radest::estimate_to_json(rc, inst.spec, inst.filter);
  j["upper_thm1"] = upper.upper_thm1;
  j["upper_terms"] = bounds::report_to_json(upper)["terms"];
  j["sandwich_holds"] = lower_ok && upper_ok;
  j["diagnostics"] = {
      {"lower_max_norm_term", lower.max_norm_term},
      {"reference_node", lower.reference_node},
      {"upper_entry_sum", upper.terms.neighbor_entry_sum},
      {"lower_over_upper",
       lower.applicable && lower.value && upper.upper_thm1 > 0 ? *lower.value / upper.upper_thm1
                                                               : 0.0}};
  return j;
}

bounds::RateTable run_scaling(const ScenarioConfig& cfg) {
  bounds::RateOptions ro;
  ro.c = cfg.scaling.c;
  ro.ring_degree = cfg.scaling.ring_degree;
  ro.m_rule = cfg.scaling.m_rule;
  ro.prefix_omega = cfg.omega.placement == "prefix";
  ro.L = cfg.hypothesis.lipschitz_L;
  ro.B = cfg.hypothesis.B;
  ro.R = cfg.hypothesis.R;
  ro.D_bound = cfg.hypothesis.D_bound;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.scaling.num_seeds; ++i) seeds.push_back(rng::derive(cfg.seed, {5, static_cast<std::uint64_t>(i)}));
  return bounds::rate_table(cfg.scaling.family, cfg.scaling.sizes, seeds, ro);
}

GapReport run_gap(const ScenarioConfig& cfg) {
  Instance inst = build_instance(cfg);
  if (inst.spec.m() >= inst.graph.n)
    throw std::invalid_argument("gap: requires m < n");
  if (!inst.stats.is_homogeneous && !cfg.relax_heterogeneous)
    throw assumption_error("gap: graph is not homogeneous; " +
                           graphgen::degree_histogram(inst.stats));

  bounds::UpperOptions uo;
  uo.allow_shift_violation = cfg.filter.allow_shift_violation;
  uo.relax_heterogeneous = cfg.relax_heterogeneous;
  auto upper = bounds::upper_bound_thm1(inst.spec, inst.filter, inst.ordering, uo);

  gcn::LossSpec loss;
  if (cfg.training.loss == "hinge") {
    loss = gcn::LossSpec::hinge();
  } else {
    // Operative output bound for the squared-loss Lipschitz constant: the
    // forward chain through two filter applications and the norm balls.
    Eigen::MatrixXd dense = inst.filter.dense();
    double row_sum = 0.0;
    for (int i = 0; i < dense.rows(); ++i)
      row_sum = std::max(row_sum, dense.row(i).cwiseAbs().sum());
    double L = inst.spec.lipschitz_L;
    double f_max = L * L * inst.spec.D_bound * inst.spec.R * inst.spec.B * row_sum * row_sum;
    loss = gcn::LossSpec::squared(f_max, f_max);
  }

  std::vector<int> complement;
  for (int vtx = 0; vtx < inst.graph.n; ++vtx)
    if (!std::binary_search(inst.spec.labeled_set.begin(), inst.spec.labeled_set.end(), vtx))
      complement.push_back(vtx);

  GapReport report;
  report.complexity_term = bounds::thm3_complexity_term(upper.upper_thm1, loss.alpha_l);
  report.deviation_term = bounds::thm3_deviation_term(cfg.delta, inst.graph.n);

  int violations = 0;
  for (int i = 0; i < cfg.training.num_seeds; ++i) {
    std::uint64_t run_seed = rng::derive(cfg.seed, {6, static_cast<std::uint64_t>(i)});
    gcn::GcnParams teacher =
        gcn::init_params(static_cast<int>(inst.X.cols()), cfg.training.width_k,
                         gcn::Activation::linear(inst.spec.lipschitz_L), inst.spec,
                         rng::derive(run_seed, {1}));
    Eigen::VectorXd t = gcn::forward(teacher, inst.filter, inst.X);
    Eigen::VectorXd y(inst.graph.n);
    if (loss.kind == gcn::LossSpec::Kind::hinge)
      for (int vtx = 0; vtx < inst.graph.n; ++vtx) y(vtx) = t(vtx) >= 0.0 ? 1.0 : -1.0;
    else
      y = t;

    gcn::LabeledSet train_labels;
    train_labels.nodes = inst.spec.labeled_set;
    train_labels.y.resize(inst.spec.m());
    for (int j = 0; j < inst.spec.m(); ++j) train_labels.y(j) = y(inst.spec.labeled_set[j]);

    gcn::TrainOptions to;
    to.lr = cfg.training.lr;
    to.epochs = cfg.training.epochs;
    to.width_k = cfg.training.width_k;
    to.minibatch = cfg.training.minibatch;
    to.seed = rng::derive(run_seed, {2});
    to.activation = gcn::Activation::linear(inst.spec.lipschitz_L);
    auto trained = gcn::train_projected_sgd(inst.spec, inst.filter, inst.X, train_labels, loss, to);

    gcn::LabeledSet test_labels;
    test_labels.nodes = complement;
    test_labels.y.resize(static_cast<Eigen::Index>(complement.size()));
    for (std::size_t j = 0; j < complement.size(); ++j)
      test_labels.y(static_cast<Eigen::Index>(j)) = y(complement[j]);

    GapRow row;
    row.seed = run_seed;
    row.train_risk = trained.history.back();
    row.transductive_risk =
        gcn::empirical_risk(trained.params, inst.filter, inst.X, test_labels, loss);
    row.gap = row.transductive_risk - row.train_risk;
    row.thm3_bound = bounds::generalization_bound_thm3(row.train_risk, upper.upper_thm1,
                                                       loss.alpha_l, cfg.delta, inst.graph.n);
    row.violated = row.transductive_risk > row.thm3_bound;
    if (row.violated) ++violations;
    if (i == 0) {
      report.first_run_params = gcn::params_to_json(trained.params);
      report.first_run_history = trained.history;
    }
    report.rows.push_back(row);
  }
  report.violation_rate =
      static_cast<double>(violations) / static_cast<double>(cfg.training.num_seeds);
  return report;
}

int run_scenario(const ScenarioConfig& cfg, std::vector<std::string>* written) {
  namespace fs = std::filesystem;
  auto emit = [&](const std::string& name, const std::string& content) {
    std::string path = (fs::path(cfg.output_dir) / name).string();
    util::atomic_write_file(path, content);
    if (written) written->push_back(path);
  };
  try {
    switch (cfg.scenario) {
      case Scenario::bound: {
        auto rep = run_bound(cfg);
        json j = report_header(cfg);
        j.update(bounds::report_to_json(rep));
        emit("bound_report.json", j.dump(2) + "\n");
        break;
      }
      case Scenario::estimate: {
        Instance inst = build_instance(cfg);
        auto est = estimate_on(inst, cfg);
        json j = report_header(cfg);
        j.update(radest::estimate_to_json(est, inst.spec, inst.filter));
        emit("rc_estimate.json", j.dump(2) + "\n");
        break;
      }
      case Scenario::sandwich: {
        json j = run_sandwich(cfg);
        emit("sandwich.json", j.dump(2) + "\n");
        break;
      }
      case Scenario::scaling: {
        auto table = run_scaling(cfg);
        std::ostringstream csv;
        bounds::write_rate_csv(table, csv);
        emit("scaling.csv", csv.str());
        json j = report_header(cfg);
        j["family"] = bounds::to_string(table.family);
        j["fitted_loglog_slope"] = bounds::fit_loglog_slope(table);
        j["asymptotic_exponent"] = asymptotic_exponent(table.family);
        auto rows = json::array();
        for (const auto& a : table.per_n)
          rows.push_back({{"n", a.n}, {"mean_lambda_max", a.mean_lambda}, {"mean_q", a.mean_q},
                          {"mean_upper_thm1", a.mean_upper}});
        j["per_n"] = rows;
        emit("scaling_summary.json", j.dump(2) + "\n");
        try {
          emit("scaling.svg", scaling_svg(table));
        } catch (const std::exception& e) {
          std::cerr << "plotting failed (data files written): " << e.what() << "\n";
        }
        break;
      }
      case Scenario::gap: {
        auto rep = run_gap(cfg);
        std::ostringstream csv;
        csv << "seed,train_risk,transductive_risk,gap,thm3_bound,violated\n";
        for (const auto& r : rep.rows)
          csv << r.seed << ',' << util::format_double(r.train_risk) << ','
              << util::format_double(r.transductive_risk) << ',' << util::format_double(r.gap)
              << ',' << util::format_double(r.thm3_bound) << ',' << (r.violated ? 1 : 0) << '\n';
        emit("gap.csv", csv.str());
        json j = report_header(cfg);
        j["violation_rate"] = rep.violation_rate;
        j["complexity_term"] = rep.complexity_term;
        j["deviation_term"] = rep.deviation_term;
        j["num_seeds"] = cfg.training.num_seeds;
        j["delta"] = cfg.delta;
        emit("gap_summary.json", j.dump(2) + "\n");
        emit("gap_params_first.json", rep.first_run_params.dump(2) + "\n");
        std::ostringstream hist;
        gcn::write_history_csv(rep.first_run_history, hist);
        emit("gap_history_first.csv", hist.str());
        break;
      }
    }
  } catch (const assumption_error& e) {
    std::cerr << "assumption violation: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace radbound::harness
