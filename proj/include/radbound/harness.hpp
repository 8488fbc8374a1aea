#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "radbound/bounds.hpp"
#include "radbound/gcn.hpp"
#include "radbound/rademacher.hpp"

namespace radbound::harness {

enum class Scenario { bound, estimate, sandwich, scaling, gap };
const char* to_string(Scenario s);

struct ConfigError {
  std::string path;
  std::string message;
};

struct GraphConfig {
  std::string family = "regular";  // regular | erdos_renyi | file
  int n = 0;
  int ring_degree = 2;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::string path;  // file family: .json or edge-list text
};

struct FilterConfig {
  spectral::FilterKind kind = spectral::FilterKind::unnormalized;
  std::vector<double> coefficients;
  bool allow_shift_violation = false;
};

struct OmegaConfig {
  int m = 0;
  std::string placement = "random";  // random | prefix
  std::uint64_t seed = 0;
};

struct FeatureConfig {
  std::string kind = "canonical";  // canonical | random
  int d = 2;
  std::uint64_t seed = 0;
};

struct EstimatorConfig {
  std::string method = "closed_form";  // closed_form | pga | brute_force
  gcn::Activation activation = gcn::Activation::linear(1.0);
  std::int64_t num_mc = radest::kExhaustive;
  int num_restarts = 20;
  int steps = 300;
  double lr = 0.0;
  int width_k = 4;
  int grid_resolution = 0;  // 0: sized for grid_target
  double grid_target = 1e-3;
};

struct TrainingConfig {
  int width_k = 8;
  double lr = 0.05;
  int epochs = 300;
  std::string loss = "hinge";  // hinge | squared
  int num_seeds = 50;
  int minibatch = 0;
};

struct ScalingConfig {
  bounds::RateFamily family = bounds::RateFamily::regular_unnormalized;
  std::vector<int> sizes;
  int num_seeds = 20;
  bounds::MRule m_rule;
  double c = 2.0;
  int ring_degree = 2;
};

struct HypothesisConfig {
  double lipschitz_L = 1.0;
  double B = 1.0;
  double R = 1.0;
  double D_bound = 1.0;
};

struct ScenarioConfig {
  Scenario scenario = Scenario::bound;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  double delta = 0.05;
  bool relax_heterogeneous = false;
  GraphConfig graph;
  FilterConfig filter;
  HypothesisConfig hypothesis;
  OmegaConfig omega;
  FeatureConfig features;
  EstimatorConfig estimator;
  TrainingConfig training;
  ScalingConfig scaling;
  nlohmann::json normalized;  // config with all defaults filled
  std::uint64_t config_hash = 0;
};

struct ValidationResult {
  std::optional<ScenarioConfig> config;
  std::vector<ConfigError> errors;
  bool ok() const { return errors.empty() && config.has_value(); }
};

// Fills defaults, rejects unknown keys, reports each invalid field with its
// path. `scenario_override` comes from the CLI subcommand.
ValidationResult validate_config(const nlohmann::json& raw,
                                 std::optional<Scenario> scenario_override = {},
                                 std::optional<std::uint64_t> seed_override = {});

struct GapRow {
  std::uint64_t seed = 0;
  double train_risk = 0.0;
  double transductive_risk = 0.0;  // risk on the complement of the labeled set
  double gap = 0.0;
  double thm3_bound = 0.0;
  bool violated = false;
};

struct GapReport {
  std::vector<GapRow> rows;
  double violation_rate = 0.0;
  double complexity_term = 0.0;  // 2 alpha_l * upper_thm1, shared by all rows
  double deviation_term = 0.0;
  nlohmann::json first_run_params;        // checkpoint of the first seeded run
  std::vector<double> first_run_history;  // its per-epoch empirical risk
};

// Exit codes: 0 success, 1 config error, 2 assumption violation, 3 numerical
// failure. Written file paths are appended to `written` when non-null.
int run_scenario(const ScenarioConfig& config, std::vector<std::string>* written = nullptr);

// Exposed for tests: scenario cores returning the reports they serialize.
bounds::BoundReport run_bound(const ScenarioConfig& config);
radest::RcEstimate run_estimate(const ScenarioConfig& config);
nlohmann::json run_sandwich(const ScenarioConfig& config);
bounds::RateTable run_scaling(const ScenarioConfig& config);
GapReport run_gap(const ScenarioConfig& config);

}  // namespace radbound::harness
