#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "radbound/spectral.hpp"

namespace radbound::gcn {

// Positive-homogeneous activation: sigma(0) = 0, sigma(a z) = a sigma(z) for
// a >= 0, |sigma(a) - sigma(b)| <= lipschitz_L |a - b|.
struct Activation {
  enum class Kind { relu, linear, leaky_relu };
  Kind kind = Kind::relu;
  double slope = 0.0;        // leaky_relu only, in (0, 1)
  double lipschitz_L = 1.0;  // linear: the scale in sigma(s) = L s

  static Activation relu();
  static Activation linear(double L);
  static Activation leaky_relu(double slope);

  double apply(double z) const;
  double deriv(double z) const;  // subgradient at 0 taken as the z<0 branch
  Eigen::MatrixXd apply(const Eigen::MatrixXd& z) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& z) const;
};

const char* to_string(Activation::Kind k);

struct GcnParams {
  Eigen::MatrixXd W1;  // d x k
  Eigen::VectorXd w2;  // k
  Activation activation;
};

// The constants defining the norm-constrained class: activation Lipschitz
// constant, feature bound B, ||W1||_F <= R, ||w2||_2 <= D_bound, homogeneous
// degree q, and the labeled node set.
struct HypothesisSpec {
  double lipschitz_L = 1.0;
  double B = 1.0;
  double R = 1.0;
  double D_bound = 1.0;
  int q = 1;
  std::vector<int> labeled_set;  // sorted ascending

  int m() const { return static_cast<int>(labeled_set.size()); }
  void validate(int n) const;  // throws std::invalid_argument
};

// max_i ||x_i||_2 <= B, checked with a small slack for round-off.
void validate_features(const HypothesisSpec& spec, const Eigen::MatrixXd& X);

struct LossSpec {
  enum class Kind { hinge, squared };
  Kind kind = Kind::hinge;
  double alpha_l = 1.0;  // Lipschitz constant of l(y, .) on the operative domain

  static LossSpec hinge();
  static LossSpec squared(double y_max, double f_max);

  double value(double y, double f) const;
  double deriv(double y, double f) const;  // d/df
};

const char* to_string(LossSpec::Kind k);

struct LabeledSet {
  std::vector<int> nodes;  // sorted ascending
  Eigen::VectorXd y;       // aligned with nodes
};

struct ForwardCache {
  Eigen::MatrixXd Z1;  // n x k, pre-activation of the hidden layer
  Eigen::MatrixXd H1;  // n x k
  Eigen::VectorXd z2;  // n, pre-activation of the output
  Eigen::VectorXd f;   // n
};

// f = sigma(g(L) sigma(g(L) X W1) w2), one output per node.
Eigen::VectorXd forward(const GcnParams& params, const spectral::GraphFilter& filter,
                        const Eigen::MatrixXd& X);
ForwardCache forward_cached(const GcnParams& params, const spectral::GraphFilter& filter,
                            const Eigen::MatrixXd& X);

struct Grads {
  Eigen::MatrixXd W1;
  Eigen::VectorXd w2;
};

// Gradients of sum_i dLdf[i] * f_i with respect to (W1, w2).
Grads backward(const GcnParams& params, const spectral::GraphFilter& filter,
               const Eigen::MatrixXd& X, const ForwardCache& cache,
               const Eigen::VectorXd& dLdf);

// Radial projection onto {||W1||_F <= R} x {||w2||_2 <= D_bound}.
GcnParams project_params(GcnParams params, const HypothesisSpec& spec);

double empirical_risk(const GcnParams& params, const spectral::GraphFilter& filter,
                      const Eigen::MatrixXd& X, const LabeledSet& labels,
                      const LossSpec& loss);

// Entries of W1, w2 i.i.d. uniform in [-1/sqrt(dk), 1/sqrt(dk)], then projected.
GcnParams init_params(int d, int k, const Activation& act, const HypothesisSpec& spec,
                      std::uint64_t seed);

struct TrainOptions {
  double lr = 0.05;
  int epochs = 100;
  int width_k = 8;
  int minibatch = 0;  // 0 = full batch over the labeled set
  std::uint64_t seed = 0;
  Activation activation = Activation::linear(1.0);
};

struct TrainResult {
  GcnParams params;
  std::vector<double> history;  // empirical risk; [0] is the initial risk
  double max_w1_norm = 0.0;     // largest ||W1||_F seen after any step
  double max_w2_norm = 0.0;     // largest ||w2||_2 seen after any step
};

// Projected (full-batch by default) gradient descent on the empirical risk;
// parameters satisfy the norm constraints after every step.
TrainResult train_projected_sgd(const HypothesisSpec& spec, const spectral::GraphFilter& filter,
                                const Eigen::MatrixXd& X, const LabeledSet& labels,
                                const LossSpec& loss, const TrainOptions& opts);

nlohmann::json params_to_json(const GcnParams& params);
GcnParams params_from_json(const nlohmann::json& j);
void write_history_csv(const std::vector<double>& history, std::ostream& out);

// n x d feature matrix with every row B * e1.
Eigen::MatrixXd canonical_features(int n, int d, double B);
// Seeded rows with ||x_i|| <= B (uniform entries, rescaled into the ball).
Eigen::MatrixXd random_features(int n, int d, double B, std::uint64_t seed);

}  // namespace radbound::gcn
