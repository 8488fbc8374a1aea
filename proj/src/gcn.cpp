#include "radbound/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "radbound/errors.hpp"
#include "radbound/rng.hpp"
#include "radbound/util.hpp"

namespace radbound::gcn {

Activation Activation::relu() { return Activation{Kind::relu, 0.0, 1.0}; }

Activation Activation::linear(double L) {
  if (!(L > 0.0)) throw std::invalid_argument("linear activation: L must be positive");
  return Activation{Kind::linear, 0.0, L};
}

Activation Activation::leaky_relu(double slope) {
  if (!(slope > 0.0 && slope < 1.0))
    throw std::invalid_argument("leaky_relu: slope must lie in (0, 1)");
  return Activation{Kind::leaky_relu, slope, 1.0};
}

double Activation::apply(double z) const {
  switch (kind) {
    case Kind::relu: return z > 0.0 ? z : 0.0;
    case Kind::linear: return lipschitz_L * z;
    case Kind::leaky_relu: return z > 0.0 ? z : slope * z;
  }
  return 0.0;
}

double Activation::deriv(double z) const {
  switch (kind) {
    case Kind::relu: return z > 0.0 ? 1.0 : 0.0;
    case Kind::linear: return lipschitz_L;
    case Kind::leaky_relu: return z > 0.0 ? 1.0 : slope;
  }
  return 0.0;
}

Eigen::MatrixXd Activation::apply(const Eigen::MatrixXd& z) const {
  return z.unaryExpr([this](double v) { return apply(v); });
}

Eigen::VectorXd Activation::apply(const Eigen::VectorXd& z) const {
  return z.unaryExpr([this](double v) { return apply(v); });
}

const char* to_string(Activation::Kind k) {
  switch (k) {
    case Activation::Kind::relu: return "relu";
    case Activation::Kind::linear: return "linear";
    case Activation::Kind::leaky_relu: return "leaky_relu";
  }
  return "?";
}

void HypothesisSpec::validate(int n) const {
  if (!(lipschitz_L > 0.0 && B > 0.0 && R > 0.0 && D_bound > 0.0))
    throw std::invalid_argument("hypothesis: all bounds must be strictly positive");
  if (q < 1) throw std::invalid_argument("hypothesis: q must be at least 1");
  if (labeled_set.empty()) throw std::invalid_argument("hypothesis: labeled set is empty");
  if (static_cast<int>(labeled_set.size()) > n)
    throw std::invalid_argument("hypothesis: m exceeds the node count");
  int prev = -1;
  for (int v : labeled_set) {
    if (v < 0 || v >= n) throw std::invalid_argument("hypothesis: labeled node out of range");
    if (v <= prev) throw std::invalid_argument("hypothesis: labeled set must be sorted, unique");
    prev = v;
  }
}

void validate_features(const HypothesisSpec& spec, const Eigen::MatrixXd& X) {
  for (int i = 0; i < X.rows(); ++i) {
    if (X.row(i).norm() > spec.B * (1.0 + 1e-9) + 1e-12) {
      std::ostringstream msg;
      msg << "features: ||x_" << i << "|| = " << X.row(i).norm() << " exceeds B = " << spec.B;
      throw std::invalid_argument(msg.str());
    }
  }
}

LossSpec LossSpec::hinge() { return LossSpec{Kind::hinge, 1.0}; }

LossSpec LossSpec::squared(double y_max, double f_max) {
  if (!(y_max >= 0.0 && f_max >= 0.0))
    throw std::invalid_argument("squared loss: domain bounds must be nonnegative");
  return LossSpec{Kind::squared, 2.0 * (y_max + f_max)};
}

double LossSpec::value(double y, double f) const {
  switch (kind) {
    case Kind::hinge: return std::max(0.0, 1.0 - y * f);
    case Kind::squared: return (y - f) * (y - f);
  }
  return 0.0;
}

double LossSpec::deriv(double y, double f) const {
  switch (kind) {
    case Kind::hinge: return (1.0 - y * f) > 0.0 ? -y : 0.0;
    case Kind::squared: return 2.0 * (f - y);
  }
  return 0.0;
}

const char* to_string(LossSpec::Kind k) {
  switch (k) {
    case LossSpec::Kind::hinge: return "hinge";
    case LossSpec::Kind::squared: return "squared";
  }
  return "?";
}

namespace {

void check_dims(const GcnParams& params, const spectral::GraphFilter& filter,
                const Eigen::MatrixXd& X) {
  if (X.rows() != filter.n())
    throw std::invalid_argument("forward: X rows must equal the node count");
  if (params.W1.rows() != X.cols())
    throw std::invalid_argument("forward: W1 rows must equal the feature dimension");
  if (params.w2.size() != params.W1.cols())
    throw std::invalid_argument("forward: w2 length must equal the hidden width");
}

}  // namespace

ForwardCache forward_cached(const GcnParams& params, const spectral::GraphFilter& filter,
                            const Eigen::MatrixXd& X) {
  check_dims(params, filter, X);
  ForwardCache c;
  c.Z1 = filter.matrix * (X * params.W1);
  c.H1 = params.activation.apply(c.Z1);
  c.z2 = filter.matrix * (c.H1 * params.w2);
  c.f = params.activation.apply(c.z2);
  return c;
}

Eigen::VectorXd forward(const GcnParams& params, const spectral::GraphFilter& filter,
                        const Eigen::MatrixXd& X) {
  return forward_cached(params, filter, X).f;
}

Grads backward(const GcnParams& params, const spectral::GraphFilter& filter,
               const Eigen::MatrixXd& X, const ForwardCache& cache,
               const Eigen::VectorXd& dLdf) {
  if (dLdf.size() != filter.n())
    throw std::invalid_argument("backward: dLdf length must equal the node count");
  const auto& act = params.activation;
  Eigen::VectorXd dz2 =
      dLdf.cwiseProduct(cache.z2.unaryExpr([&](double z) { return act.deriv(z); }));
  Eigen::VectorXd gt_dz2 = filter.matrix.transpose() * dz2;
  Grads g;
  g.w2 = cache.H1.transpose() * gt_dz2;
  Eigen::MatrixXd dH1 = gt_dz2 * params.w2.transpose();
  Eigen::MatrixXd dZ1 =
      dH1.cwiseProduct(cache.Z1.unaryExpr([&](double z) { return act.deriv(z); }));
  g.W1 = X.transpose() * (filter.matrix.transpose() * dZ1);
  return g;
}

GcnParams project_params(GcnParams params, const HypothesisSpec& spec) {
  double fn = params.W1.norm();
  if (fn > spec.R) params.W1 *= spec.R / fn;
  double wn = params.w2.norm();
  if (wn > spec.D_bound) params.w2 *= spec.D_bound / wn;
  return params;
}

double empirical_risk(const GcnParams& params, const spectral::GraphFilter& filter,
                      const Eigen::MatrixXd& X, const LabeledSet& labels,
                      const LossSpec& loss) {
  if (labels.nodes.empty()) throw std::invalid_argument("empirical_risk: empty labeled set");
  if (labels.y.size() != static_cast<Eigen::Index>(labels.nodes.size()))
    throw std::invalid_argument("empirical_risk: labels misaligned with nodes");
  Eigen::VectorXd f = forward(params, filter, X);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.nodes.size(); ++i)
    total += loss.value(labels.y(static_cast<Eigen::Index>(i)), f(labels.nodes[i]));
  return total / static_cast<double>(labels.nodes.size());
}

GcnParams init_params(int d, int k, const Activation& act, const HypothesisSpec& spec,
                      std::uint64_t seed) {
  if (d < 1 || k < 1) throw std::invalid_argument("init_params: d and k must be positive");
  double scale = 1.0 / std::sqrt(static_cast<double>(d) * static_cast<double>(k));
  auto eng = rng::engine(seed, {0x1217u});
  std::uniform_real_distribution<double> unif(-scale, scale);
  GcnParams p;
  p.activation = act;
  p.W1.resize(d, k);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) p.W1(i, j) = unif(eng);
  p.w2.resize(k);
  for (int j = 0; j < k; ++j) p.w2(j) = unif(eng);
  return project_params(std::move(p), spec);
}

TrainResult train_projected_sgd(const HypothesisSpec& spec, const spectral::GraphFilter& filter,
                                const Eigen::MatrixXd& X, const LabeledSet& labels,
                                const LossSpec& loss, const TrainOptions& opts) {
  if (labels.nodes.empty()) throw std::invalid_argument("train: empty labeled set");
  if (opts.epochs < 0) throw std::invalid_argument("train: epochs must be nonnegative");
  const int n = filter.n();
  const int d = static_cast<int>(X.cols());
  const auto m = labels.nodes.size();

  GcnParams params = init_params(d, opts.width_k, opts.activation, spec, opts.seed);

  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(opts.epochs) + 1);
  result.history.push_back(empirical_risk(params, filter, X, labels, loss));
  result.max_w1_norm = params.W1.norm();
  result.max_w2_norm = params.w2.norm();

  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::size_t batch = opts.minibatch > 0 ? static_cast<std::size_t>(opts.minibatch) : m;
    if (opts.minibatch > 0) {
      auto eng = rng::engine(opts.seed, {0x53u, static_cast<std::uint64_t>(epoch)});
      std::shuffle(order.begin(), order.end(), eng);
    }
    for (std::size_t start = 0; start < m; start += batch) {
      std::size_t stop = std::min(m, start + batch);
      ForwardCache cache = forward_cached(params, filter, X);
      Eigen::VectorXd dLdf = Eigen::VectorXd::Zero(n);
      for (std::size_t i = start; i < stop; ++i) {
        std::size_t idx = order[i];
        int node = labels.nodes[idx];
        dLdf(node) += loss.deriv(labels.y(static_cast<Eigen::Index>(idx)), cache.f(node)) /
                      static_cast<double>(stop - start);
      }
      Grads g = backward(params, filter, X, cache, dLdf);
      params.W1 -= opts.lr * g.W1;
      params.w2 -= opts.lr * g.w2;
      params = project_params(std::move(params), spec);
      result.max_w1_norm = std::max(result.max_w1_norm, params.W1.norm());
      result.max_w2_norm = std::max(result.max_w2_norm, params.w2.norm());
    }
    double risk = empirical_risk(params, filter, X, labels, loss);
    if (!std::isfinite(risk)) {
      std::ostringstream msg;
      msg << "train: non-finite empirical risk at epoch " << epoch;
      throw numerical_error(msg.str());
    }
    result.history.push_back(risk);
  }
  result.params = std::move(params);
  return result;
}

nlohmann::json params_to_json(const GcnParams& params) {
  nlohmann::json j;
  j["d"] = params.W1.rows();
  j["k"] = params.W1.cols();
  auto w1 = nlohmann::json::array();
  for (int i = 0; i < params.W1.rows(); ++i)
    for (int c = 0; c < params.W1.cols(); ++c) w1.push_back(params.W1(i, c));
  j["W1"] = w1;
  auto w2 = nlohmann::json::array();
  for (int i = 0; i < params.w2.size(); ++i) w2.push_back(params.w2(i));
  j["w2"] = w2;
  nlohmann::json act;
  act["kind"] = to_string(params.activation.kind);
  act["lipschitz_L"] = params.activation.lipschitz_L;
  if (params.activation.kind == Activation::Kind::leaky_relu)
    act["slope"] = params.activation.slope;
  j["activation"] = act;
  return j;
}

GcnParams params_from_json(const nlohmann::json& j) {
  GcnParams p;
  int d = j.at("d").get<int>();
  int k = j.at("k").get<int>();
  const auto& w1 = j.at("W1");
  if (static_cast<int>(w1.size()) != d * k)
    throw std::invalid_argument("params json: W1 size mismatch");
  p.W1.resize(d, k);
  for (int i = 0; i < d; ++i)
    for (int c = 0; c < k; ++c) p.W1(i, c) = w1[static_cast<std::size_t>(i) * k + c].get<double>();
  const auto& w2 = j.at("w2");
  if (static_cast<int>(w2.size()) != k) throw std::invalid_argument("params json: w2 size mismatch");
  p.w2.resize(k);
  for (int i = 0; i < k; ++i) p.w2(i) = w2[i].get<double>();
  const auto& act = j.at("activation");
  std::string kind = act.at("kind").get<std::string>();
  if (kind == "relu")
    p.activation = Activation::relu();
  else if (kind == "linear")
    p.activation = Activation::linear(act.at("lipschitz_L").get<double>());
  else if (kind == "leaky_relu")
    p.activation = Activation::leaky_relu(act.at("slope").get<double>());
  else
    throw std::invalid_argument("params json: unknown activation kind " + kind);
  return p;
}

void write_history_csv(const std::vector<double>& history, std::ostream& out) {
  out << "epoch,risk\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    out << i << ',' << util::format_double(history[i]) << '\n';
}

Eigen::MatrixXd canonical_features(int n, int d, double B) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, d);
  X.col(0).setConstant(B);
  return X;
}

Eigen::MatrixXd random_features(int n, int d, double B, std::uint64_t seed) {
  auto eng = rng::engine(seed, {0xfea7u});
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = unif(eng);
    double norm = X.row(i).norm();
    if (norm > 1.0) X.row(i) /= norm;
    X.row(i) *= B;
  }
  return X;
}

}  // namespace radbound::gcn
