#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "radbound/gcn.hpp"
#include "radbound/graph.hpp"
#include "radbound/rng.hpp"
#include "radbound/spectral.hpp"

using namespace radbound;
using gcn::Activation;
using gcn::GcnParams;
using gcn::HypothesisSpec;
using gcn::LabeledSet;
using gcn::LossSpec;
using spectral::FilterKind;

namespace {

HypothesisSpec make_spec(int m, double L = 1.0, double B = 1.0, double R = 1.0, double D = 1.0,
                         int q = 3) {
  HypothesisSpec s;
  s.lipschitz_L = L;
  s.B = B;
  s.R = R;
  s.D_bound = D;
  s.q = q;
  for (int i = 0; i < m; ++i) s.labeled_set.push_back(i);
  return s;
}

GcnParams random_params(int d, int k, const Activation& act, std::uint64_t seed, double scale) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> unif(-scale, scale);
  GcnParams p;
  p.activation = act;
  p.W1.resize(d, k);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) p.W1(i, j) = unif(eng);
  p.w2.resize(k);
  for (int j = 0; j < k; ++j) p.w2(j) = unif(eng);
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("gcn");

TEST_CASE("activation contract") {
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  std::uniform_int_distribution<int> pow2(-3, 3);
  auto relu = Activation::relu();
  auto lin = Activation::linear(1.7);
  auto leaky = Activation::leaky_relu(0.1);
  CHECK(relu.apply(0.0) == 0.0);
  CHECK(lin.apply(0.0) == 0.0);
  CHECK(leaky.apply(0.0) == 0.0);
  for (int i = 0; i < 100000; ++i) {
    double z = unif(eng);
    double alpha = std::abs(unif(eng));
    // relu: exact positive homogeneity for arbitrary alpha
    CHECK(relu.apply(alpha * z) == alpha * relu.apply(z));
    // scaling by powers of two commutes with multiplication exactly
    double a2 = std::ldexp(1.0, pow2(eng));
    CHECK(lin.apply(a2 * z) == a2 * lin.apply(z));
    CHECK(leaky.apply(a2 * z) == a2 * leaky.apply(z));
    // and any alpha agrees to round-off
    CHECK(lin.apply(alpha * z) == doctest::Approx(alpha * lin.apply(z)).epsilon(1e-14));
  }
  CHECK(relu.lipschitz_L == 1.0);
  CHECK(leaky.lipschitz_L == 1.0);
  CHECK(lin.lipschitz_L == 1.7);
}

TEST_CASE("forward") {
  auto c4 = graphgen::gen_regular(4, 2, 0);
  auto f = spectral::build_filter(c4, FilterKind::unnormalized);
  Eigen::MatrixXd X = gcn::random_features(4, 2, 1.0, 3);

  SUBCASE("zero weights give zero output") {
    GcnParams p = random_params(2, 3, Activation::relu(), 1, 0.5);
    p.W1.setZero();
    Eigen::VectorXd out = gcn::forward(p, f, X);
    CHECK(out.norm() == 0.0);
  }
  SUBCASE("positive homogeneity in W1") {
    GcnParams p = random_params(2, 3, Activation::relu(), 2, 0.5);
    Eigen::VectorXd base = gcn::forward(p, f, X);
    for (int e = -2; e <= 2; ++e) {
      double alpha = std::ldexp(1.0, e);  // exact power-of-two scaling
      GcnParams q = p;
      q.W1 *= alpha;
      Eigen::VectorXd scaled = gcn::forward(q, f, X);
      for (int i = 0; i < 4; ++i) CHECK(scaled(i) == alpha * base(i));
    }
    GcnParams q = p;
    q.W1 *= 1.37;
    Eigen::VectorXd scaled = gcn::forward(q, f, X);
    for (int i = 0; i < 4; ++i)
      CHECK(scaled(i) == doctest::Approx(1.37 * base(i)).epsilon(1e-12));
  }
  SUBCASE("linear activation equals the dense matrix chain") {
    GcnParams p = random_params(2, 3, Activation::linear(1.0), 4, 0.8);
    Eigen::MatrixXd G = f.dense();
    Eigen::VectorXd oracle = G * (G * X * p.W1) * p.w2;
    CHECK((gcn::forward(p, f, X) - oracle).norm() <= 1e-10);
  }
  SUBCASE("dimension mismatches throw") {
    GcnParams p = random_params(3, 2, Activation::relu(), 5, 0.5);
    CHECK_THROWS_AS(gcn::forward(p, f, X), std::invalid_argument);
  }
}

TEST_CASE("two-hop receptive field") {
  auto c12 = graphgen::gen_regular(12, 2, 0);
  auto f = spectral::build_filter(c12, FilterKind::unnormalized);
  Eigen::MatrixXd X = gcn::random_features(12, 2, 1.0, 7);
  GcnParams p = random_params(2, 3, Activation::relu(), 8, 0.7);
  Eigen::VectorXd base = gcn::forward(p, f, X);
  Eigen::MatrixXd X2 = X;
  X2.row(6).setConstant(0.9);  // node 6 is more than 2 hops from node 0
  Eigen::VectorXd perturbed = gcn::forward(p, f, X2);
  CHECK(perturbed(0) == base(0));
  CHECK(perturbed(6) != base(6));
}

TEST_CASE("forward is Lipschitz in the inputs") {
  auto c8 = graphgen::gen_regular(8, 2, 0);
  auto f = spectral::build_filter(c8, FilterKind::unnormalized);
  HypothesisSpec spec = make_spec(4);
  // |f_i(X) - f_i(X')| <= L^2 D R ||G||_inf^2 max_j ||x_j - x'_j||
  Eigen::MatrixXd G = f.dense();
  double ginf = 0.0;
  for (int i = 0; i < 8; ++i) ginf = std::max(ginf, G.row(i).cwiseAbs().sum());
  double C = spec.lipschitz_L * spec.lipschitz_L * spec.D_bound * spec.R * ginf * ginf;
  std::mt19937_64 eng(21);
  std::uniform_real_distribution<double> unif(-0.2, 0.2);
  for (int trial = 0; trial < 50; ++trial) {
    GcnParams p = gcn::init_params(2, 3, Activation::relu(), spec, trial);
    Eigen::MatrixXd X = gcn::random_features(8, 2, 0.8, trial + 100);
    Eigen::MatrixXd Xp = X;
    double max_row = 0.0;
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 2; ++j) Xp(i, j) += unif(eng);
      max_row = std::max(max_row, (Xp.row(i) - X.row(i)).norm());
    }
    Eigen::VectorXd a = gcn::forward(p, f, X);
    Eigen::VectorXd b = gcn::forward(p, f, Xp);
    for (int i = 0; i < 8; ++i) CHECK(std::abs(a(i) - b(i)) <= C * max_row + 1e-12);
  }
}

TEST_CASE("project_params") {
  HypothesisSpec spec = make_spec(4, 1.0, 1.0, 2.0, 0.5);
  SUBCASE("feasible params unchanged") {
    GcnParams p = random_params(2, 3, Activation::relu(), 1, 0.1);
    p.W1 *= 0.5 / std::max(p.W1.norm(), 1e-12);
    p.w2 *= 0.25 / std::max(p.w2.norm(), 1e-12);
    GcnParams q = gcn::project_params(p, spec);
    CHECK((q.W1 - p.W1).norm() == 0.0);
    CHECK((q.w2 - p.w2).norm() == 0.0);
  }
  SUBCASE("radial projection onto the Frobenius ball") {
    GcnParams p = random_params(2, 3, Activation::relu(), 2, 1.0);
    p.W1 *= 2.0 * spec.R / p.W1.norm();  // ||W1||_F = 2R
    Eigen::MatrixXd dir = p.W1 / p.W1.norm();
    GcnParams q = gcn::project_params(p, spec);
    CHECK(q.W1.norm() == doctest::Approx(spec.R).epsilon(1e-12));
    CHECK((q.W1 / q.W1.norm() - dir).norm() <= 1e-12);
  }
  SUBCASE("zero is a fixed point") {
    GcnParams p = random_params(2, 3, Activation::relu(), 3, 1.0);
    p.W1.setZero();
    p.w2.setZero();
    GcnParams q = gcn::project_params(p, spec);
    CHECK(q.W1.norm() == 0.0);
    CHECK(q.w2.norm() == 0.0);
  }
}

TEST_CASE("empirical_risk") {
  auto c4 = graphgen::gen_regular(4, 2, 0);
  auto f = spectral::build_filter(c4, FilterKind::unnormalized);
  Eigen::MatrixXd X = gcn::random_features(4, 2, 1.0, 1);
  GcnParams p = random_params(2, 2, Activation::linear(1.0), 2, 0.6);

  SUBCASE("squared loss vanishes on a perfect fit") {
    Eigen::VectorXd f_out = gcn::forward(p, f, X);
    LabeledSet labels{{0, 1, 2, 3}, f_out};
    CHECK(gcn::empirical_risk(p, f, X, labels, LossSpec::squared(10, 10)) == 0.0);
  }
  SUBCASE("hinge vanishes when every margin is met") {
    Eigen::VectorXd f_out = gcn::forward(p, f, X);
    Eigen::VectorXd y(4);
    for (int i = 0; i < 4; ++i) y(i) = f_out(i) >= 0 ? 1.0 : -1.0;
    GcnParams big = p;
    double worst = f_out.cwiseAbs().minCoeff();
    if (worst < 1.0 && worst > 0) big.w2 *= 1.5 / worst;  // scale margins past 1
    LabeledSet labels{{0, 1, 2, 3}, y};
    CHECK(gcn::empirical_risk(big, f, X, labels, LossSpec::hinge()) == 0.0);
  }
  SUBCASE("hinge at f = 0 is exactly 1") {
    GcnParams zero = p;
    zero.W1.setZero();
    Eigen::VectorXd y(4);
    y << 1, -1, 1, -1;
    LabeledSet labels{{0, 1, 2, 3}, y};
    CHECK(gcn::empirical_risk(zero, f, X, labels, LossSpec::hinge()) == 1.0);
  }
  SUBCASE("empty labeled set rejected") {
    LabeledSet labels;
    CHECK_THROWS_AS(gcn::empirical_risk(p, f, X, labels, LossSpec::hinge()),
                    std::invalid_argument);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  auto c6 = graphgen::gen_regular(6, 2, 0);
  HypothesisSpec spec = make_spec(3);
  const double h = 1e-5;
  int checked = 0;
  for (int point = 0; point < 200 && checked < 100; ++point) {
    bool use_relu = point % 2 == 0;
    bool use_hinge = (point / 2) % 2 == 0;
    auto act = use_relu ? Activation::relu() : Activation::linear(1.0);
    auto loss = use_hinge ? LossSpec::hinge() : LossSpec::squared(3, 3);
    auto fkind = (point % 3 == 0) ? FilterKind::random_walk : FilterKind::unnormalized;
    auto f = spectral::build_filter(c6, fkind);
    Eigen::MatrixXd X = gcn::random_features(6, 2, 1.0, 1000 + point);
    GcnParams p = random_params(2, 3, act, 2000 + point, 0.6);
    LabeledSet labels;
    labels.nodes = spec.labeled_set;
    labels.y.resize(3);
    std::mt19937_64 eng(3000 + point);
    std::uniform_int_distribution<int> sign(0, 1);
    for (int i = 0; i < 3; ++i) labels.y(i) = sign(eng) ? 1.0 : -1.0;

    // Keep clear of relu/hinge kinks so the FD stencil stays on one branch.
    auto cache = gcn::forward_cached(p, f, X);
    bool near_kink = false;
    if (use_relu) {
      near_kink = cache.Z1.cwiseAbs().minCoeff() < 1e-3 || cache.z2.cwiseAbs().minCoeff() < 1e-3;
    }
    if (use_hinge && !near_kink) {
      for (int i = 0; i < 3; ++i)
        if (std::abs(1.0 - labels.y(i) * cache.f(labels.nodes[i])) < 1e-3) near_kink = true;
    }
    if (near_kink) continue;
    ++checked;

    Eigen::VectorXd dLdf = Eigen::VectorXd::Zero(6);
    for (int i = 0; i < 3; ++i)
      dLdf(labels.nodes[i]) = loss.deriv(labels.y(i), cache.f(labels.nodes[i])) / 3.0;
    gcn::Grads g = gcn::backward(p, f, X, cache, dLdf);

    auto risk_at = [&](const GcnParams& q) {
      return gcn::empirical_risk(q, f, X, labels, loss);
    };
    for (int i = 0; i < p.W1.rows(); ++i)
      for (int j = 0; j < p.W1.cols(); ++j) {
        GcnParams up = p, dn = p;
        up.W1(i, j) += h;
        dn.W1(i, j) -= h;
        double fd = (risk_at(up) - risk_at(dn)) / (2 * h);
        double denom = std::max({std::abs(fd), std::abs(g.W1(i, j)), 1e-6});
        CHECK(std::abs(fd - g.W1(i, j)) / denom <= 1e-4);
      }
    for (int j = 0; j < p.w2.size(); ++j) {
      GcnParams up = p, dn = p;
      up.w2(j) += h;
      dn.w2(j) -= h;
      double fd = (risk_at(up) - risk_at(dn)) / (2 * h);
      double denom = std::max({std::abs(fd), std::abs(g.w2(j)), 1e-6});
      CHECK(std::abs(fd - g.w2(j)) / denom <= 1e-4);
    }
  }
  CHECK(checked == 100);
}

TEST_CASE("train_projected_sgd") {
  auto c8 = graphgen::gen_regular(8, 2, 0);
  auto f = spectral::build_filter(c8, FilterKind::unnormalized);
  HypothesisSpec spec = make_spec(6);
  Eigen::MatrixXd X = gcn::random_features(8, 2, 1.0, 44);

  SUBCASE("lr = 0 leaves the projected initialization untouched") {
    GcnParams planted = gcn::init_params(2, 4, Activation::linear(1.0), spec, 7);
    Eigen::VectorXd t = gcn::forward(planted, f, X);
    LabeledSet labels;
    labels.nodes = spec.labeled_set;
    labels.y.resize(6);
    for (int i = 0; i < 6; ++i) labels.y(i) = t(labels.nodes[i]);
    gcn::TrainOptions opts;
    opts.lr = 0.0;
    opts.epochs = 10;
    opts.width_k = 4;
    opts.seed = 5;
    auto result = gcn::train_projected_sgd(spec, f, X, labels, LossSpec::squared(5, 5), opts);
    GcnParams init = gcn::init_params(2, 4, opts.activation, spec, 5);
    CHECK((result.params.W1 - init.W1).norm() == 0.0);
    CHECK((result.params.w2 - init.w2).norm() == 0.0);
    for (double r : result.history) CHECK(r == result.history.front());
  }

  SUBCASE("teacher-student descent on C8") {
    GcnParams teacher = gcn::init_params(2, 4, Activation::linear(1.0), spec, 99);
    Eigen::VectorXd t = gcn::forward(teacher, f, X);
    LabeledSet labels;
    labels.nodes = spec.labeled_set;
    labels.y.resize(6);
    for (int i = 0; i < 6; ++i) labels.y(i) = t(labels.nodes[i]);
    gcn::TrainOptions opts;
    opts.lr = 0.05;
    opts.epochs = 500;
    opts.width_k = 4;
    opts.seed = 3;
    auto result = gcn::train_projected_sgd(spec, f, X, labels, LossSpec::squared(5, 5), opts);
    CHECK(result.history.back() < result.history.front());
    CHECK(result.max_w1_norm <= spec.R + 1e-12);
    CHECK(result.max_w2_norm <= spec.D_bound + 1e-12);
    CHECK(result.history.size() == 501);
  }

  SUBCASE("minibatch path stays feasible and is deterministic") {
    GcnParams teacher = gcn::init_params(2, 4, Activation::linear(1.0), spec, 1);
    Eigen::VectorXd t = gcn::forward(teacher, f, X);
    LabeledSet labels;
    labels.nodes = spec.labeled_set;
    labels.y.resize(6);
    for (int i = 0; i < 6; ++i) labels.y(i) = t(labels.nodes[i]) >= 0 ? 1.0 : -1.0;
    gcn::TrainOptions opts;
    opts.lr = 0.05;
    opts.epochs = 50;
    opts.width_k = 4;
    opts.seed = 17;
    opts.minibatch = 2;
    auto a = gcn::train_projected_sgd(spec, f, X, labels, LossSpec::hinge(), opts);
    auto b = gcn::train_projected_sgd(spec, f, X, labels, LossSpec::hinge(), opts);
    CHECK((a.params.W1 - b.params.W1).norm() == 0.0);
    CHECK(a.history == b.history);
    CHECK(a.max_w1_norm <= spec.R + 1e-12);
  }
}

TEST_CASE("checkpoint json round trip") {
  GcnParams p = random_params(3, 2, Activation::leaky_relu(0.2), 5, 0.9);
  auto j = gcn::params_to_json(p);
  GcnParams q = gcn::params_from_json(j);
  CHECK((p.W1 - q.W1).norm() == 0.0);
  CHECK((p.w2 - q.w2).norm() == 0.0);
  CHECK(q.activation.kind == Activation::Kind::leaky_relu);
  CHECK(q.activation.slope == 0.2);
}

TEST_CASE("history csv") {
  std::ostringstream out;
  gcn::write_history_csv({1.0, 0.5, 0.25}, out);
  CHECK(out.str() == "epoch,risk\n0,1\n1,0.5\n2,0.25\n");
}

TEST_SUITE_END();
