#include <cmath>
#include <random>

#include "dumbo/admm.hpp"
#include "oracles.hpp"
#include "scenarios.hpp"
#include "support.hpp"

using namespace dumbo;

namespace {

using scenario::quadratic;

FactorNode constant(Factor vars) {
  FactorNode node;
  node.vars = std::move(vars);
  node.evaluate = [](const Vector& x, Vector* g) {
    if (g) *g = Vector::Zero(x.size());
    return 0.0;
  };
  return node;
}

Vector v1(double a) { return Vector::Constant(1, a); }

}  // namespace

TEST_CASE("local step") {
  const BoxDomain box = BoxDomain::uniform(1, -5.0, 5.0);
  AdmmParams p;

  // Constant objective: the penalty pins the anchor.
  const Vector x = local_step(constant({0}), v1(1.5), v1(0.0), box, p, 1);
  CHECK(x[0] == doctest::Approx(1.5).epsilon(1e-9));

  // Closed-form maximizer (2c + eta xbar) / (2 + eta).
  for (double eta : {1e-6, 0.5, 1.0, 4.0}) {
    p.eta = eta;
    const double c = 2.0, xbar = -1.0;
    const Vector got = local_step(quadratic({0}, v1(c)), v1(xbar), v1(0.0), box, p, 7);
    CHECK(got[0] == doctest::Approx((2 * c + eta * xbar) / (2 + eta)).scale(1.0).epsilon(1e-4));
  }

  // Never worse than the clipped anchor.
  FactorNode wiggly;
  wiggly.vars = {0};
  wiggly.evaluate = [](const Vector& x, Vector* g) {
    if (g) *g = Vector::Constant(1, 20.0 * std::cos(20.0 * x[0]));
    return std::sin(20.0 * x[0]);
  };
  p = AdmmParams{};
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector anchor = oracle::uniform_point(rng, 1, -5.0, 5.0);
    const Vector dual = oracle::uniform_point(rng, 1, -1.0, 1.0);
    const Vector got = local_step(wiggly, anchor, dual, box, p, trial);
    auto L = [&](const Vector& z) {
      return wiggly.evaluate(z, nullptr) - dual.dot(z - anchor) - 0.5 * p.eta * (z - anchor).squaredNorm();
    };
    CHECK(L(got) >= L(anchor));
    CHECK(box.contains(got));
  }

  FactorNode broken;
  broken.vars = {0};
  broken.evaluate = [](const Vector& x, Vector* g) {
    if (g) *g = Vector::Constant(x.size(), std::nan(""));
    return 0.0;
  };
  CHECK_ERROR_CODE(local_step(broken, v1(0.0), v1(0.0), box, p, 1), ErrorCode::NonFiniteGradient);
}

TEST_CASE("consensus and dual updates") {
  const auto g = FactorGraph::from_factors({{0, 1}, {1}}, 2);
  const BoxDomain box = BoxDomain::uniform(2, -10.0, 10.0);
  const std::vector<Vector> locals{(Vector(2) << 1.0, 2.0).finished(), v1(4.0)};
  const Vector xbar = consensus_update(locals, g, box);
  CHECK(xbar[0] == 1.0);
  CHECK(xbar[1] == 3.0);
  CHECK(consensus_update({(Vector(2) << 5.0, 5.0).finished(), v1(5.0)}, g, box) == Vector::Constant(2, 5.0));
  std::size_t clips = 0;
  CHECK(consensus_update({(Vector(2) << 50.0, 0.0).finished(), v1(0.0)}, g, box, &clips)[0] == 10.0);
  CHECK(clips == 1);

  AdmmState st;
  st.locals = locals;
  st.duals = {Vector::Zero(2), Vector::Zero(1)};
  st.consensus = xbar;
  dual_update(st, g, 1.0);
  CHECK(st.duals[0][1] == -1.0);
  CHECK(st.duals[1][0] == 1.0);
  CHECK(st.duals[0][1] + st.duals[1][0] == 0.0);

  AdmmState still = st;
  still.locals = {restrict(xbar, std::vector<std::size_t>{0, 1}), restrict(xbar, std::vector<std::size_t>{1})};
  const auto before = still.duals;
  dual_update(still, g, 1.0);
  CHECK(still.duals[0] == before[0]);
  CHECK(still.duals[1] == before[1]);

  // Zero sum per dimension survives many random rounds without clipping.
  std::mt19937_64 rng(6);
  const auto g3 = FactorGraph::from_factors({{0, 1}, {1, 2}, {0, 2}, {1}}, 3);
  const BoxDomain wide = BoxDomain::uniform(3, -1e6, 1e6);
  AdmmState z;
  for (const auto& f : g3.factor_to_vars()) {
    z.locals.push_back(Vector::Zero(static_cast<Eigen::Index>(f.size())));
    z.duals.push_back(Vector::Zero(static_cast<Eigen::Index>(f.size())));
  }
  double worst = 0.0;
  for (int it = 0; it < 100; ++it) {
    for (auto& l : z.locals) l = oracle::uniform_point(rng, static_cast<std::size_t>(l.size()), -3.0, 3.0);
    z.consensus = consensus_update(z.locals, g3, wide);
    dual_update(z, g3, 0.7);
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t i : g3.var_to_factors()[j]) {
        const auto& f = g3.factor_to_vars()[i];
        const auto k = std::find(f.begin(), f.end(), j) - f.begin();
        s += z.duals[i][k];
      }
      worst = std::max(worst, std::abs(s));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("minimax consensus") {
  const auto g = FactorGraph::from_factors({{0}, {0}}, 1);
  const BoxDomain box = BoxDomain::uniform(1, -10.0, 10.0);
  const std::vector<Vector> locals{v1(2.0), v1(4.0)};
  CHECK(minimax_consensus(locals, {1.0, 3.0}, g, box)[0] == doctest::Approx(3.5));
  CHECK(minimax_consensus(locals, {2.0, 2.0}, g, box)[0] == doctest::Approx(3.0));
  CHECK(minimax_consensus(locals, {1.0, std::nullopt}, g, box)[0] == 3.0);
  CHECK(minimax_consensus(locals, {0.0, 0.0}, g, box)[0] == 3.0);
  CHECK_ERROR_CODE(minimax_consensus(locals, {-1.0, 1.0}, g, box), ErrorCode::NegativeLipschitz);

  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> w(0.1, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + trial % 5;
    const auto fs = oracle::random_factors(rng, d, 4);
    const auto graph = FactorGraph::from_factors(fs, d);
    std::vector<Vector> ls;
    std::vector<std::optional<double>> lips;
    std::vector<double> weights;
    for (const auto& f : fs) {
      ls.push_back(oracle::uniform_point(rng, f.size(), -1.0, 1.0));
      weights.push_back(w(rng));
      lips.emplace_back(weights.back());
    }
    const BoxDomain b = BoxDomain::uniform(d, -1.0, 1.0);
    const Vector got = minimax_consensus(ls, lips, graph, b);
    CHECK((got - oracle::minimize_psi(ls, weights, fs, d)).cwiseAbs().maxCoeff() <= 1e-6);
    std::vector<std::optional<double>> equal(fs.size(), 2.5);
    CHECK((minimax_consensus(ls, equal, graph, b) - consensus_update(ls, graph, b)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("admm on concave quadratics") {
  SUBCASE("separable factors") {
    const BoxDomain box = BoxDomain::uniform(3, -5.0, 5.0);
    const std::vector<FactorNode> nodes{quadratic({0}, v1(1.0)), quadratic({1, 2}, (Vector(2) << -2.0, 3.0).finished())};
    AdmmParams p;
    p.primal_tolerance = 1e-7;
    p.dual_tolerance = 1e-7;
    const auto r = admm_maximize(nodes, box, p, Vector::Zero(3));
    CHECK(r.diagnostics.iterations <= 50);
    CHECK((r.query - (Vector(3) << 1.0, -2.0, 3.0).finished()).norm() <= 1e-3);
    CHECK(r.diagnostics.acquisition_value >= -1e-6);
  }

  SUBCASE("overlapping factors") {
    FactorNode first;
    first.vars = {0, 1};
    first.evaluate = [](const Vector& x, Vector* g) {
      if (g) *g = (Vector(2) << -2.0 * (x[0] - 1.0), -2.0 * x[1]).finished();
      return -(x[0] - 1.0) * (x[0] - 1.0) - x[1] * x[1];
    };
    const std::vector<FactorNode> nodes{first, quadratic({1}, v1(2.0))};
    const BoxDomain box = BoxDomain::uniform(2, -5.0, 5.0);
    const auto r = admm_maximize(nodes, box, AdmmParams{}, Vector::Zero(2));
    // Dense grid oracle.
    double best = -1e300, bx = 0, by = 0;
    for (int i = 0; i <= 1000; ++i)
      for (int j = 0; j <= 1000; ++j) {
        const double x = -5.0 + 0.01 * i, y = -5.0 + 0.01 * j;
        const double v = -(x - 1) * (x - 1) - y * y - (y - 2) * (y - 2);
        if (v > best) {
          best = v;
          bx = x;
          by = y;
        }
      }
    CHECK(bx == doctest::Approx(1.0));
    CHECK(by == doctest::Approx(1.0));
    CHECK(r.diagnostics.iterations <= 50);
    CHECK(std::abs(r.query[0] - bx) <= 1e-2);
    CHECK(std::abs(r.query[1] - by) <= 1e-2);
    CHECK(std::abs(r.diagnostics.acquisition_value - best) <= 1e-3);
    CHECK(r.state.primal_residual <= 1e-3 * std::sqrt(2.0) * 10.0);
  }

  SUBCASE("single factor reduces to local ascent") {
    const BoxDomain box = BoxDomain::uniform(2, 0.0, 1.0);
    const auto r = admm_maximize({quadratic({0, 1}, (Vector(2) << 0.3, 0.8).finished())}, box, AdmmParams{},
                                 Vector::Constant(2, 0.5));
    CHECK((r.query - r.state.locals[0]).norm() == 0.0);
    CHECK((r.query - (Vector(2) << 0.3, 0.8).finished()).norm() <= 1e-2);
  }
}

TEST_CASE("early stop performs one iteration") {
  const BoxDomain box = BoxDomain::uniform(2, -5.0, 5.0);
  auto a = quadratic({0, 1}, (Vector(2) << 1.0, 1.0).finished());
  auto b = quadratic({1}, v1(-1.0));
  a.lipschitz = 1.0;
  b.lipschitz = 3.0;
  AdmmParams p;
  p.mode = AdmmMode::EarlyStop;
  const auto r = admm_maximize({a, b}, box, p, Vector::Zero(2));
  CHECK(r.diagnostics.iterations == 1);
  CHECK(r.diagnostics.local_steps == 2);
  CHECK(r.diagnostics.consensus_updates == 1);
  CHECK(r.diagnostics.dual_updates == 1);
  CHECK(r.diagnostics.minimax_used);
  const Vector expected = minimax_consensus(r.state.locals, {1.0, 3.0}, FactorGraph::from_factors({{0, 1}, {1}}, 2), box);
  CHECK(r.query == expected);
}

TEST_CASE("update orders agree") {
  const BoxDomain box = BoxDomain::uniform(3, -2.0, 2.0);
  const std::vector<FactorNode> nodes{quadratic({0, 1}, (Vector(2) << 0.5, -0.5).finished()),
                                      quadratic({1, 2}, (Vector(2) << 1.0, 0.2).finished()),
                                      quadratic({0}, v1(-1.0))};
  AdmmParams p;
  p.seed = 9;
  const auto jac = admm_maximize(nodes, box, p, Vector::Zero(3));
  p.update_order = UpdateOrder::GaussSeidel;
  const auto gs = admm_maximize(nodes, box, p, Vector::Zero(3));
  CHECK(jac.query == gs.query);
  CHECK(jac.diagnostics.iterations == gs.diagnostics.iterations);
}

TEST_CASE("admm parameter checks") {
  AdmmParams p;
  p.eta = 0.0;
  CHECK_ERROR_CODE(p.validate(), ErrorCode::InvalidArgument);
  CHECK(parse_admm_mode("early_stop") == AdmmMode::EarlyStop);
  CHECK(parse_update_order("gauss_seidel") == UpdateOrder::GaussSeidel);
  CHECK_ERROR_CODE(parse_admm_mode("fast"), ErrorCode::ParseError);
}
