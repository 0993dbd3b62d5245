#include <cmath>
#include <memory>
#include <random>

#include "dumbo/acquisition.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dumbo;

namespace {

const Kernel kUnit(KernelFamily::SquaredExponential, 1.0, 1.0);

std::shared_ptr<const FactorModel> fitted(const Dataset& ds, const Decomposition& dec, std::vector<Kernel> ks) {
  return std::make_shared<JointGPModel>(JointGPModel::fit(ds, dec, std::move(ks), ds.noise_variance));
}

}  // namespace

TEST_CASE("variance bounds") {
  const auto six = variance_bounds(std::vector<double>(6, 1.0));
  CHECK(six.v_minus == doctest::Approx(6.0));
  CHECK(six.delta_minus * six.delta_minus == doctest::Approx(30.0).epsilon(1e-12));
  const double expected = std::pow(std::sqrt(6.0) + 2.0 * std::sqrt(30.0), 2);
  CHECK(six.v_plus == doctest::Approx(expected).epsilon(1e-12));
  CHECK(six.v_plus == doctest::Approx(179.7).epsilon(1e-3));
  CHECK(six.v_plus / six.v_minus == doctest::Approx(30.0).epsilon(0.01));

  const auto one = variance_bounds({1.0});
  CHECK(one.delta_minus == 0.0);
  CHECK(one.v_plus == doctest::Approx(1.0));

  const auto two = variance_bounds({1.0, 4.0});
  CHECK(two.delta_minus * two.delta_minus == doctest::Approx(4.0));
  CHECK(two.v_plus == doctest::Approx(std::pow(std::sqrt(5.0) + 4.0, 2)).epsilon(1e-12));
  CHECK(two.v_plus == doctest::Approx(38.89).epsilon(1e-3));

  CHECK_ERROR_CODE(variance_bounds({0.0, 0.0}), ErrorCode::AllZero);
  CHECK_ERROR_CODE(variance_bounds({-1.0, 1.0}), ErrorCode::InvalidArgument);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(2 + trial % 6);
    for (double& x : v) x = u(rng);
    const auto b = variance_bounds(v);
    double cross = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j)
        if (i != j) cross += std::sqrt(v[i] * v[j]);
    CHECK(std::abs(b.delta_minus * b.delta_minus - cross) <= 1e-12 * std::max(1.0, cross));
    CHECK(b.v_plus >= b.v_minus);
  }
}

TEST_CASE("quartic calibration") {
  CHECK(solve_quartic_a(4.0, 4.0) == doctest::Approx(0.25));
  const double a = solve_quartic_a(1.0, 4.0);
  CHECK(a == doctest::Approx(0.32).epsilon(0.01));
  CHECK(42 * std::pow(a, 4) - 24.8 * std::pow(a, 3) + (7.0 / 3.0) * a - 3.0 / 8.0 ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
  const double ls = oracle::golden_section([](double x) { return oracle::least_squares_gap(x, 1.0, 4.0); }, 0.2, 0.6);
  CHECK(a == doctest::Approx(ls).epsilon(1e-6));

  // P(0) < 0 and P increasing on the positive axis.
  double prev = quartic_polynomial(1.0, 4.0, 0.0);
  CHECK(prev < 0.0);
  int sign_changes = 0;
  for (int k = 1; k <= 2000; ++k) {
    const double p = quartic_polynomial(1.0, 4.0, k * 1e-3);
    if ((p > 0) != (prev > 0)) ++sign_changes;
    prev = p;
  }
  CHECK(sign_changes == 1);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(0.0, 1e4);
  for (double vm : {0.01, 1.0, 7.0}) {
    const double av = solve_quartic_a(vm, vm * 20.0);
    for (int i = 0; i < 1000; ++i) {
      const double s = x(rng);
      CHECK(av * s + 1.0 / (4.0 * av) >= std::sqrt(s));
    }
    CHECK(1.0 - 4.0 * av * (1.0 / (4.0 * av)) == doctest::Approx(0.0));
  }
}

TEST_CASE("beta schedule") {
  CHECK(beta_schedule(1, 0.1, 100.0) == doctest::Approx(2.0 * std::log(100.0 * M_PI * M_PI / 0.6)).epsilon(1e-12));
  CHECK(beta_schedule(1, 0.1, 100.0) == doctest::Approx(14.81).epsilon(1e-3));
  CHECK(beta_schedule(10, 0.1, 100.0) - beta_schedule(5, 0.1, 100.0) == doctest::Approx(2.0 * std::log(4.0)));
  CHECK(beta_schedule(7, 0.1, 1e6) - 4 * std::log(7.0) ==
        doctest::Approx(beta_schedule(3, 0.1, 1e6) - 4 * std::log(3.0)));
  for (std::size_t t = 1; t < 50; ++t) CHECK(beta_schedule(t + 1, 0.2, 10.0) > beta_schedule(t, 0.2, 10.0));
  CHECK_ERROR_CODE(beta_schedule(1, 1.0, 10.0), ErrorCode::InvalidDelta);
  CHECK_ERROR_CODE(beta_schedule(1, 0.0, 10.0), ErrorCode::InvalidDelta);
}

TEST_CASE("local acquisition values") {
  const auto prior = fitted(Dataset(1, 0.0), Decomposition::fully_dependent(1), {kUnit});
  const AcquisitionBundle b(prior, 0.5, 4.0, variance_bounds({1.0}), 0);
  CHECK(b.local_acquisition(0, Vector::Constant(1, 0.3)) == doctest::Approx(1.0));
  CHECK(b.local_acquisition_gradient(0, Vector::Constant(1, 0.3)).norm() == 0.0);
  CHECK(b.lipschitz_phi(0) == 0.0);

  Dataset ds(1, 0.0);
  ds.append(Vector::Constant(1, 0.0), 1.0);
  const AcquisitionBundle one(fitted(ds, Decomposition::fully_dependent(1), {kUnit}), 0.5, 4.0,
                              variance_bounds({1.0}), 1);
  CHECK(one.local_acquisition(0, Vector::Constant(1, 0.0)) == doctest::Approx(1.0));

  // Lipschitz example: K = [1], y = [1], a = 0.5, beta = 4.
  CHECK(one.lipschitz_phi(0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  CHECK_ERROR_CODE(one.local_acquisition(1, Vector::Zero(1)), ErrorCode::IndexOutOfRange);
}

TEST_CASE("acquisition gradients, overestimation and lipschitz sampling") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    auto c = oracle::random_case(rng, 8, 4);
    const Decomposition dec(c.factors, c.dim);
    auto model = fitted(c.data, dec, c.kernels());
    AcquisitionConfig cfg;
    cfg.effective_cardinality = 100.0;
    const auto bundle = AcquisitionBundle::calibrate(model, cfg, BoxDomain::unit(c.dim), 5);
    CHECK(bundle.a() > 0.0);
    CHECK(bundle.beta() > 0.0);
    CHECK(std::abs(quartic_polynomial(bundle.bounds().v_minus, bundle.bounds().v_plus, bundle.a())) <= 1e-10);

    for (int q = 0; q < 10; ++q) {
      const Vector x = oracle::uniform_point(rng, c.dim);
      Vector gsum = Vector::Zero(x.size());
      for (std::size_t i = 0; i < dec.size(); ++i) {
        const Vector xi = restrict(x, dec.factor(i));
        const Vector g = bundle.local_acquisition_gradient(i, xi);
        for (Eigen::Index j = 0; j < xi.size(); ++j) {
          const double h = 1e-6;
          Vector a = xi, b = xi;
          a[j] += h;
          b[j] -= h;
          const double fd = (bundle.local_acquisition(i, a) - bundle.local_acquisition(i, b)) / (2 * h);
          CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5).scale(1e-2));
          gsum[static_cast<Eigen::Index>(dec.factor(i)[j])] += g[j];
        }
      }
      // Gradient of the total is the sum of the factor gradients.
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = 1e-6;
        Vector a = x, b = x;
        a[j] += h;
        b[j] -= h;
        CHECK(gsum[j] == doctest::Approx((bundle.total(a) - bundle.total(b)) / (2 * h)).epsilon(1e-5).scale(1e-2));
      }

      // Overestimation of the UCB whenever the total variance obeys the bounds.
      const auto p = model->posterior_total(x);
      if (p.variance <= bundle.bounds().v_plus) {
        const double rb = std::sqrt(bundle.beta());
        CHECK(bundle.total(x) + rb / (4 * bundle.a()) >= p.mean + rb * std::sqrt(p.variance) - 1e-9);
      }
    }

    for (std::size_t i = 0; i < dec.size(); ++i) {
      const double L = bundle.lipschitz_phi(i);
      CHECK(L >= 0.0);
      const std::size_t k = dec.factor(i).size();
      for (int pair = 0; pair < 500; ++pair) {
        const Vector x = oracle::uniform_point(rng, k), y = oracle::uniform_point(rng, k);
        CHECK(std::abs(bundle.local_acquisition(i, x) - bundle.local_acquisition(i, y)) <= L * (x - y).norm());
      }
    }
  }
}

TEST_CASE("calibration floors") {
  Dataset ds(2, 0.04);
  ds.append(Vector::Constant(2, 0.5), 1.0);
  auto model = fitted(ds, Decomposition::singletons(2), {kUnit, kUnit});
  AcquisitionConfig cfg;
  cfg.probe_points = 0;
  CHECK(AcquisitionBundle::calibrate(model, cfg, BoxDomain::unit(2), 1).bounds().v_minus_per_factor ==
        std::vector<double>{0.02, 0.02});
  cfg.v_minus = {0.5};
  CHECK(AcquisitionBundle::calibrate(model, cfg, BoxDomain::unit(2), 1).bounds().v_minus == doctest::Approx(1.0));
  cfg.v_minus = {0.5, 0.1, 0.2};
  CHECK_ERROR_CODE(AcquisitionBundle::calibrate(model, cfg, BoxDomain::unit(2), 1), ErrorCode::ShapeMismatch);

  // Tiny floors sit below the prior variance, so the probe raises v_+.
  cfg.v_minus = {1e-6};
  cfg.probe_points = 64;
  const auto b = AcquisitionBundle::calibrate(model, cfg, BoxDomain::unit(2), 1);
  CHECK(b.clamped());
  CHECK(b.bounds().v_plus == doctest::Approx(b.observed_max_variance()));
}
