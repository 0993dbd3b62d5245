#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "dumbo/kernels.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dumbo;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

double fd_rel_error(const Kernel& k, const Vector& x, const Vector& x2) {
  const Vector g = k.gradient(x, x2);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6;
    Vector p = x, m = x;
    p[j] += h;
    m[j] -= h;
    const double fd = (k.eval(p, x2) - k.eval(m, x2)) / (2 * h);
    worst = std::max(worst, std::abs(fd - g[j]) / std::max(1e-3, std::abs(fd)));
  }
  return worst;
}

}  // namespace

TEST_CASE("kernel values") {
  const Kernel se(KernelFamily::SquaredExponential, 1.0, 1.0);
  CHECK(se.eval(v1(0.3), v1(0.3)) == doctest::Approx(1.0));
  CHECK(se.eval(v1(1.0), v1(0.0)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(se.eval(v1(0.0), v1(1.0)) == se.eval(v1(1.0), v1(0.0)));

  const Kernel m(KernelFamily::Matern52, 1.0, 1.0);
  CHECK(m.eval(v1(2.0), v1(2.0)) == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vector a = oracle::uniform_point(rng, 3), b = oracle::uniform_point(rng, 3);
    CHECK(Kernel(KernelFamily::SquaredExponential, 0.4, 2.0).eval(a, b) ==
          doctest::Approx(oracle::se(a, b, 0.4, 2.0)).epsilon(1e-13));
    CHECK(Kernel(KernelFamily::Matern52, 0.7, 1.5).eval(a, b) ==
          doctest::Approx(oracle::matern52(a, b, 0.7, 1.5)).epsilon(1e-13));
  }
}

TEST_CASE("kernel arity and parameters") {
  const Kernel ard(KernelFamily::SquaredExponential, (Vector(2) << 0.5, 1.0).finished(), 1.0);
  CHECK_ERROR_CODE(ard.eval(Vector::Zero(3), Vector::Zero(3)), ErrorCode::ArityMismatch);
  CHECK_ERROR_CODE(Kernel(KernelFamily::SquaredExponential, 1.0, 1.0).eval(Vector::Zero(2), Vector::Zero(3)),
                   ErrorCode::ArityMismatch);
  CHECK_ERROR_CODE(Kernel(KernelFamily::SquaredExponential, -1.0, 1.0), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(Kernel(KernelFamily::SquaredExponential, 1.0, 0.0), ErrorCode::InvalidArgument);
  CHECK(parse_kernel_family("se") == KernelFamily::SquaredExponential);
  CHECK(parse_kernel_family("matern52") == KernelFamily::Matern52);
  CHECK_ERROR_CODE(parse_kernel_family("periodic"), ErrorCode::UnsupportedFamily);
}

TEST_CASE("kernel gradients") {
  const Kernel se(KernelFamily::SquaredExponential, 1.0, 1.0);
  CHECK(se.gradient(v1(0.4), v1(0.4)).norm() == 0.0);
  CHECK(se.gradient(v1(1.0), v1(0.0))[0] == doctest::Approx(-std::exp(-0.5)).epsilon(1e-12));

  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vector a = oracle::uniform_point(rng, 3), b = oracle::uniform_point(rng, 3);
    worst = std::max(worst, fd_rel_error(Kernel(KernelFamily::SquaredExponential, 0.6, 1.3), a, b));
    worst = std::max(worst, fd_rel_error(Kernel(KernelFamily::Matern52, 0.6, 1.3), a, b));
    worst = std::max(
        worst, fd_rel_error(Kernel(KernelFamily::SquaredExponential, (Vector(3) << 0.3, 0.6, 1.1).finished(), 0.8),
                            a, b));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("kernel lipschitz constants") {
  CHECK(Kernel(KernelFamily::SquaredExponential, 1.0, 1.0).lipschitz() ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(Kernel(KernelFamily::SquaredExponential, 2.0, 1.0).lipschitz() ==
        doctest::Approx(std::exp(-0.5) / 2.0).epsilon(1e-12));
  CHECK(Kernel(KernelFamily::SquaredExponential, 1.0, 3.0).lipschitz() ==
        doctest::Approx(3.0 * std::exp(-0.5)).epsilon(1e-12));

  // Matern-5/2 slope in r is (5/3) r (1 + sqrt5 r) e^{-sqrt5 r}; compared with a dense scan.
  const Kernel m(KernelFamily::Matern52, 1.0, 1.0);
  double scan = 0.0;
  for (int k = 1; k < 200000; ++k) {
    const double r = k * 5e-5;
    const double s = std::sqrt(5.0) * r;
    scan = std::max(scan, (5.0 / 3.0) * r * (1.0 + s) * std::exp(-s));
  }
  CHECK(m.lipschitz() == doctest::Approx(scan).epsilon(1e-8));

  std::mt19937_64 rng(21);
  for (const Kernel& k : {Kernel(KernelFamily::SquaredExponential, 0.3, 1.7), Kernel(KernelFamily::Matern52, 0.3, 1.7),
                          Kernel(KernelFamily::SquaredExponential, (Vector(2) << 0.2, 0.9).finished(), 1.0)}) {
    const double L = k.lipschitz();
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const Vector x = oracle::uniform_point(rng, 2), y = oracle::uniform_point(rng, 2),
                   z = oracle::uniform_point(rng, 2);
      const double ratio = std::abs(k.eval(x, z) - k.eval(y, z)) / (x - y).norm();
      worst = std::max(worst, ratio - L);
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("gram matrices are positive semidefinite") {
  std::mt19937_64 rng(3);
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
    const Kernel k(family, 0.3, 1.0);
    Matrix K(20, 20);
    std::vector<Vector> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(oracle::uniform_point(rng, 3));
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 20; ++c) K(r, c) = k.eval(pts[r], pts[c]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  }
}
