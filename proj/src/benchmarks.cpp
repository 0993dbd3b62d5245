#include "dumbo/benchmarks.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "dumbo/error.hpp"

namespace dumbo::benchmarks {

namespace {

void check(const BoxDomain& box, const Vector& x, const char* name) {
  if (static_cast<std::size_t>(x.size()) != box.dim())
    throw Error(ErrorCode::ShapeMismatch, fmt::format("{} expects {} inputs, got {}", name, box.dim(), x.size()));
  if (!box.contains(x, 1e-12)) throw Error(ErrorCode::OutOfDomain, fmt::format("point outside the {} box", name));
}

BoxDomain shc_box() {
  Vector lo(2), hi(2);
  lo << -3.0, -2.0;
  hi << 3.0, 2.0;
  return BoxDomain(lo, hi);
}

constexpr std::array<double, 4> kAlpha{1.0, 1.2, 3.0, 3.2};
constexpr double kA[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                             {0.05, 10, 17, 0.1, 8, 14},
                             {3, 3.5, 1.7, 10, 17, 8},
                             {17, 8, 0.05, 10, 0.1, 14}};
constexpr double kP[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                             {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                             {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                             {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};

std::vector<Factor> blocks(std::size_t count, std::size_t width) {
  std::vector<Factor> fs(count);
  for (std::size_t b = 0; b < count; ++b)
    for (std::size_t k = 0; k < width; ++k) fs[b].push_back(b * width + k);
  return fs;
}

double powell_block(double a, double b, double c, double d) {
  const double t1 = a + 10.0 * b;
  const double t2 = c - d;
  const double t3 = b - 2.0 * c;
  const double t4 = a - d;
  return -(t1 * t1 + 5.0 * t2 * t2 + t3 * t3 * t3 * t3 + 10.0 * t4 * t4 * t4 * t4);
}

}  // namespace

Vector shc_factors(const Vector& x) {
  check(shc_box(), x, "shc");
  const double a = x[0], b = x[1];
  Vector out(3);
  out << (-4.0 + 2.1 * a * a - a * a * a * a / 3.0) * a * a, -a * b, (4.0 - 4.0 * b * b) * b * b;
  return out;
}

double eval_shc(const Vector& x) { return shc_factors(x).sum(); }

Vector hartmann6_terms(const Vector& x) {
  check(BoxDomain::unit(6), x, "hartmann6");
  Vector out(4);
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int j = 0; j < 6; ++j) s += kA[i][j] * (x[j] - kP[i][j]) * (x[j] - kP[i][j]);
    out[i] = kAlpha[static_cast<std::size_t>(i)] * std::exp(-s);
  }
  return out;
}

double eval_hartmann6(const Vector& x) { return hartmann6_terms(x).sum(); }

Vector powell24_factors(const Vector& x) {
  check(BoxDomain::uniform(24, -4.0, 5.0), x, "powell24");
  Vector out(6);
  for (int b = 0; b < 6; ++b) out[b] = powell_block(x[4 * b], x[4 * b + 1], x[4 * b + 2], x[4 * b + 3]);
  return out;
}

double eval_powell24(const Vector& x) { return powell24_factors(x).sum(); }

Vector rastrigin100_factors(const Vector& x) {
  check(BoxDomain::uniform(100, -5.12, 5.12), x, "rastrigin100");
  Vector out(20);
  for (int b = 0; b < 20; ++b) {
    double s = 0.0;
    for (int k = 0; k < 5; ++k) {
      const double v = x[5 * b + k];
      s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
    }
    out[b] = -50.0 - s;
  }
  return out;
}

double eval_rastrigin100(const Vector& x) { return rastrigin100_factors(x).sum(); }

ObjectiveSpec shc() {
  Vector opt(2);
  opt << 0.08984201239867863, -0.7126564078789285;
  return ObjectiveSpec{.name = "shc",
                       .domain = shc_box(),
                       .decomposition = Decomposition({{0}, {0, 1}, {1}}, 2),
                       .optimum = kShcOptimum,
                       .optimizer = opt,
                       .evaluate = eval_shc,
                       .evaluate_factors = shc_factors};
}

ObjectiveSpec hartmann6() {
  Vector opt(6);
  opt << 0.20168950725118004, 0.15001068938946577, 0.47687397427549577, 0.27533242839179606,
      0.31165161679481873, 0.6573005288140765;
  return ObjectiveSpec{.name = "hartmann6",
                       .domain = BoxDomain::unit(6),
                       .decomposition = Decomposition::fully_dependent(6),
                       .optimum = kHartmann6Optimum,
                       .optimizer = opt,
                       .evaluate = eval_hartmann6,
                       .evaluate_factors = [](const Vector& x) { return Vector::Constant(1, eval_hartmann6(x)); }};
}

ObjectiveSpec powell24() {
  return ObjectiveSpec{.name = "powell24",
                       .domain = BoxDomain::uniform(24, -4.0, 5.0),
                       .decomposition = Decomposition(blocks(6, 4), 24),
                       .optimum = 0.0,
                       .optimizer = Vector::Zero(24),
                       .evaluate = eval_powell24,
                       .evaluate_factors = powell24_factors};
}

ObjectiveSpec rastrigin100() {
  return ObjectiveSpec{.name = "rastrigin100",
                       .domain = BoxDomain::uniform(100, -5.12, 5.12),
                       .decomposition = Decomposition(blocks(20, 5), 100),
                       .optimum = 0.0,
                       .optimizer = Vector::Zero(100),
                       .evaluate = eval_rastrigin100,
                       .evaluate_factors = rastrigin100_factors};
}

}  // namespace dumbo::benchmarks
