#include "dumbo/kernels.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dumbo/error.hpp"

namespace dumbo {

namespace {

constexpr double kSqrt5 = 2.23606797749978969640917;

// Maximizes a unimodal h on [lo, hi].
template <typename F>
double golden_section_max(F&& h, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double hc = h(c), hd = h(d);
  while (b - a > tol) {
    if (hc > hd) {
      b = d;
      d = c;
      hd = hc;
      c = b - inv_phi * (b - a);
      hc = h(c);
    } else {
      a = c;
      c = d;
      hc = hd;
      d = a + inv_phi * (b - a);
      hd = h(d);
    }
  }
  return h(0.5 * (a + b));
}

}  // namespace

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "squared_exponential" || name == "se" || name == "rbf") return KernelFamily::SquaredExponential;
  if (name == "matern52" || name == "matern-5/2" || name == "matern_5_2") return KernelFamily::Matern52;
  throw Error(ErrorCode::UnsupportedFamily, fmt::format("unknown kernel family '{}'", name));
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::SquaredExponential: return "squared_exponential";
    case KernelFamily::Matern52: return "matern52";
  }
  return "unknown";
}

Kernel::Kernel(KernelFamily family, double lengthscale, double signal_variance)
    : Kernel(family, Vector::Constant(1, lengthscale), signal_variance) {}

Kernel::Kernel(KernelFamily family, Vector lengthscales, double signal_variance)
    : family_(family), lengthscales_(std::move(lengthscales)), signal_variance_(signal_variance) {
  if (lengthscales_.size() == 0) throw Error(ErrorCode::InvalidArgument, "kernel needs a lengthscale");
  if (!(lengthscales_.array() > 0.0).all())
    throw Error(ErrorCode::InvalidArgument, "kernel lengthscales must be positive");
  if (!(signal_variance_ > 0.0))
    throw Error(ErrorCode::InvalidArgument, "kernel signal variance must be positive");
}

void Kernel::check_arity(const Vector& x, const Vector& x2) const {
  if (x.size() != x2.size() || (is_ard() && x.size() != lengthscales_.size()))
    throw Error(ErrorCode::ArityMismatch,
                fmt::format("kernel got points of size {} and {}", x.size(), x2.size()));
}

Vector Kernel::inverse_sq_lengthscales(Eigen::Index arity) const {
  if (is_ard()) {
    if (arity != lengthscales_.size())
      throw Error(ErrorCode::ArityMismatch, "ARD kernel used with the wrong number of dimensions");
    return lengthscales_.array().square().inverse().matrix();
  }
  return Vector::Constant(arity, 1.0 / (lengthscales_[0] * lengthscales_[0]));
}

double Kernel::scaled_sq_distance(const Vector& x, const Vector& x2) const {
  check_arity(x, x2);
  return ((x - x2).array().square() * inverse_sq_lengthscales(x.size()).array()).sum();
}

double Kernel::profile(double r2) const noexcept {
  switch (family_) {
    case KernelFamily::SquaredExponential:
      return signal_variance_ * std::exp(-0.5 * r2);
    case KernelFamily::Matern52: {
      const double s = kSqrt5 * std::sqrt(r2);
      return signal_variance_ * (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
  }
  return 0.0;
}

double Kernel::profile_derivative(double r2) const noexcept {
  switch (family_) {
    case KernelFamily::SquaredExponential:
      return -0.5 * signal_variance_ * std::exp(-0.5 * r2);
    case KernelFamily::Matern52: {
      const double s = kSqrt5 * std::sqrt(r2);
      return -signal_variance_ * (5.0 / 6.0) * (1.0 + s) * std::exp(-s);
    }
  }
  return 0.0;
}

double Kernel::log_lengthscale_derivative(double r2) const noexcept {
  return -2.0 * r2 * profile_derivative(r2);
}

double Kernel::eval(const Vector& x, const Vector& x2) const { return profile(scaled_sq_distance(x, x2)); }

Vector Kernel::gradient(const Vector& x, const Vector& x2) const {
  const double r2 = scaled_sq_distance(x, x2);
  return 2.0 * profile_derivative(r2) *
         (x - x2).cwiseProduct(inverse_sq_lengthscales(x.size()));
}

double Kernel::lipschitz() const {
  // |dk/dr| maximized over the scaled radius, then divided by the smallest
  // lengthscale to go back to input units.
  double peak = 0.0;
  switch (family_) {
    case KernelFamily::SquaredExponential:
      peak = signal_variance_ * std::exp(-0.5);
      break;
    case KernelFamily::Matern52: {
      auto slope = [this](double r) { return -2.0 * r * profile_derivative(r * r); };
      peak = golden_section_max(slope, 0.0, 10.0, 1e-12);
      break;
    }
  }
  return peak / min_lengthscale();
}

Kernel Kernel::with_hyperparameters(double lengthscale, double signal_variance) const {
  return Kernel(family_, lengthscale, signal_variance);
}

}  // namespace dumbo
