#pragma once

#include <string>
#include <string_view>

#include "dumbo/domain.hpp"

namespace dumbo {

enum class KernelFamily { SquaredExponential, Matern52 };

KernelFamily parse_kernel_family(std::string_view name);
std::string to_string(KernelFamily family);

/// Stationary covariance k(x, x') = s2 * g(r^2), r^2 = sum_j (x_j - x'_j)^2 / l_j^2.
///
/// An isotropic kernel stores a single lengthscale and accepts any arity; an
/// ARD kernel stores one lengthscale per active dimension and rejects inputs of
/// another size.
class Kernel {
 public:
  Kernel(KernelFamily family, double lengthscale, double signal_variance);
  Kernel(KernelFamily family, Vector lengthscales, double signal_variance);

  KernelFamily family() const noexcept { return family_; }
  double signal_variance() const noexcept { return signal_variance_; }
  const Vector& lengthscales() const noexcept { return lengthscales_; }
  bool is_ard() const noexcept { return lengthscales_.size() > 1; }
  double min_lengthscale() const { return lengthscales_.minCoeff(); }

  double eval(const Vector& x, const Vector& x2) const;

  /// Gradient of k(x, x2) with respect to x.
  Vector gradient(const Vector& x, const Vector& x2) const;

  /// Smallest L with |k(x,x') - k(y,x')| <= L ||x - y||_2 for all x, y, x'.
  double lipschitz() const;

  /// Scaled squared distance r^2 between x and x2.
  double scaled_sq_distance(const Vector& x, const Vector& x2) const;

  /// Per-dimension inverse squared lengthscales, broadcast to `arity` entries.
  Vector inverse_sq_lengthscales(Eigen::Index arity) const;

  /// k as a function of r^2, and dk/d(r^2).
  double profile(double r2) const noexcept;
  double profile_derivative(double r2) const noexcept;

  /// dk/d(log l) for an isotropic lengthscale at scaled distance r^2.
  double log_lengthscale_derivative(double r2) const noexcept;

  Kernel with_hyperparameters(double lengthscale, double signal_variance) const;

 private:
  void check_arity(const Vector& x, const Vector& x2) const;

  KernelFamily family_;
  Vector lengthscales_;
  double signal_variance_;
};

}  // namespace dumbo
