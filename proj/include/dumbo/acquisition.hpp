#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "dumbo/domain.hpp"
#include "dumbo/gp.hpp"

namespace dumbo {

/// Floors and ceiling on the total posterior variance.
struct VarianceBounds {
  std::vector<double> v_minus_per_factor;
  double v_minus = 0.0;
  double delta_minus = 0.0;
  double v_plus = 0.0;
};

/// v_- = sum v_i, delta_-^2 = sum_{i != j} sqrt(v_i v_j), v_+ = (sqrt(v_-) + 2 delta_-)^2.
VarianceBounds variance_bounds(const std::vector<double>& v_minus_per_factor);

/// Quartic whose positive root is the least-squares slope of the linear
/// overestimator a x + 1/(4a) of sqrt(x) on [v_minus, v_plus].
double quartic_polynomial(double v_minus, double v_plus, double a);

double solve_quartic_a(double v_minus, double v_plus);
inline double solve_quartic_a(const VarianceBounds& b) { return solve_quartic_a(b.v_minus, b.v_plus); }

/// beta_t = 2 log(|D| pi^2 t^2 / (6 delta)).
double beta_schedule(std::size_t t, double delta, double cardinality);

struct AcquisitionConfig {
  double delta = 0.1;
  double effective_cardinality = 1e6;
  /// Empty: noise / n per factor. One entry: used for every factor.
  /// Otherwise one entry per factor.
  std::vector<double> v_minus;
  /// Points probed for variances above v_+; 0 disables the clamp.
  std::size_t probe_points = 256;
};

/// Calibrated local acquisitions phi_i = mu_i + a beta^{1/2} sigma_i^2 for one
/// fitted model.
class AcquisitionBundle {
 public:
  AcquisitionBundle(std::shared_ptr<const FactorModel> model, double a, double beta_t, VarianceBounds bounds,
                    std::size_t t);

  /// Builds variance bounds from `config`, raises v_+ if a probe point of
  /// `domain` exceeds it, and solves for a. beta uses t = number of
  /// observations (at least 1).
  static AcquisitionBundle calibrate(std::shared_ptr<const FactorModel> model, const AcquisitionConfig& config,
                                     const BoxDomain& domain, std::uint64_t probe_seed);

  const FactorModel& model() const noexcept { return *model_; }
  std::shared_ptr<const FactorModel> model_ptr() const noexcept { return model_; }
  double a() const noexcept { return a_; }
  double beta() const noexcept { return beta_; }
  const VarianceBounds& bounds() const noexcept { return bounds_; }
  std::size_t t() const noexcept { return t_; }
  bool clamped() const noexcept { return clamped_; }
  double observed_max_variance() const noexcept { return observed_max_variance_; }
  std::size_t num_factors() const { return model_->num_factors(); }

  double local_acquisition(std::size_t i, const Vector& x_vi) const;
  Vector local_acquisition_gradient(std::size_t i, const Vector& x_vi) const;
  /// Value and, when `gradient` is non-null, its gradient in one pass.
  double evaluate(std::size_t i, const Vector& x_vi, Vector* gradient) const;

  /// Lipschitz constant of phi_i over the whole domain.
  double lipschitz_phi(std::size_t i) const;

  /// sum_i phi_i(x_Vi).
  double total(const Vector& x) const;

  /// 2 beta^{1/2} (a sum_i sigma_i^2(x) + 1/(4a)).
  double regret_bound(const Vector& x) const;

 private:
  std::shared_ptr<const FactorModel> model_;
  double a_;
  double beta_;
  VarianceBounds bounds_;
  std::size_t t_;
  bool clamped_ = false;
  double observed_max_variance_ = 0.0;
};

}  // namespace dumbo
