#include "dumbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "dumbo/error.hpp"

namespace dumbo {

VarianceBounds variance_bounds(const std::vector<double>& v) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "variance bounds need at least one factor");
  VarianceBounds b;
  b.v_minus_per_factor = v;
  bool any_positive = false;
  double root_sum = 0.0;
  double sq_sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(ErrorCode::InvalidArgument, "variance floors must be finite and non-negative");
    any_positive = any_positive || x > 0.0;
    b.v_minus += x;
    root_sum += std::sqrt(x);
    sq_sum += x;
  }
  if (!any_positive) throw Error(ErrorCode::AllZero, "every variance floor is zero");
  // sum_{i != j} sqrt(v_i v_j) = (sum sqrt v)^2 - sum v
  const double cross = std::max(0.0, root_sum * root_sum - sq_sum);
  b.delta_minus = std::sqrt(cross);
  const double r = std::sqrt(b.v_minus) + 2.0 * b.delta_minus;
  b.v_plus = r * r;
  return b;
}

double quartic_polynomial(double v_minus, double v_plus, double a) {
  auto span = [&](double p) { return std::pow(v_plus, p) - std::pow(v_minus, p); };
  return (2.0 * span(3.0) / 3.0) * a * a * a * a - (4.0 * span(2.5) / 5.0) * a * a * a +
         (span(1.5) / 3.0) * a - span(1.0) / 8.0;
}

double solve_quartic_a(double v_minus, double v_plus) {
  if (!(v_minus >= 0.0) || !(v_plus >= v_minus) || !(v_plus > 0.0))
    throw Error(ErrorCode::InvalidArgument, fmt::format("need 0 <= v_- <= v_+, got [{}, {}]", v_minus, v_plus));
  if (v_plus == v_minus) return 1.0 / (2.0 * std::sqrt(v_plus));
  auto p = [&](double a) { return quartic_polynomial(v_minus, v_plus, a); };
  // Tangents of sqrt at the interval ends bracket the root.
  double lo = 1.0 / (2.0 * std::sqrt(v_plus));
  double hi;
  if (v_minus > 0.0) {
    hi = 1.0 / (2.0 * std::sqrt(v_minus));
  } else {
    hi = 2.0 * lo;
    while (p(hi) < 0.0) hi *= 2.0;
  }
  while (p(lo) > 0.0) lo *= 0.5;
  while (p(hi) < 0.0) hi *= 2.0;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (p(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return std::abs(p(lo)) <= std::abs(p(hi)) ? lo : hi;
}

double beta_schedule(std::size_t t, double delta, double cardinality) {
  if (!(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::InvalidDelta, fmt::format("delta must lie in (0, 1), got {}", delta));
  if (t < 1) throw Error(ErrorCode::InvalidArgument, "beta schedule starts at t = 1");
  if (!(cardinality >= 1.0)) throw Error(ErrorCode::InvalidArgument, "cardinality must be at least 1");
  const double td = static_cast<double>(t);
  return 2.0 * std::log(cardinality * std::numbers::pi * std::numbers::pi * td * td / (6.0 * delta));
}

AcquisitionBundle::AcquisitionBundle(std::shared_ptr<const FactorModel> model, double a, double beta_t,
                                     VarianceBounds bounds, std::size_t t)
    : model_(std::move(model)), a_(a), beta_(beta_t), bounds_(std::move(bounds)), t_(t) {
  if (!model_) throw Error(ErrorCode::InvalidArgument, "acquisition needs a model");
  if (!(a_ > 0.0) || !(beta_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "a and beta must be positive");
}

AcquisitionBundle AcquisitionBundle::calibrate(std::shared_ptr<const FactorModel> model,
                                               const AcquisitionConfig& config, const BoxDomain& domain,
                                               std::uint64_t probe_seed) {
  const std::size_t n = model->num_factors();
  std::vector<double> floors;
  if (config.v_minus.empty()) {
    floors.assign(n, model->noise_variance() / static_cast<double>(n));
  } else if (config.v_minus.size() == 1) {
    floors.assign(n, config.v_minus.front());
  } else if (config.v_minus.size() == n) {
    floors = config.v_minus;
  } else {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("{} variance floors for {} factors", config.v_minus.size(), n));
  }
  VarianceBounds bounds = variance_bounds(floors);

  bool clamped = false;
  double observed = 0.0;
  if (config.probe_points > 0) {
    std::mt19937_64 rng(probe_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(domain.dim());
    Vector u(d);
    for (std::size_t p = 0; p < config.probe_points; ++p) {
      for (Eigen::Index j = 0; j < d; ++j) u[j] = u01(rng);
      observed = std::max(observed, model->posterior_total(domain.from_unit(u)).variance);
    }
    if (observed > bounds.v_plus) {
      bounds.v_plus = observed;
      clamped = true;
    }
  }
  const std::size_t t = model->num_observations();
  const double beta = beta_schedule(std::max<std::size_t>(1, t), config.delta, config.effective_cardinality);
  const double a = solve_quartic_a(bounds);
  AcquisitionBundle bundle(std::move(model), a, beta, std::move(bounds), t);
  bundle.clamped_ = clamped;
  bundle.observed_max_variance_ = observed;
  return bundle;
}

double AcquisitionBundle::evaluate(std::size_t i, const Vector& x_vi, Vector* gradient) const {
  if (i >= model_->num_factors())
    throw Error(ErrorCode::IndexOutOfRange, fmt::format("factor {} of {}", i + 1, model_->num_factors()));
  if (static_cast<std::size_t>(x_vi.size()) != model_->decomposition().factor(i).size())
    throw Error(ErrorCode::ArityMismatch, "acquisition input has the wrong arity");
  const double c = a_ * std::sqrt(beta_);
  const auto p = model_->predict_factor(i, x_vi, gradient != nullptr);
  if (gradient) *gradient = p.mean_gradient + c * p.variance_gradient;
  return p.mean + c * p.variance;
}

double AcquisitionBundle::local_acquisition(std::size_t i, const Vector& x_vi) const {
  return evaluate(i, x_vi, nullptr);
}

Vector AcquisitionBundle::local_acquisition_gradient(std::size_t i, const Vector& x_vi) const {
  Vector g;
  evaluate(i, x_vi, &g);
  return g;
}

double AcquisitionBundle::lipschitz_phi(std::size_t i) const {
  if (i >= model_->num_factors()) throw Error(ErrorCode::IndexOutOfRange, "factor index out of range");
  const std::size_t t = model_->num_observations();
  if (t == 0) return 0.0;
  const Kernel& k = model_->kernel(i);
  const auto [y_lo, y_hi] = model_->output_range(i);
  // Entries of y - 2 a beta^{1/2} k_x with y in [y_lo, y_hi] and k in [0, s2].
  const double shift = 2.0 * a_ * std::sqrt(beta_) * k.signal_variance();
  const double m = std::max({std::abs(y_hi), std::abs(y_lo), std::abs(y_hi - shift), std::abs(y_lo - shift)});
  return static_cast<double>(t) * k.lipschitz() * model_->inverse_spectral_radius(i) * m;
}

double AcquisitionBundle::total(const Vector& x) const {
  const auto& dec = model_->decomposition();
  double s = 0.0;
  for (std::size_t i = 0; i < dec.size(); ++i) s += local_acquisition(i, restrict(x, dec.factor(i)));
  return s;
}

double AcquisitionBundle::regret_bound(const Vector& x) const {
  const double var = model_->posterior_total(x).variance;
  return 2.0 * std::sqrt(beta_) * (a_ * var + 1.0 / (4.0 * a_));
}

}  // namespace dumbo
