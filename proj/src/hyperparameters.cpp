#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dumbo/error.hpp"
#include "dumbo/gp.hpp"

namespace dumbo {

namespace {

// Squared distances with the base lengthscales of each factor kernel; the
// optimized lengthscale multiplier c rescales them by 1/c^2.
std::vector<Matrix> base_distances(const Matrix& inputs, const std::vector<Factor>& factors,
                                   const std::vector<Kernel>& kernels) {
  std::vector<Matrix> out;
  const Eigen::Index t = inputs.rows();
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const Matrix xi = select_columns(inputs, factors[i]);
    const Vector inv_l2 = kernels[i].inverse_sq_lengthscales(xi.cols());
    Matrix d2 = Matrix::Zero(t, t);
    for (Eigen::Index a = 0; a < t; ++a) {
      for (Eigen::Index b = a + 1; b < t; ++b) {
        d2(a, b) = d2(b, a) = ((xi.row(a) - xi.row(b)).array().square() * inv_l2.transpose().array()).sum();
      }
    }
    out.push_back(std::move(d2));
  }
  return out;
}

Kernel rescaled(const Kernel& base, double scale, double signal_variance) {
  return Kernel(base.family(), Vector(base.lengthscales() * scale), signal_variance);
}

struct Objective {
  const Vector& y;
  const std::vector<Matrix>& d2;
  const std::vector<Kernel>& base;
  double noise;

  // theta = [log c_1, log s2_1, ...]
  double operator()(const Vector& theta, Vector* grad) const {
    const Eigen::Index t = y.size();
    const std::size_t n = base.size();
    std::vector<Kernel> ks;
    std::vector<Matrix> grams(n), dscale(n);
    Matrix gram = Matrix::Zero(t, t);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = std::exp(theta[2 * i]);
      const Kernel k = rescaled(base[i], 1.0, std::exp(theta[2 * i + 1]));
      grams[i].resize(t, t);
      dscale[i].resize(t, t);
      for (Eigen::Index a = 0; a < t; ++a) {
        for (Eigen::Index b = a; b < t; ++b) {
          const double r2 = d2[i](a, b) / (c * c);
          grams[i](a, b) = grams[i](b, a) = k.profile(r2);
          dscale[i](a, b) = dscale[i](b, a) = k.log_lengthscale_derivative(r2);
        }
      }
      gram += grams[i];
    }
    gram.diagonal().array() += noise;
    GramSystem sys;
    try {
      sys = factorize_gram(gram, y, false);
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
    const double value = -0.5 * y.dot(sys.alpha) - 0.5 * sys.log_det -
                         0.5 * static_cast<double>(t) * std::log(2.0 * std::numbers::pi);
    if (grad) {
      const Matrix w = sys.alpha * sys.alpha.transpose() - sys.inverse;
      grad->resize(static_cast<Eigen::Index>(2 * n));
      for (std::size_t i = 0; i < n; ++i) {
        (*grad)[2 * i] = 0.5 * (w.array() * dscale[i].array()).sum();
        (*grad)[2 * i + 1] = 0.5 * (w.array() * grams[i].array()).sum();
      }
    }
    return value;
  }
};

}  // namespace

double log_evidence_with_gradient(const Matrix& inputs, const Vector& y, const std::vector<Factor>& factors,
                                  const std::vector<Kernel>& kernels, double noise_variance, Vector* gradient) {
  if (factors.size() != kernels.size()) throw Error(ErrorCode::ShapeMismatch, "one kernel per factor");
  if (inputs.rows() != y.size()) throw Error(ErrorCode::ShapeMismatch, "inputs and outputs differ in length");
  const auto d2 = base_distances(inputs, factors, kernels);
  Vector theta(static_cast<Eigen::Index>(2 * kernels.size()));
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    theta[2 * i] = 0.0;
    theta[2 * i + 1] = std::log(kernels[i].signal_variance());
  }
  return Objective{y, d2, kernels, noise_variance}(theta, gradient);
}

std::vector<Kernel> fit_hyperparameters(const Matrix& inputs, const Vector& y, const std::vector<Factor>& factors,
                                        const std::vector<Kernel>& initial, double noise_variance,
                                        const HyperFitOptions& options, std::mt19937_64& rng) {
  if (factors.size() != initial.size()) throw Error(ErrorCode::ShapeMismatch, "one kernel per factor");
  if (y.size() < 2) return initial;
  const std::size_t n = initial.size();
  // Work relative to the initial lengthscales; bounds apply to the smallest
  // lengthscale of each factor.
  const auto d2 = base_distances(inputs, factors, initial);
  const Objective objective{y, d2, initial, noise_variance};

  Vector lo(2 * n), hi(2 * n), start(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double l0 = initial[i].min_lengthscale();
    lo[2 * i] = std::log(options.min_lengthscale / l0);
    hi[2 * i] = std::log(options.max_lengthscale / l0);
    lo[2 * i + 1] = std::log(options.min_signal_variance);
    hi[2 * i + 1] = std::log(options.max_signal_variance);
    start[2 * i] = 0.0;
    start[2 * i + 1] = std::log(initial[i].signal_variance());
  }
  start = start.cwiseMax(lo).cwiseMin(hi);

  Vector best_theta = start;
  double best = objective(start, nullptr);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (std::size_t r = 0; r < std::max<std::size_t>(options.restarts, 1); ++r) {
    Vector theta = start;
    if (r > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double l0 = initial[i].min_lengthscale();
        const double l = std::exp(std::log(0.05) + u01(rng) * (std::log(1.0) - std::log(0.05)));
        theta[2 * i] = std::log(l / l0);
        theta[2 * i + 1] = std::log(0.1) + u01(rng) * (std::log(2.0) - std::log(0.1));
      }
      theta = theta.cwiseMax(lo).cwiseMin(hi);
    }
    Vector grad;
    double value = objective(theta, &grad);
    if (!std::isfinite(value)) continue;
    double step = 0.5;
    for (std::size_t it = 0; it < options.max_iterations && step > 1e-4; ++it) {
      const double norm = grad.norm();
      if (!(norm > 1e-10)) break;
      const Vector trial = (theta + step * grad / norm).cwiseMax(lo).cwiseMin(hi);
      Vector trial_grad;
      const double trial_value = objective(trial, &trial_grad);
      if (std::isfinite(trial_value) && trial_value > value) {
        theta = trial;
        value = trial_value;
        grad = trial_grad;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    if (value > best) {
      best = value;
      best_theta = theta;
    }
  }

  std::vector<Kernel> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(rescaled(initial[i], std::exp(best_theta[2 * i]), std::exp(best_theta[2 * i + 1])));
  return out;
}

}  // namespace dumbo
