#pragma once

#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "dumbo/domain.hpp"
#include "dumbo/kernels.hpp"

namespace dumbo {

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct FactorPrediction {
  double mean = 0.0;
  double variance = 0.0;
  Vector mean_gradient;      // empty unless requested
  Vector variance_gradient;  // empty unless requested
};

/// Factorized regularized Gram matrix K + (noise + jitter) I and the solves
/// every posterior query needs.
struct GramSystem {
  Eigen::LLT<Matrix> llt;
  Matrix inverse;
  Vector alpha;  // (K + noise I)^{-1} y
  double jitter = 0.0;
  double min_eigenvalue = 0.0;  // NaN unless the spectrum was requested
  double log_det = 0.0;
};

/// Cholesky with the jitter ladder 1e-10, 1e-9, ..., 1e-4 times the mean
/// diagonal; throws SingularGram when every rung fails.
GramSystem factorize_gram(const Matrix& gram, const Vector& y, bool compute_spectrum);

struct FitOptions {
  bool compute_spectrum = true;
};

/// Posterior over the factor functions of an additive GP. Implemented by the
/// joint-output model (one shared Gram matrix) and the decomposed-output model
/// (one Gram matrix per factor).
class FactorModel {
 public:
  virtual ~FactorModel() = default;

  virtual const Decomposition& decomposition() const = 0;
  virtual std::size_t num_observations() const = 0;
  virtual const Kernel& kernel(std::size_t i) const = 0;
  virtual double noise_variance() const = 0;

  /// Posterior mean/variance of factor i at x restricted to V_i, optionally
  /// with gradients with respect to x_Vi. Does not validate arguments.
  virtual FactorPrediction predict_factor(std::size_t i, const Vector& x_vi, bool with_gradient) const = 0;

  /// Spectral radius of the inverse Gram matrix conditioning factor i.
  virtual double inverse_spectral_radius(std::size_t i) const = 0;

  /// (min, max) of the outputs conditioning factor i.
  virtual std::pair<double, double> output_range(std::size_t i) const = 0;

  std::size_t num_factors() const { return decomposition().size(); }

  /// Checked versions of predict_factor / sum over factors.
  Prediction posterior_factor(std::size_t i, const Vector& x_vi) const;
  Prediction posterior_total(const Vector& x) const;
};

/// Joint-output model: y observed only as the sum of the factors.
/// K_jk = sum_i k_i(x^j_Vi, x^k_Vi) + noise * delta_jk.
class JointGPModel final : public FactorModel {
 public:
  static JointGPModel fit(const Dataset& dataset, const Decomposition& dec, std::vector<Kernel> kernels,
                          double noise_variance, FitOptions options = {});

  const Decomposition& decomposition() const override { return dec_; }
  std::size_t num_observations() const override { return static_cast<std::size_t>(outputs_.size()); }
  const Kernel& kernel(std::size_t i) const override { return kernels_.at(i); }
  double noise_variance() const override { return noise_; }
  FactorPrediction predict_factor(std::size_t i, const Vector& x_vi, bool with_gradient) const override;
  double inverse_spectral_radius(std::size_t i) const override;
  std::pair<double, double> output_range(std::size_t i) const override;

  double log_marginal_likelihood() const;
  double min_eigenvalue() const { return system_.min_eigenvalue; }
  const GramSystem& gram_system() const noexcept { return system_; }
  const Matrix& gram() const noexcept { return gram_; }
  const Vector& outputs() const noexcept { return outputs_; }

 private:
  JointGPModel(Decomposition dec) : dec_(std::move(dec)) {}

  Decomposition dec_;
  std::vector<Kernel> kernels_;
  std::vector<Matrix> factor_inputs_;  // t x |V_i|
  Vector outputs_;
  double noise_ = 0.0;
  Matrix gram_;  // regularized, including noise and jitter
  GramSystem system_;
};

/// Decomposed-output model: factor i is conditioned on its own column of Y.
class DecomposedGPModel final : public FactorModel {
 public:
  static DecomposedGPModel fit(const Dataset& dataset, const Decomposition& dec, std::vector<Kernel> kernels,
                               double noise_variance, FitOptions options = {});

  const Decomposition& decomposition() const override { return dec_; }
  std::size_t num_observations() const override { return t_; }
  const Kernel& kernel(std::size_t i) const override { return kernels_.at(i); }
  double noise_variance() const override { return noise_; }
  FactorPrediction predict_factor(std::size_t i, const Vector& x_vi, bool with_gradient) const override;
  double inverse_spectral_radius(std::size_t i) const override;
  std::pair<double, double> output_range(std::size_t i) const override;

  const GramSystem& gram_system(std::size_t i) const { return systems_.at(i); }

 private:
  DecomposedGPModel(Decomposition dec) : dec_(std::move(dec)) {}

  Decomposition dec_;
  std::vector<Kernel> kernels_;
  std::vector<Matrix> factor_inputs_;
  std::vector<Vector> factor_outputs_;
  std::vector<GramSystem> systems_;
  std::size_t t_ = 0;
  double noise_ = 0.0;
};

/// Gram matrix of one kernel over the rows of `inputs` (no noise).
Matrix kernel_matrix(const Kernel& kernel, const Matrix& inputs);

/// Columns `vars` of `inputs`.
Matrix select_columns(const Matrix& inputs, const Factor& vars);

// Hyperparameter fitting ----------------------------------------------------

struct HyperFitOptions {
  std::size_t restarts = 3;
  std::size_t max_iterations = 60;
  double min_lengthscale = 1e-2;
  double max_lengthscale = 20.0;
  double min_signal_variance = 1e-3;
  double max_signal_variance = 1e2;
};

/// Log evidence of y under sum_i kernels[i] over `factors` plus noise, and its
/// gradient with respect to (log lengthscale scale, log signal variance) of
/// each factor, laid out [s_1, v_1, s_2, v_2, ...]. Returns -inf when the Gram
/// matrix cannot be factorized.
double log_evidence_with_gradient(const Matrix& inputs, const Vector& y, const std::vector<Factor>& factors,
                                  const std::vector<Kernel>& kernels, double noise_variance, Vector* gradient);

/// Multi-start gradient ascent of the log evidence over per-factor lengthscale
/// scale and signal variance. The first start is `initial`; the remaining
/// starts are drawn from `rng`.
std::vector<Kernel> fit_hyperparameters(const Matrix& inputs, const Vector& y, const std::vector<Factor>& factors,
                                        const std::vector<Kernel>& initial, double noise_variance,
                                        const HyperFitOptions& options, std::mt19937_64& rng);

}  // namespace dumbo
