#include "dumbo/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "dumbo/error.hpp"

namespace dumbo {

namespace {

void check_kernels(const Decomposition& dec, const std::vector<Kernel>& kernels) {
  if (kernels.size() != dec.size())
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("{} kernels for {} factors", kernels.size(), dec.size()));
  for (std::size_t i = 0; i < dec.size(); ++i) {
    if (kernels[i].is_ard() && static_cast<std::size_t>(kernels[i].lengthscales().size()) != dec.factor(i).size())
      throw Error(ErrorCode::ArityMismatch, fmt::format("ARD kernel {} does not match its factor", i + 1));
  }
}

// Posterior of one factor given its training inputs, the inverse Gram matrix
// conditioning it and the solved weights.
FactorPrediction predict_with(const Kernel& kernel, const Matrix& train, const Matrix& inverse,
                              const Vector& alpha, const Vector& x, bool with_gradient) {
  FactorPrediction out;
  const double prior = kernel.signal_variance();
  const Eigen::Index t = train.rows();
  if (t == 0) {
    out.variance = prior;
    if (with_gradient) {
      out.mean_gradient = Vector::Zero(x.size());
      out.variance_gradient = Vector::Zero(x.size());
    }
    return out;
  }
  const Vector inv_l2 = kernel.inverse_sq_lengthscales(x.size());
  const Matrix diff = train.rowwise() - x.transpose();  // x^j - x
  const Matrix scaled = diff.array().rowwise() * inv_l2.transpose().array();
  const Vector r2 = (diff.array() * scaled.array()).rowwise().sum();
  Vector k(t), dk(t);
  for (Eigen::Index j = 0; j < t; ++j) {
    k[j] = kernel.profile(r2[j]);
    dk[j] = kernel.profile_derivative(r2[j]);
  }
  const Vector inv_k = inverse * k;
  out.mean = k.dot(alpha);
  out.variance = std::max(0.0, prior - k.dot(inv_k));
  if (with_gradient) {
    // d k_j / dx = -2 g'(r2_j) (x^j - x) / l^2
    out.mean_gradient = -2.0 * scaled.transpose() * alpha.cwiseProduct(dk);
    out.variance_gradient = 4.0 * scaled.transpose() * inv_k.cwiseProduct(dk);
  }
  return out;
}

}  // namespace

Matrix select_columns(const Matrix& inputs, const Factor& vars) {
  Matrix out(inputs.rows(), static_cast<Eigen::Index>(vars.size()));
  for (std::size_t k = 0; k < vars.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = inputs.col(static_cast<Eigen::Index>(vars[k]));
  return out;
}

Matrix kernel_matrix(const Kernel& kernel, const Matrix& inputs) {
  const Eigen::Index t = inputs.rows();
  Matrix gram(t, t);
  const Vector inv_l2 = kernel.inverse_sq_lengthscales(inputs.cols());
  for (Eigen::Index a = 0; a < t; ++a) {
    gram(a, a) = kernel.profile(0.0);
    for (Eigen::Index b = a + 1; b < t; ++b) {
      const double r2 = ((inputs.row(a) - inputs.row(b)).array().square() * inv_l2.transpose().array()).sum();
      gram(a, b) = gram(b, a) = kernel.profile(r2);
    }
  }
  return gram;
}

GramSystem factorize_gram(const Matrix& gram, const Vector& y, bool compute_spectrum) {
  GramSystem sys;
  const Eigen::Index t = gram.rows();
  if (t == 0) {
    sys.inverse = Matrix(0, 0);
    sys.alpha = Vector(0);
    sys.min_eigenvalue = std::numeric_limits<double>::infinity();
    return sys;
  }
  const double mean_diag = gram.diagonal().mean();
  Matrix reg = gram;
  sys.llt.compute(reg);
  double jitter = 0.0;
  if (sys.llt.info() != Eigen::Success) {
    jitter = 1e-10 * mean_diag;
    while (true) {
      reg = gram;
      reg.diagonal().array() += jitter;
      sys.llt.compute(reg);
      if (sys.llt.info() == Eigen::Success) break;
      jitter *= 10.0;
      if (jitter > 1e-4 * mean_diag * (1.0 + 1e-9))
        throw Error(ErrorCode::SingularGram, fmt::format("Gram matrix of size {} is not positive definite", t));
    }
  }
  sys.jitter = jitter;
  sys.alpha = sys.llt.solve(y);
  sys.inverse = sys.llt.solve(Matrix::Identity(t, t));
  sys.log_det = 2.0 * sys.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  if (compute_spectrum) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(reg, Eigen::EigenvaluesOnly);
    sys.min_eigenvalue = eig.eigenvalues().minCoeff();
  } else {
    sys.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  }
  return sys;
}

Prediction FactorModel::posterior_factor(std::size_t i, const Vector& x_vi) const {
  if (i >= num_factors())
    throw Error(ErrorCode::IndexOutOfRange, fmt::format("factor {} of {}", i + 1, num_factors()));
  if (static_cast<std::size_t>(x_vi.size()) != decomposition().factor(i).size())
    throw Error(ErrorCode::ArityMismatch,
                fmt::format("factor {} expects {} inputs, got {}", i + 1, decomposition().factor(i).size(), x_vi.size()));
  const auto p = predict_factor(i, x_vi, false);
  return {p.mean, p.variance};
}

Prediction FactorModel::posterior_total(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != decomposition().dim())
    throw Error(ErrorCode::ArityMismatch, "query has the wrong dimension");
  Prediction total;
  for (std::size_t i = 0; i < num_factors(); ++i) {
    const auto p = predict_factor(i, restrict(x, decomposition().factor(i)), false);
    total.mean += p.mean;
    total.variance += p.variance;
  }
  return total;
}

// Joint-output model ---------------------------------------------------------

JointGPModel JointGPModel::fit(const Dataset& dataset, const Decomposition& dec, std::vector<Kernel> kernels,
                               double noise_variance, FitOptions options) {
  check_kernels(dec, kernels);
  if (dataset.dim() != dec.dim())
    throw Error(ErrorCode::ShapeMismatch, "dataset and decomposition disagree on d");
  if (noise_variance < 0.0) throw Error(ErrorCode::InvalidArgument, "noise variance must be non-negative");
  JointGPModel model(dec);
  model.kernels_ = std::move(kernels);
  model.noise_ = noise_variance;
  model.outputs_ = dataset.outputs;
  const auto t = static_cast<Eigen::Index>(dataset.size());
  Matrix gram = Matrix::Zero(t, t);
  for (std::size_t i = 0; i < dec.size(); ++i) {
    model.factor_inputs_.push_back(select_columns(dataset.inputs, dec.factor(i)));
    gram += kernel_matrix(model.kernels_[i], model.factor_inputs_.back());
  }
  gram.diagonal().array() += noise_variance;
  model.system_ = factorize_gram(gram, model.outputs_, options.compute_spectrum);
  gram.diagonal().array() += model.system_.jitter;
  model.gram_ = std::move(gram);
  return model;
}

FactorPrediction JointGPModel::predict_factor(std::size_t i, const Vector& x_vi, bool with_gradient) const {
  return predict_with(kernels_[i], factor_inputs_[i], system_.inverse, system_.alpha, x_vi, with_gradient);
}

double JointGPModel::inverse_spectral_radius(std::size_t) const {
  if (std::isnan(system_.min_eigenvalue))
    throw Error(ErrorCode::InvalidArgument, "model was fitted without its spectrum");
  return outputs_.size() == 0 ? 0.0 : 1.0 / system_.min_eigenvalue;
}

std::pair<double, double> JointGPModel::output_range(std::size_t) const {
  if (outputs_.size() == 0) return {0.0, 0.0};
  return {outputs_.minCoeff(), outputs_.maxCoeff()};
}

double JointGPModel::log_marginal_likelihood() const {
  const auto t = outputs_.size();
  if (t == 0) return 0.0;
  return -0.5 * outputs_.dot(system_.alpha) - 0.5 * system_.log_det -
         0.5 * static_cast<double>(t) * std::log(2.0 * std::numbers::pi);
}

// Decomposed-output model ----------------------------------------------------

DecomposedGPModel DecomposedGPModel::fit(const Dataset& dataset, const Decomposition& dec,
                                         std::vector<Kernel> kernels, double noise_variance, FitOptions options) {
  check_kernels(dec, kernels);
  if (dataset.dim() != dec.dim())
    throw Error(ErrorCode::ShapeMismatch, "dataset and decomposition disagree on d");
  if (noise_variance < 0.0) throw Error(ErrorCode::InvalidArgument, "noise variance must be non-negative");
  const auto t = static_cast<Eigen::Index>(dataset.size());
  Matrix Y;
  if (dataset.factor_outputs) {
    Y = *dataset.factor_outputs;
  } else if (t == 0) {
    Y = Matrix::Zero(0, static_cast<Eigen::Index>(dec.size()));
  } else {
    throw Error(ErrorCode::MissingFactorOutputs, "decomposed model needs factor outputs");
  }
  if (Y.rows() != t || Y.cols() != static_cast<Eigen::Index>(dec.size()))
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("factor outputs are {}x{}, expected {}x{}", Y.rows(), Y.cols(), t, dec.size()));
  for (Eigen::Index r = 0; r < t; ++r) {
    if (std::abs(Y.row(r).sum() - dataset.outputs[r]) > 1e-6 * std::max(1.0, std::abs(dataset.outputs[r])))
      throw Error(ErrorCode::RowSumViolation, fmt::format("row {} of the factor outputs", r + 1));
  }
  DecomposedGPModel model(dec);
  model.kernels_ = std::move(kernels);
  model.noise_ = noise_variance;
  model.t_ = static_cast<std::size_t>(t);
  for (std::size_t i = 0; i < dec.size(); ++i) {
    model.factor_inputs_.push_back(select_columns(dataset.inputs, dec.factor(i)));
    model.factor_outputs_.push_back(Y.col(static_cast<Eigen::Index>(i)));
    Matrix gram = kernel_matrix(model.kernels_[i], model.factor_inputs_.back());
    gram.diagonal().array() += noise_variance;
    model.systems_.push_back(factorize_gram(gram, model.factor_outputs_.back(), options.compute_spectrum));
  }
  return model;
}

FactorPrediction DecomposedGPModel::predict_factor(std::size_t i, const Vector& x_vi, bool with_gradient) const {
  return predict_with(kernels_[i], factor_inputs_[i], systems_[i].inverse, systems_[i].alpha, x_vi, with_gradient);
}

double DecomposedGPModel::inverse_spectral_radius(std::size_t i) const {
  const double m = systems_.at(i).min_eigenvalue;
  if (std::isnan(m)) throw Error(ErrorCode::InvalidArgument, "model was fitted without its spectrum");
  return t_ == 0 ? 0.0 : 1.0 / m;
}

std::pair<double, double> DecomposedGPModel::output_range(std::size_t i) const {
  const Vector& y = factor_outputs_.at(i);
  if (y.size() == 0) return {0.0, 0.0};
  return {y.minCoeff(), y.maxCoeff()};
}

}  // namespace dumbo
