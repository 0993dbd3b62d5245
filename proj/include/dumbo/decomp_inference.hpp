#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "dumbo/acquisition.hpp"
#include "dumbo/admm.hpp"
#include "dumbo/domain.hpp"
#include "dumbo/gp.hpp"
#include "dumbo/kernels.hpp"

namespace dumbo {

/// Kernel hyperparameters shared by every factor of the same arity.
struct KernelConfig {
  struct Entry {
    double lengthscale = 0.0;
    double signal_variance = 1.0;
  };

  KernelFamily family = KernelFamily::SquaredExponential;
  double default_lengthscale = 0.2;  // multiplied by sqrt(arity) unless fixed
  bool scale_with_arity = true;
  double default_signal_variance = 1.0;
  std::map<std::size_t, Entry> per_arity;
  /// Bumped whenever hyperparameters change; invalidates cached posteriors.
  std::uint64_t revision = 0;

  Kernel kernel_for(std::size_t arity) const;
  std::vector<Kernel> kernels_for(const Decomposition& dec) const;
  void set(std::size_t arity, double lengthscale, double signal_variance);
};

/// Moves one uniformly chosen dimension to another existing group or, when its
/// group has other members, to a new singleton group. `current` must be a
/// partition; with d = 1 it is returned unchanged.
Decomposition propose_decomposition(const Decomposition& current, std::mt19937_64& rng);

/// log q(from -> to) of the proposal above; -inf when `to` is unreachable.
double proposal_log_probability(const Decomposition& from, const Decomposition& to);

/// GP log evidence of the dataset under `candidate` plus a uniform log prior
/// (a constant, taken as 0). Zero for an empty dataset.
double decomposition_log_posterior(const Decomposition& candidate, const Dataset& dataset,
                                   const KernelConfig& kernels);

/// Metropolis-Hastings chain over partitions of {1..d}, started from the
/// fully dependent decomposition.
class DecompositionChain {
 public:
  DecompositionChain(std::size_t dim, std::uint64_t seed);

  const Decomposition& current() const noexcept { return current_; }
  std::size_t accepted() const noexcept { return accepted_; }
  std::size_t proposed() const noexcept { return proposed_; }
  double acceptance_ratio() const noexcept {
    return proposed_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposed_);
  }

  /// Cached decomposition_log_posterior; the cache is dropped when the
  /// dataset size or kernel revision changes.
  double log_posterior(const Decomposition& candidate, const Dataset& dataset, const KernelConfig& kernels);
  std::size_t cache_size() const;

  /// One Metropolis-Hastings step; returns whether the proposal was accepted.
  bool step(const Dataset& dataset, const KernelConfig& kernels);

  /// Runs k * steps_per_candidate steps, recording the current state after
  /// each block of steps_per_candidate.
  std::vector<Decomposition> sample_candidates(const Dataset& dataset, const KernelConfig& kernels, std::size_t k,
                                               std::size_t steps_per_candidate);

 private:
  Decomposition current_;
  std::mt19937_64 rng_;
  std::size_t accepted_ = 0;
  std::size_t proposed_ = 0;
  mutable std::mutex cache_mutex_;
  std::unordered_map<std::string, double> cache_;
  std::size_t cache_t_ = 0;
  std::uint64_t cache_revision_ = 0;
};

std::vector<Decomposition> mcmc_sample_candidates(DecompositionChain& chain, const Dataset& dataset,
                                                  const KernelConfig& kernels, std::size_t k,
                                                  std::size_t steps_per_candidate);

/// Mean over candidates of their summed local acquisitions, optionally
/// weighted. Each candidate carries its own calibrated bundle.
class AveragedAcquisition {
 public:
  /// Empty `weights` means the uniform mean. Weights are normalized.
  explicit AveragedAcquisition(std::vector<AcquisitionBundle> bundles, std::vector<double> weights = {});

  /// Softmax of log posteriors, for the weighted variant.
  static std::vector<double> posterior_weights(const std::vector<double>& log_posteriors);

  double value(const Vector& x) const;
  std::size_t size() const noexcept { return bundles_.size(); }
  const AcquisitionBundle& bundle(std::size_t c) const { return bundles_.at(c); }
  double weight(std::size_t c) const { return weights_.at(c); }

  /// Every (candidate, factor) pair as a factor node with its weight folded in.
  std::vector<FactorNode> factor_nodes(bool with_lipschitz = true) const;

 private:
  std::vector<AcquisitionBundle> bundles_;
  std::vector<double> weights_;
};

double averaged_acquisition(const std::vector<AcquisitionBundle>& bundles, const Vector& x);

}  // namespace dumbo
