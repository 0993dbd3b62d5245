#include "dumbo/decomp_inference.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "dumbo/error.hpp"

namespace dumbo {

namespace {

// Group label of every dimension; the decomposition must be a partition.
std::vector<std::size_t> labels_of(const Decomposition& dec) {
  if (!dec.is_partition()) throw Error(ErrorCode::InvalidArgument, "MCMC works on partitions only");
  std::vector<std::size_t> label(dec.dim());
  for (std::size_t g = 0; g < dec.size(); ++g)
    for (std::size_t j : dec.factor(g)) label[j] = g;
  return label;
}

Decomposition from_labels(const std::vector<std::size_t>& label, std::size_t groups) {
  std::vector<Factor> fs(groups);
  for (std::size_t j = 0; j < label.size(); ++j) fs[label[j]].push_back(j);
  std::erase_if(fs, [](const Factor& f) { return f.empty(); });
  return Decomposition(std::move(fs), label.size());
}

// Labels by order of first appearance, ignoring dimension `skip`.
std::vector<std::size_t> canonical_without(const std::vector<std::size_t>& label, std::size_t skip) {
  std::vector<std::size_t> remap(label.size() + 1, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> out;
  out.reserve(label.size());
  std::size_t next = 0;
  for (std::size_t j = 0; j < label.size(); ++j) {
    if (j == skip) continue;
    auto& r = remap[label[j]];
    if (r == std::numeric_limits<std::size_t>::max()) r = next++;
    out.push_back(r);
  }
  return out;
}

std::size_t move_options(const Decomposition& dec, const std::vector<std::size_t>& label, std::size_t j) {
  const std::size_t own = dec.factor(label[j]).size();
  return (dec.size() - 1) + (own > 1 ? 1 : 0);
}

}  // namespace

Kernel KernelConfig::kernel_for(std::size_t arity) const {
  auto it = per_arity.find(arity);
  if (it != per_arity.end()) return Kernel(family, it->second.lengthscale, it->second.signal_variance);
  const double root = scale_with_arity ? std::sqrt(static_cast<double>(arity)) : 1.0;
  return Kernel(family, default_lengthscale * root, default_signal_variance);
}

std::vector<Kernel> KernelConfig::kernels_for(const Decomposition& dec) const {
  std::vector<Kernel> ks;
  for (const auto& f : dec.factors()) ks.push_back(kernel_for(f.size()));
  return ks;
}

void KernelConfig::set(std::size_t arity, double lengthscale, double signal_variance) {
  per_arity[arity] = Entry{lengthscale, signal_variance};
  ++revision;
}

Decomposition propose_decomposition(const Decomposition& current, std::mt19937_64& rng) {
  const std::size_t d = current.dim();
  if (d == 1) return current;
  auto label = labels_of(current);
  const std::size_t groups = current.size();
  std::uniform_int_distribution<std::size_t> pick_dim(0, d - 1);
  const std::size_t j = pick_dim(rng);
  const std::size_t options = move_options(current, label, j);
  std::uniform_int_distribution<std::size_t> pick(0, options - 1);
  std::size_t choice = pick(rng);
  // Options are the other groups in order, then the new singleton.
  if (choice < groups - 1) {
    label[j] = choice >= label[j] ? choice + 1 : choice;
    return from_labels(label, groups);
  }
  label[j] = groups;
  return from_labels(label, groups + 1);
}

double proposal_log_probability(const Decomposition& from, const Decomposition& to) {
  if (from.dim() != to.dim()) throw Error(ErrorCode::ShapeMismatch, "decompositions of different dimension");
  const std::size_t d = from.dim();
  if (d == 1) return 0.0;
  if (from == to) return -std::numeric_limits<double>::infinity();
  const auto la = labels_of(from);
  const auto lb = labels_of(to);
  double q = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    if (canonical_without(la, j) == canonical_without(lb, j))
      q += 1.0 / static_cast<double>(move_options(from, la, j));
  }
  if (q == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(q / static_cast<double>(d));
}

double decomposition_log_posterior(const Decomposition& candidate, const Dataset& dataset,
                                   const KernelConfig& kernels) {
  if (dataset.size() == 0) return 0.0;
  const auto model = JointGPModel::fit(dataset, candidate, kernels.kernels_for(candidate), dataset.noise_variance,
                                       FitOptions{.compute_spectrum = false});
  return model.log_marginal_likelihood();
}

DecompositionChain::DecompositionChain(std::size_t dim, std::uint64_t seed)
    : current_(Decomposition::fully_dependent(dim)), rng_(seed) {}

double DecompositionChain::log_posterior(const Decomposition& candidate, const Dataset& dataset,
                                         const KernelConfig& kernels) {
  const std::string key = candidate.to_string();
  {
    std::lock_guard lock(cache_mutex_);
    if (cache_t_ != dataset.size() || cache_revision_ != kernels.revision) {
      cache_.clear();
      cache_t_ = dataset.size();
      cache_revision_ = kernels.revision;
    }
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double value = decomposition_log_posterior(candidate, dataset, kernels);
  std::lock_guard lock(cache_mutex_);
  cache_.emplace(key, value);
  return value;
}

std::size_t DecompositionChain::cache_size() const {
  std::lock_guard lock(cache_mutex_);
  return cache_.size();
}

bool DecompositionChain::step(const Dataset& dataset, const KernelConfig& kernels) {
  ++proposed_;
  if (current_.dim() == 1) {
    ++accepted_;
    return true;
  }
  Decomposition proposal = propose_decomposition(current_, rng_);
  const double log_ratio = log_posterior(proposal, dataset, kernels) - log_posterior(current_, dataset, kernels) +
                           proposal_log_probability(proposal, current_) -
                           proposal_log_probability(current_, proposal);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng_);
  if (log_ratio >= 0.0 || std::log(u) < log_ratio) {
    current_ = std::move(proposal);
    ++accepted_;
    return true;
  }
  return false;
}

std::vector<Decomposition> DecompositionChain::sample_candidates(const Dataset& dataset,
                                                                 const KernelConfig& kernels, std::size_t k,
                                                                 std::size_t steps_per_candidate) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "need at least one candidate");
  std::vector<Decomposition> out;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t s = 0; s < steps_per_candidate; ++s) step(dataset, kernels);
    out.push_back(current_);
  }
  return out;
}

std::vector<Decomposition> mcmc_sample_candidates(DecompositionChain& chain, const Dataset& dataset,
                                                  const KernelConfig& kernels, std::size_t k,
                                                  std::size_t steps_per_candidate) {
  return chain.sample_candidates(dataset, kernels, k, steps_per_candidate);
}

AveragedAcquisition::AveragedAcquisition(std::vector<AcquisitionBundle> bundles, std::vector<double> weights)
    : bundles_(std::move(bundles)), weights_(std::move(weights)) {
  if (bundles_.empty()) throw Error(ErrorCode::InvalidArgument, "averaged acquisition needs a candidate");
  if (weights_.empty()) weights_.assign(bundles_.size(), 1.0);
  if (weights_.size() != bundles_.size()) throw Error(ErrorCode::ShapeMismatch, "one weight per candidate");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "candidate weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "candidate weights sum to zero");
  for (double& w : weights_) w /= total;
}

std::vector<double> AveragedAcquisition::posterior_weights(const std::vector<double>& log_posteriors) {
  double top = -std::numeric_limits<double>::infinity();
  for (double l : log_posteriors) top = std::max(top, l);
  std::vector<double> w;
  for (double l : log_posteriors) w.push_back(std::exp(l - top));
  return w;
}

double AveragedAcquisition::value(const Vector& x) const {
  double s = 0.0;
  for (std::size_t c = 0; c < bundles_.size(); ++c) s += weights_[c] * bundles_[c].total(x);
  return s;
}

std::vector<FactorNode> AveragedAcquisition::factor_nodes(bool with_lipschitz) const {
  std::vector<FactorNode> nodes;
  for (std::size_t c = 0; c < bundles_.size(); ++c) {
    if (weights_[c] == 0.0) continue;
    auto part = make_factor_nodes(bundles_[c], weights_[c], with_lipschitz);
    for (auto& n : part) nodes.push_back(std::move(n));
  }
  return nodes;
}

double averaged_acquisition(const std::vector<AcquisitionBundle>& bundles, const Vector& x) {
  return AveragedAcquisition(bundles).value(x);
}

}  // namespace dumbo
