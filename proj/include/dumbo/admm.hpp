#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dumbo/acquisition.hpp"
#include "dumbo/domain.hpp"

namespace dumbo {

/// One local objective phi_i over the dimensions `vars`. `evaluate` returns
/// the value and, when the pointer is non-null, writes the gradient.
struct FactorNode {
  Factor vars;
  std::function<double(const Vector& x_vi, Vector* gradient)> evaluate;
  std::optional<double> lipschitz;
};

/// Factor nodes for every factor of a calibrated bundle, scaled by `weight`.
std::vector<FactorNode> make_factor_nodes(const AcquisitionBundle& bundle, double weight = 1.0,
                                          bool with_lipschitz = true);

enum class AdmmMode { Converged, EarlyStop };
enum class UpdateOrder { Jacobi, GaussSeidel };

AdmmMode parse_admm_mode(std::string_view text);
UpdateOrder parse_update_order(std::string_view text);

struct AdmmParams {
  double eta = 1.0;
  std::size_t max_iterations = 50;
  /// Non-positive: 1e-3 sqrt(d) in unit-box coordinates.
  double primal_tolerance = 0.0;
  double dual_tolerance = 0.0;
  std::size_t inner_steps = 100;
  /// Fraction of each box width.
  double inner_step_size = 0.05;
  std::size_t restarts = 2;
  AdmmMode mode = AdmmMode::Converged;
  UpdateOrder update_order = UpdateOrder::Jacobi;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdmmState {
  std::vector<Vector> locals;
  std::vector<Vector> duals;
  Vector consensus;
  std::size_t iteration = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct AdmmDiagnostics {
  std::size_t iterations = 0;
  std::size_t local_steps = 0;
  std::size_t consensus_updates = 0;
  std::size_t dual_updates = 0;
  std::size_t clip_events = 0;
  std::vector<double> primal_trace;
  std::vector<double> dual_trace;
  bool reached_max_iterations = false;
  bool minimax_used = false;
  double acquisition_value = 0.0;
};

struct AdmmResult {
  Vector query;
  AdmmState state;
  AdmmDiagnostics diagnostics;
};

/// Maximizes phi(x) - dual.(x - anchor) - eta/2 |x - anchor|^2 over `box` by
/// projected Adam from the anchor and from random starts, then polishes the
/// best iterate by projected gradient steps. Never worse than the anchor.
Vector local_step(const FactorNode& node, const Vector& anchor, const Vector& dual, const BoxDomain& box,
                  const AdmmParams& params, std::uint64_t seed, std::size_t* clip_events = nullptr);

/// Per-dimension mean of the local copies, clipped to the box.
Vector consensus_update(const std::vector<Vector>& locals, const FactorGraph& graph, const BoxDomain& domain,
                        std::size_t* clip_events = nullptr);

/// lambda_i += eta (x_i - consensus_Vi).
void dual_update(AdmmState& state, const FactorGraph& graph, double eta);

/// Lipschitz-weighted per-dimension mean of the local copies, clipped to the
/// box. Falls back to the plain mean when any constant is missing or every
/// constant incident to a dimension is zero.
Vector minimax_consensus(const std::vector<Vector>& locals, const std::vector<std::optional<double>>& lipschitz,
                         const FactorGraph& graph, const BoxDomain& domain);

AdmmResult admm_maximize(const std::vector<FactorNode>& nodes, const BoxDomain& domain, const AdmmParams& params,
                         const Vector& initial_consensus);

}  // namespace dumbo
