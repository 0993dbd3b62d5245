#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dumbo/acquisition.hpp"
#include "dumbo/admm.hpp"
#include "dumbo/decomp_inference.hpp"
#include "dumbo/gp.hpp"
#include "dumbo/objective.hpp"

namespace dumbo {

enum class DecompositionSource { Known, Mcmc };
enum class OutputMode { Joint, Decomposed };

struct Variant {
  DecompositionSource source = DecompositionSource::Mcmc;
  AdmmMode admm_mode = AdmmMode::Converged;
  OutputMode output = OutputMode::Joint;

  /// dumbo, add-dumbo, es-dumbo, es-add-dumbo.
  static Variant parse(std::string_view name);
  std::string name() const;
  void validate() const;
};

struct McmcSettings {
  std::size_t k = 5;
  std::size_t steps_per_candidate = 10;
  std::uint64_t seed = 0;
  bool weighted = false;
};

struct KernelSettings {
  KernelFamily family = KernelFamily::SquaredExponential;
  /// 0 disables fitting.
  std::size_t fit_every = 10;
  std::size_t fit_restarts = 3;
  /// Fixed hyperparameters in unit-cube coordinates. One lengthscale for every
  /// factor, or one per factor of a known decomposition. Setting either field
  /// disables fitting.
  std::vector<double> lengthscale;
  std::optional<double> signal_variance;

  bool fixed() const { return !lengthscale.empty() || signal_variance.has_value(); }
};

struct BoConfig {
  std::size_t budget = 110;
  std::size_t init_points = 5;
  double noise_std = 0.0;
  AcquisitionConfig acquisition;
  AdmmParams admm;
  McmcSettings mcmc;
  KernelSettings kernel;
};

struct TraceRecord {
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  Vector query;
  double output = 0.0;
  double immediate_regret = 0.0;  // NaN when the optimum is unknown
  double minimal_regret = 0.0;    // best value so far when the optimum is unknown
  double regret_bound = 0.0;      // NaN for initial-design rows
  std::size_t admm_iterations = 0;
  double primal_residual = 0.0;
  double a = 0.0;
  double beta_t = 0.0;
  std::string decomposition;
  bool minimax_used = false;
};

/// One BO run on one seed. Works in the unit cube with standardized outputs
/// and reports everything in raw units.
class Campaign {
 public:
  Campaign(const ObjectiveSpec& objective, Variant variant, BoConfig config, std::uint64_t seed);
  ~Campaign();
  Campaign(const Campaign&) = delete;
  Campaign& operator=(const Campaign&) = delete;

  /// Evaluates the random initial design.
  void initialize();
  /// One BO iteration. On an objective failure the state is left unchanged.
  void step();

  const Dataset& dataset() const noexcept { return data_; }
  const std::vector<TraceRecord>& trace() const noexcept { return trace_; }
  std::size_t iteration() const noexcept { return data_.size(); }
  const Vector& incumbent() const noexcept { return best_x_; }
  double incumbent_value() const noexcept { return best_y_; }
  std::size_t clamp_events() const noexcept { return clamp_events_; }
  const AdmmDiagnostics& last_admm() const noexcept { return last_admm_; }
  const std::vector<Decomposition>& last_candidates() const noexcept { return last_candidates_; }
  const DecompositionChain* chain() const noexcept { return chain_.get(); }

 private:
  void record(const Vector& x, const Observation& obs, const AcquisitionBundle* bundle, const Vector* unit_query,
              double y_scale);
  void fit_hyperparameters(const Dataset& work);

  const ObjectiveSpec& objective_;
  Variant variant_;
  BoConfig config_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  Dataset data_;
  Vector best_x_;
  double best_y_;
  std::vector<TraceRecord> trace_;
  std::unique_ptr<DecompositionChain> chain_;
  KernelConfig kernel_config_;
  std::vector<Kernel> known_kernels_;
  std::size_t steps_ = 0;
  std::size_t clamp_events_ = 0;
  AdmmDiagnostics last_admm_;
  std::vector<Decomposition> last_candidates_;
};

struct CampaignResult {
  std::uint64_t seed = 0;
  std::vector<TraceRecord> trace;
  std::size_t clamp_events = 0;
};

CampaignResult run_campaign_seed(const ObjectiveSpec& objective, const Variant& variant, const BoConfig& config,
                                 std::uint64_t seed);

/// Runs every seed, up to `jobs` at a time.
std::vector<CampaignResult> run_campaign(const ObjectiveSpec& objective, const Variant& variant,
                                         const BoConfig& config, const std::vector<std::uint64_t>& seeds,
                                         std::size_t jobs = 1);

struct AggregateRow {
  std::size_t iteration = 0;
  double median = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

/// Per-iteration median and standard error (sample std / sqrt(n)) of the
/// minimal regret across seeds.
std::vector<AggregateRow> aggregate(const std::vector<CampaignResult>& results);

double median(std::vector<double> values);
double standard_error(const std::vector<double>& values);

/// 2 beta^{1/2} (a sum_i sigma_i^2(x) + 1/(4a)) at x.
double regret_bound(const AcquisitionBundle& bundle, const Vector& x);

struct BoundStudyConfig {
  std::size_t domain_size = 50;
  std::size_t runs = 20;
  std::size_t steps = 30;
  double delta = 0.1;
  double lengthscale = 0.2;
  double signal_variance = 0.5;
  double noise_variance = 1e-4;
  std::uint64_t seed = 0;
};

struct BoundStudyResult {
  std::size_t violations = 0;
  std::size_t total = 0;
  double violation_fraction() const { return total == 0 ? 0.0 : static_cast<double>(violations) / total; }
};

/// Runs the acquisition on finite 2-d domains whose truth is drawn from the
/// additive prior {{1},{2}} and counts steps whose regret exceeds the bound.
/// `zero_truth` replaces the sampled truth by the prior mean.
BoundStudyResult bound_violation_study(const BoundStudyConfig& config, bool zero_truth = false);

}  // namespace dumbo
