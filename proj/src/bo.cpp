#include "dumbo/bo.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dumbo/error.hpp"

namespace dumbo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNugget = 1e-6;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return mix(mix(mix(seed) ^ stream) ^ index);
}

enum Stream : std::uint64_t { kInit = 1, kChain, kAdmm, kProbe, kHyper, kNoise };

}  // namespace

Variant Variant::parse(std::string_view name) {
  if (name == "dumbo") return {DecompositionSource::Mcmc, AdmmMode::Converged, OutputMode::Joint};
  if (name == "add-dumbo") return {DecompositionSource::Known, AdmmMode::Converged, OutputMode::Decomposed};
  if (name == "es-dumbo") return {DecompositionSource::Mcmc, AdmmMode::EarlyStop, OutputMode::Joint};
  if (name == "es-add-dumbo") return {DecompositionSource::Known, AdmmMode::EarlyStop, OutputMode::Decomposed};
  throw Error(ErrorCode::ParseError, fmt::format("unknown variant '{}'", name));
}

std::string Variant::name() const {
  std::string base = source == DecompositionSource::Known ? "add-dumbo" : "dumbo";
  if (source == DecompositionSource::Known && output == OutputMode::Joint) base = "known-dumbo";
  return admm_mode == AdmmMode::EarlyStop ? "es-" + base : base;
}

void Variant::validate() const {
  if (output == OutputMode::Decomposed && source != DecompositionSource::Known)
    throw Error(ErrorCode::IncompatibleVariant, "decomposed outputs need a known decomposition");
}

// Campaign -------------------------------------------------------------------

Campaign::Campaign(const ObjectiveSpec& objective, Variant variant, BoConfig config, std::uint64_t seed)
    : objective_(objective),
      variant_(variant),
      config_(std::move(config)),
      seed_(seed),
      rng_(derive(seed, kInit)),
      data_(objective.domain.dim(), 0.0),
      best_y_(-std::numeric_limits<double>::infinity()) {
  variant_.validate();
  config_.admm.validate();
  if (config_.budget < 1) throw Error(ErrorCode::InvalidArgument, "budget must be at least 1");
  if (variant_.source == DecompositionSource::Known && !objective_.decomposition)
    throw Error(ErrorCode::IncompatibleVariant, fmt::format("{} has no known decomposition", objective_.name));
  if (variant_.output == OutputMode::Decomposed && !objective_.has_factor_outputs())
    throw Error(ErrorCode::IncompatibleVariant, fmt::format("{} has no factor outputs", objective_.name));
  const auto& ks = config_.kernel;
  kernel_config_.family = ks.family;
  if (ks.lengthscale.size() == 1) {
    kernel_config_.default_lengthscale = ks.lengthscale.front();
    kernel_config_.scale_with_arity = false;
  }
  if (ks.signal_variance) kernel_config_.default_signal_variance = *ks.signal_variance;
  if (variant_.source == DecompositionSource::Known) {
    known_kernels_ = kernel_config_.kernels_for(*objective_.decomposition);
    if (ks.lengthscale.size() > 1) {
      if (ks.lengthscale.size() != known_kernels_.size())
        throw Error(ErrorCode::ShapeMismatch, "kernel.lengthscale needs one entry per factor");
      for (std::size_t i = 0; i < known_kernels_.size(); ++i)
        known_kernels_[i] = Kernel(ks.family, ks.lengthscale[i], kernel_config_.default_signal_variance);
    }
  } else {
    if (ks.lengthscale.size() > 1)
      throw Error(ErrorCode::IncompatibleVariant, "per-factor lengthscales need a known decomposition");
    chain_ = std::make_unique<DecompositionChain>(objective_.domain.dim(), derive(seed, kChain, config_.mcmc.seed));
  }
}

Campaign::~Campaign() = default;

void Campaign::initialize() {
  const auto& box = objective_.domain;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t p = 0; p < config_.init_points; ++p) {
    Vector u(static_cast<Eigen::Index>(box.dim()));
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = u01(rng_);
    const Vector x = box.clip(box.from_unit(u));
    Observation obs = objective_.observe(x, variant_.output == OutputMode::Decomposed);
    record(x, obs, nullptr, nullptr, 1.0);
  }
}

namespace {

struct Working {
  Dataset data;
  double mean = 0.0;
  double scale = 1.0;
};

Working working_data(const Dataset& raw, const BoxDomain& box, double noise_std) {
  Working w{Dataset(box.dim(), 0.0)};
  const auto t = raw.outputs.size();
  if (t > 0) {
    w.mean = raw.outputs.mean();
    const double var = (raw.outputs.array() - w.mean).square().mean();
    w.scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  w.data.inputs = Matrix(t, static_cast<Eigen::Index>(box.dim()));
  for (Eigen::Index r = 0; r < t; ++r) w.data.inputs.row(r) = box.to_unit(raw.inputs.row(r).transpose()).transpose();
  w.data.outputs = (raw.outputs.array() - w.mean) / w.scale;
  if (raw.factor_outputs) {
    Matrix Y = *raw.factor_outputs;
    const Vector col_mean = t > 0 ? Vector(Y.colwise().mean().transpose()) : Vector::Zero(Y.cols());
    Y.rowwise() -= col_mean.transpose();
    Y /= w.scale;
    w.data.factor_outputs = std::move(Y);
  }
  const double rel = noise_std / w.scale;
  w.data.noise_variance = std::max(kNugget, rel * rel);
  return w;
}

}  // namespace

void Campaign::fit_hyperparameters(const Dataset& work) {
  HyperFitOptions opts;
  opts.restarts = config_.kernel.fit_restarts;
  std::mt19937_64 rng(derive(seed_, kHyper, steps_));
  if (variant_.source == DecompositionSource::Known) {
    const auto& dec = *objective_.decomposition;
    if (variant_.output == OutputMode::Decomposed) {
      for (std::size_t i = 0; i < dec.size(); ++i) {
        const Vector col = work.factor_outputs->col(static_cast<Eigen::Index>(i));
        known_kernels_[i] = dumbo::fit_hyperparameters(work.inputs, col, {dec.factor(i)}, {known_kernels_[i]},
                                                       work.noise_variance, opts, rng)
                                .front();
      }
    } else {
      known_kernels_ = dumbo::fit_hyperparameters(work.inputs, work.outputs, dec.factors(), known_kernels_,
                                                  work.noise_variance, opts, rng);
    }
    return;
  }
  const Decomposition& dec = chain_->current();
  const auto fitted = dumbo::fit_hyperparameters(work.inputs, work.outputs, dec.factors(),
                                                 kernel_config_.kernels_for(dec), work.noise_variance, opts, rng);
  std::map<std::size_t, std::pair<double, double>> log_sums;
  std::map<std::size_t, std::size_t> counts;
  double scaled_l = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < dec.size(); ++i) {
    const std::size_t arity = dec.factor(i).size();
    log_sums[arity].first += std::log(fitted[i].min_lengthscale());
    log_sums[arity].second += std::log(fitted[i].signal_variance());
    ++counts[arity];
    scaled_l += fitted[i].min_lengthscale() / std::sqrt(static_cast<double>(arity));
    s2 += fitted[i].signal_variance();
  }
  for (const auto& [arity, sums] : log_sums) {
    const double c = static_cast<double>(counts[arity]);
    kernel_config_.set(arity, std::exp(sums.first / c), std::exp(sums.second / c));
  }
  kernel_config_.default_lengthscale = scaled_l / static_cast<double>(dec.size());
  kernel_config_.default_signal_variance = s2 / static_cast<double>(dec.size());
}

void Campaign::step() {
  if (data_.size() == 0) throw Error(ErrorCode::InvalidArgument, "campaign needs an initial design");
  const auto& box = objective_.domain;
  const BoxDomain unit = BoxDomain::unit(box.dim());
  const Working w = working_data(data_, box, config_.noise_std);
  const bool early = variant_.admm_mode == AdmmMode::EarlyStop;

  const auto& ks = config_.kernel;
  if (!ks.fixed() && ks.fit_every > 0 && steps_ % ks.fit_every == 0) fit_hyperparameters(w.data);

  std::vector<Decomposition> samples;
  if (variant_.source == DecompositionSource::Known) {
    samples.push_back(*objective_.decomposition);
  } else {
    samples = chain_->sample_candidates(w.data, kernel_config_, config_.mcmc.k, config_.mcmc.steps_per_candidate);
  }

  std::vector<Decomposition> unique;
  std::vector<double> weights;
  for (const auto& s : samples) {
    auto it = std::find(unique.begin(), unique.end(), s);
    if (it == unique.end()) {
      unique.push_back(s);
      weights.push_back(1.0);
    } else {
      weights[static_cast<std::size_t>(it - unique.begin())] += 1.0;
    }
  }
  if (config_.mcmc.weighted && chain_) {
    std::vector<double> lp;
    for (const auto& c : unique) lp.push_back(chain_->log_posterior(c, w.data, kernel_config_));
    const auto post = AveragedAcquisition::posterior_weights(lp);
    for (std::size_t c = 0; c < unique.size(); ++c) weights[c] *= post[c];
  }

  std::vector<AcquisitionBundle> bundles;
  const FitOptions fit_opts{.compute_spectrum = early};
  for (std::size_t c = 0; c < unique.size(); ++c) {
    const auto& dec = unique[c];
    std::vector<Kernel> ks = variant_.source == DecompositionSource::Known ? known_kernels_
                                                                            : kernel_config_.kernels_for(dec);
    std::shared_ptr<const FactorModel> model;
    if (variant_.output == OutputMode::Decomposed) {
      model = std::make_shared<DecomposedGPModel>(
          DecomposedGPModel::fit(w.data, dec, std::move(ks), w.data.noise_variance, fit_opts));
    } else {
      model = std::make_shared<JointGPModel>(
          JointGPModel::fit(w.data, dec, std::move(ks), w.data.noise_variance, fit_opts));
    }
    bundles.push_back(
        AcquisitionBundle::calibrate(std::move(model), config_.acquisition, unit, derive(seed_, kProbe, steps_)));
    if (bundles.back().clamped()) ++clamp_events_;
  }
  const std::size_t lead = static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) -
                                                    weights.begin());
  const AveragedAcquisition averaged(bundles, weights);

  AdmmParams params = config_.admm;
  params.mode = variant_.admm_mode;
  params.seed = derive(seed_, kAdmm, steps_);
  const AdmmResult result = admm_maximize(averaged.factor_nodes(early), unit, params, box.to_unit(best_x_));

  Vector u = result.query;
  for (Eigen::Index r = 0; r < w.data.inputs.rows(); ++r) {
    if (w.data.inputs.row(r).transpose() == u) {
      std::uniform_real_distribution<double> jitter(-1e-6, 1e-6);
      for (Eigen::Index j = 0; j < u.size(); ++j) u[j] += jitter(rng_);
      u = unit.clip(u);
      break;
    }
  }
  const Vector x = box.clip(box.from_unit(u));
  Observation obs = objective_.observe(x, variant_.output == OutputMode::Decomposed);

  last_admm_ = result.diagnostics;
  last_candidates_ = unique;
  record(x, obs, &bundles[lead], &u, w.scale);
  auto& row = trace_.back();
  row.admm_iterations = result.diagnostics.iterations;
  row.primal_residual = result.state.primal_residual;
  row.minimax_used = result.diagnostics.minimax_used;
  row.decomposition = unique[lead].to_string();
  ++steps_;
  spdlog::debug("{} seed {} t={} y={:.6g} best={:.6g} admm={} dec={}", objective_.name, seed_, data_.size(),
                row.output, best_y_, row.admm_iterations, row.decomposition);
}

void Campaign::record(const Vector& x, const Observation& obs, const AcquisitionBundle* bundle,
                      const Vector* unit_query, double y_scale) {
  const double truth = obs.value;
  double y = truth;
  Vector fy;
  if (obs.factor_values) fy = *obs.factor_values;
  if (config_.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, config_.noise_std);
    std::mt19937_64 nrng(derive(seed_, kNoise, data_.size()));
    const double e = noise(nrng);
    y += e;
    if (fy.size() > 0) fy.array() += e / static_cast<double>(fy.size());
  }
  if (fy.size() > 0) data_.append(x, y, fy);
  else data_.append(x, y);
  if (y > best_y_) {
    best_y_ = y;
    best_x_ = x;
  }
  TraceRecord rec;
  rec.seed = seed_;
  rec.iteration = data_.size();
  rec.query = x;
  rec.output = y;
  if (objective_.optimum) {
    rec.immediate_regret = *objective_.optimum - truth;
    rec.minimal_regret =
        trace_.empty() ? rec.immediate_regret : std::min(trace_.back().minimal_regret, rec.immediate_regret);
  } else {
    rec.immediate_regret = kNaN;
    rec.minimal_regret = best_y_;
  }
  if (bundle) {
    rec.regret_bound = y_scale * bundle->regret_bound(*unit_query);
    rec.a = bundle->a();
    rec.beta_t = bundle->beta();
  } else {
    rec.regret_bound = kNaN;
    rec.a = kNaN;
    rec.beta_t = kNaN;
    rec.primal_residual = kNaN;
  }
  trace_.push_back(std::move(rec));
}

CampaignResult run_campaign_seed(const ObjectiveSpec& objective, const Variant& variant, const BoConfig& config,
                                 std::uint64_t seed) {
  Campaign campaign(objective, variant, config, seed);
  campaign.initialize();
  for (std::size_t s = 0; s < config.budget; ++s) campaign.step();
  return CampaignResult{seed, campaign.trace(), campaign.clamp_events()};
}

std::vector<CampaignResult> run_campaign(const ObjectiveSpec& objective, const Variant& variant,
                                         const BoConfig& config, const std::vector<std::uint64_t>& seeds,
                                         std::size_t jobs) {
  if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one seed");
  if (config.budget < 1) throw Error(ErrorCode::InvalidArgument, "budget must be at least 1");
  std::vector<CampaignResult> out(seeds.size());
  jobs = std::max<std::size_t>(1, std::min(jobs, seeds.size()));
  if (jobs == 1) {
    for (std::size_t s = 0; s < seeds.size(); ++s) out[s] = run_campaign_seed(objective, variant, config, seeds[s]);
    return out;
  }
  std::vector<std::future<void>> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t s = w; s < seeds.size(); s += jobs)
        out[s] = run_campaign_seed(objective, variant, config, seeds[s]);
    }));
  }
  for (auto& f : workers) f.get();
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double standard_error(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

std::vector<AggregateRow> aggregate(const std::vector<CampaignResult>& results) {
  std::size_t len = 0;
  for (const auto& r : results) len = std::max(len, r.trace.size());
  std::vector<AggregateRow> rows;
  for (std::size_t k = 0; k < len; ++k) {
    std::vector<double> values;
    for (const auto& r : results)
      if (k < r.trace.size()) values.push_back(r.trace[k].minimal_regret);
    rows.push_back(AggregateRow{k + 1, median(values), standard_error(values), values.size()});
  }
  return rows;
}

double regret_bound(const AcquisitionBundle& bundle, const Vector& x) { return bundle.regret_bound(x); }

// Bound study -----------------------------------------------------------------

BoundStudyResult bound_violation_study(const BoundStudyConfig& cfg, bool zero_truth) {
  BoundStudyResult result;
  const auto m = static_cast<Eigen::Index>(cfg.domain_size);
  const Decomposition dec({{0}, {1}}, 2);
  const Kernel kernel(KernelFamily::SquaredExponential, cfg.lengthscale, cfg.signal_variance);
  for (std::size_t run = 0; run < cfg.runs; ++run) {
    std::mt19937_64 rng(derive(cfg.seed, 0x5eed, run));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    Matrix points(m, 2);
    for (Eigen::Index p = 0; p < m; ++p) points.row(p) << u01(rng), u01(rng);

    Vector truth = Vector::Zero(m);
    if (!zero_truth) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        Matrix k = kernel_matrix(kernel, points.col(j));
        k.diagonal().array() += 1e-10 * cfg.signal_variance;
        const Eigen::LLT<Matrix> llt(k);
        Vector z(m);
        for (Eigen::Index p = 0; p < m; ++p) z[p] = n01(rng);
        truth += llt.matrixL() * z;
      }
    }
    const double best = truth.maxCoeff();

    Dataset data(2, cfg.noise_variance);
    const std::vector<double> floors(2, cfg.noise_variance / 2.0);
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
      auto model = std::make_shared<JointGPModel>(
          JointGPModel::fit(data, dec, {kernel, kernel}, cfg.noise_variance, FitOptions{.compute_spectrum = false}));
      VarianceBounds bounds = variance_bounds(floors);
      double max_var = 0.0;
      for (Eigen::Index p = 0; p < m; ++p)
        max_var = std::max(max_var, model->posterior_total(points.row(p).transpose()).variance);
      bounds.v_plus = std::max(bounds.v_plus, max_var);
      const double beta = beta_schedule(t, cfg.delta, static_cast<double>(cfg.domain_size));
      const AcquisitionBundle bundle(model, solve_quartic_a(bounds), beta, bounds, data.size());
      Eigen::Index pick = 0;
      double top = -std::numeric_limits<double>::infinity();
      for (Eigen::Index p = 0; p < m; ++p) {
        const double v = bundle.total(points.row(p).transpose());
        if (v > top) {
          top = v;
          pick = p;
        }
      }
      const Vector x = points.row(pick).transpose();
      const double regret = best - truth[pick];
      ++result.total;
      if (regret > bundle.regret_bound(x)) ++result.violations;
      data.append(x, truth[pick] + std::sqrt(cfg.noise_variance) * n01(rng));
    }
  }
  return result;
}

}  // namespace dumbo
