#include "dumbo/admm.hpp"

#include <cmath>
#include <future>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "dumbo/error.hpp"

namespace dumbo {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t node_seed(std::uint64_t seed, std::size_t iteration, std::size_t factor) {
  return splitmix(splitmix(splitmix(seed) ^ iteration) ^ (factor * 0x632be59bd9b4e019ULL));
}

bool finite(const Vector& v) { return v.allFinite(); }

}  // namespace

std::vector<FactorNode> make_factor_nodes(const AcquisitionBundle& bundle, double weight, bool with_lipschitz) {
  std::vector<FactorNode> nodes;
  auto shared = std::make_shared<AcquisitionBundle>(bundle);
  const auto& dec = bundle.model().decomposition();
  for (std::size_t i = 0; i < dec.size(); ++i) {
    FactorNode node;
    node.vars = dec.factor(i);
    node.evaluate = [shared, i, weight](const Vector& x, Vector* g) {
      const double v = shared->evaluate(i, x, g);
      if (g) *g *= weight;
      return weight * v;
    };
    if (with_lipschitz) node.lipschitz = weight * bundle.lipschitz_phi(i);
    nodes.push_back(std::move(node));
  }
  return nodes;
}

AdmmMode parse_admm_mode(std::string_view text) {
  if (text == "converged") return AdmmMode::Converged;
  if (text == "early_stop") return AdmmMode::EarlyStop;
  throw Error(ErrorCode::ParseError, fmt::format("unknown ADMM mode '{}'", text));
}

UpdateOrder parse_update_order(std::string_view text) {
  if (text == "jacobi") return UpdateOrder::Jacobi;
  if (text == "gauss_seidel") return UpdateOrder::GaussSeidel;
  throw Error(ErrorCode::ParseError, fmt::format("unknown update order '{}'", text));
}

void AdmmParams::validate() const {
  if (!(eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "admm.eta must be positive");
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "admm.max_iterations must be at least 1");
  if (inner_steps < 1) throw Error(ErrorCode::InvalidArgument, "admm.inner_steps must be at least 1");
  if (!(inner_step_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "admm.inner_step_size must be positive");
  if (restarts < 1) throw Error(ErrorCode::InvalidArgument, "admm.restarts must be at least 1");
}

Vector local_step(const FactorNode& node, const Vector& anchor, const Vector& dual, const BoxDomain& box,
                  const AdmmParams& params, std::uint64_t seed, std::size_t* clip_events) {
  const double eta = params.eta;
  auto lagrangian = [&](const Vector& x, Vector* grad) {
    const Vector diff = x - anchor;
    const double v = node.evaluate(x, grad);
    if (grad) {
      if (!finite(*grad) || !std::isfinite(v))
        throw Error(ErrorCode::NonFiniteGradient, "local objective returned a non-finite value");
      *grad -= dual + eta * diff;
    }
    return v - dual.dot(diff) - 0.5 * eta * diff.squaredNorm();
  };

  const Vector lr0 = params.inner_step_size * box.width();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-12;
  const auto steps = params.inner_steps;
  const double decay = steps > 1 ? std::pow(0.01, 1.0 / static_cast<double>(steps - 1)) : 1.0;

  Vector best = box.clip(anchor);
  double best_value = lagrangian(best, nullptr);
  for (std::size_t r = 0; r < params.restarts; ++r) {
    Vector x = anchor;
    if (r > 0) {
      for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = box.lower()[j] + u01(rng) * box.width()[j];
    }
    x = box.clip(x);
    Vector m = Vector::Zero(x.size()), v = Vector::Zero(x.size()), g;
    double scale = 1.0;
    for (std::size_t k = 1; k <= steps; ++k) {
      const double value = lagrangian(x, &g);
      if (value > best_value) {
        best_value = value;
        best = x;
      }
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
      const double kd = static_cast<double>(k);
      const Vector mhat = m / (1.0 - std::pow(b1, kd));
      const Vector vhat = v / (1.0 - std::pow(b2, kd));
      const Vector step = scale * lr0.cwiseProduct(mhat.cwiseQuotient((vhat.cwiseSqrt().array() + eps).matrix()));
      const Vector moved = x + step;
      x = box.clip(moved);
      if (clip_events && x != moved) ++*clip_events;
      scale *= decay;
    }
    const double value = lagrangian(x, nullptr);
    if (value > best_value) {
      best_value = value;
      best = x;
    }
  }

  // Projected gradient polish with backtracking.
  Vector g;
  double t = 1.0;
  for (int it = 0; it < 30 && t > 1e-14; ++it) {
    lagrangian(best, &g);
    bool moved = false;
    while (t > 1e-14) {
      const Vector cand = box.clip(best + t * g);
      const double value = lagrangian(cand, nullptr);
      if (value > best_value) {
        moved = true;
        best_value = value;
        best = cand;
        t *= 2.0;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return best;
}

Vector consensus_update(const std::vector<Vector>& locals, const FactorGraph& graph, const BoxDomain& domain,
                        std::size_t* clip_events) {
  const auto d = static_cast<Eigen::Index>(graph.dim());
  Vector sum = Vector::Zero(d), count = Vector::Zero(d);
  for (std::size_t i = 0; i < graph.num_factors(); ++i) {
    const auto& vars = graph.factor_to_vars()[i];
    for (std::size_t k = 0; k < vars.size(); ++k) {
      sum[static_cast<Eigen::Index>(vars[k])] += locals[i][static_cast<Eigen::Index>(k)];
      count[static_cast<Eigen::Index>(vars[k])] += 1.0;
    }
  }
  const Vector mean = sum.cwiseQuotient(count);
  Vector out = domain.clip(mean);
  if (clip_events && out != mean) ++*clip_events;
  return out;
}

void dual_update(AdmmState& state, const FactorGraph& graph, double eta) {
  for (std::size_t i = 0; i < graph.num_factors(); ++i)
    state.duals[i] += eta * (state.locals[i] - restrict(state.consensus, graph.factor_to_vars()[i]));
}

Vector minimax_consensus(const std::vector<Vector>& locals, const std::vector<std::optional<double>>& lipschitz,
                         const FactorGraph& graph, const BoxDomain& domain) {
  if (lipschitz.size() != graph.num_factors())
    throw Error(ErrorCode::ShapeMismatch, "one Lipschitz entry per factor");
  bool all_known = true;
  for (const auto& l : lipschitz) {
    if (!l) {
      all_known = false;
      continue;
    }
    if (*l < 0.0 || std::isnan(*l))
      throw Error(ErrorCode::NegativeLipschitz, fmt::format("Lipschitz constant {} is negative", *l));
  }
  if (!all_known) return consensus_update(locals, graph, domain);
  const auto d = static_cast<Eigen::Index>(graph.dim());
  Vector wsum = Vector::Zero(d), wtot = Vector::Zero(d), plain = Vector::Zero(d), count = Vector::Zero(d);
  for (std::size_t i = 0; i < graph.num_factors(); ++i) {
    const auto& vars = graph.factor_to_vars()[i];
    for (std::size_t k = 0; k < vars.size(); ++k) {
      const auto j = static_cast<Eigen::Index>(vars[k]);
      const double x = locals[i][static_cast<Eigen::Index>(k)];
      wsum[j] += *lipschitz[i] * x;
      wtot[j] += *lipschitz[i];
      plain[j] += x;
      count[j] += 1.0;
    }
  }
  Vector out(d);
  for (Eigen::Index j = 0; j < d; ++j) out[j] = wtot[j] > 0.0 ? wsum[j] / wtot[j] : plain[j] / count[j];
  return domain.clip(out);
}

AdmmResult admm_maximize(const std::vector<FactorNode>& nodes, const BoxDomain& domain, const AdmmParams& params,
                         const Vector& initial_consensus) {
  params.validate();
  if (nodes.empty()) throw Error(ErrorCode::InvalidArgument, "ADMM needs at least one factor");
  if (static_cast<std::size_t>(initial_consensus.size()) != domain.dim())
    throw Error(ErrorCode::ShapeMismatch, "initial consensus has the wrong dimension");
  std::vector<Factor> factors;
  for (const auto& n : nodes) factors.push_back(n.vars);
  const FactorGraph graph = FactorGraph::from_factors(factors, domain.dim());
  const std::size_t n = nodes.size();

  std::vector<BoxDomain> boxes;
  for (std::size_t i = 0; i < n; ++i) boxes.push_back(domain.project(graph.factor_to_vars()[i]));

  // Tolerances are stated for the unit box; scale by the mean width.
  const double root_d = std::sqrt(static_cast<double>(domain.dim()));
  const double width = domain.width().mean();
  const double primal_tol =
      (params.primal_tolerance > 0.0 ? params.primal_tolerance : 1e-3 * root_d) * width;
  const double dual_tol = (params.dual_tolerance > 0.0 ? params.dual_tolerance : 1e-3 * root_d) * width;

  AdmmResult result;
  AdmmState& st = result.state;
  AdmmDiagnostics& diag = result.diagnostics;
  st.consensus = domain.clip(initial_consensus);
  for (std::size_t i = 0; i < n; ++i) {
    st.locals.push_back(restrict(st.consensus, graph.factor_to_vars()[i]));
    st.duals.push_back(Vector::Zero(static_cast<Eigen::Index>(graph.factor_to_vars()[i].size())));
  }

  const unsigned hw = std::thread::hardware_concurrency();
  const bool parallel = params.update_order == UpdateOrder::Jacobi && hw > 1 && n > 1;

  for (std::size_t k = 1; k <= params.max_iterations; ++k) {
    // Local problems only read the consensus and their own dual, so the
    // sequential and concurrent orders give the same iterate.
    std::vector<std::size_t> clips(n, 0);
    auto work = [&](std::size_t i) {
      st.locals[i] = local_step(nodes[i], restrict(st.consensus, graph.factor_to_vars()[i]), st.duals[i],
                                boxes[i], params, node_seed(params.seed, k, i), &clips[i]);
    };
    if (parallel) {
      const std::size_t workers = std::min<std::size_t>(hw, n);
      std::vector<std::future<void>> futures;
      for (std::size_t w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w] {
          for (std::size_t i = w; i < n; i += workers) work(i);
        }));
      }
      for (auto& f : futures) f.get();
    } else {
      for (std::size_t i = 0; i < n; ++i) work(i);
    }
    diag.local_steps += n;
    for (auto c : clips) diag.clip_events += c;

    const Vector previous = st.consensus;
    st.consensus = consensus_update(st.locals, graph, domain, &diag.clip_events);
    ++diag.consensus_updates;
    dual_update(st, graph, params.eta);
    ++diag.dual_updates;

    double primal = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      primal = std::max(primal, (st.locals[i] - restrict(st.consensus, graph.factor_to_vars()[i])).norm());
    st.primal_residual = primal;
    st.dual_residual = params.eta * (st.consensus - previous).norm();
    st.iteration = k;
    diag.iterations = k;
    diag.primal_trace.push_back(st.primal_residual);
    diag.dual_trace.push_back(st.dual_residual);

    if (params.mode == AdmmMode::EarlyStop) break;
    if (st.primal_residual <= primal_tol && st.dual_residual <= dual_tol) break;
    if (k == params.max_iterations) diag.reached_max_iterations = true;
  }

  if (params.mode == AdmmMode::EarlyStop) {
    std::vector<std::optional<double>> lips;
    for (const auto& node : nodes) lips.push_back(node.lipschitz);
    result.query = minimax_consensus(st.locals, lips, graph, domain);
    diag.minimax_used = true;
  } else {
    result.query = st.consensus;
  }
  for (std::size_t i = 0; i < n; ++i)
    diag.acquisition_value += nodes[i].evaluate(restrict(result.query, graph.factor_to_vars()[i]), nullptr);
  return result;
}

}  // namespace dumbo
