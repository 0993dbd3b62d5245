#include "dumbo/objective.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dumbo/benchmarks.hpp"
#include "dumbo/error.hpp"

namespace dumbo {

Observation ObjectiveSpec::observe(const Vector& x, bool with_factors) const {
  if (static_cast<std::size_t>(x.size()) != domain.dim())
    throw Error(ErrorCode::ShapeMismatch, fmt::format("{} expects {} inputs, got {}", name, domain.dim(), x.size()));
  if (!domain.contains(x, 1e-12)) throw Error(ErrorCode::OutOfDomain, fmt::format("query outside the {} box", name));
  Observation obs;
  try {
    if (with_factors) {
      if (!has_factor_outputs())
        throw Error(ErrorCode::IncompatibleVariant, fmt::format("{} has no factor outputs", name));
      Vector fy = evaluate_factors(x);
      if (static_cast<std::size_t>(fy.size()) != decomposition->size())
        throw Error(ErrorCode::ObjectiveFailure, fmt::format("{} returned {} factor outputs", name, fy.size()));
      obs.value = fy.sum();
      obs.factor_values = std::move(fy);
    } else {
      obs.value = evaluate(x);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ObjectiveFailure, fmt::format("{} failed: {}", name, e.what()));
  }
  if (!std::isfinite(obs.value))
    throw Error(ErrorCode::ObjectiveFailure, fmt::format("{} returned a non-finite value", name));
  return obs;
}

ObjectiveRegistry ObjectiveRegistry::with_benchmarks() {
  ObjectiveRegistry r;
  r.add(benchmarks::shc());
  r.add(benchmarks::hartmann6());
  r.add(benchmarks::powell24());
  r.add(benchmarks::rastrigin100());
  return r;
}

void ObjectiveRegistry::add(ObjectiveSpec spec) {
  if (spec.name.empty()) throw Error(ErrorCode::InvalidArgument, "objective needs a name");
  if (!spec.evaluate) throw Error(ErrorCode::InvalidArgument, "objective needs an evaluator");
  const std::string key = spec.name;
  specs_.insert_or_assign(key, std::move(spec));
}

const ObjectiveSpec& ObjectiveRegistry::get(const std::string& name) const {
  auto it = specs_.find(name);
  if (it == specs_.end()) throw Error(ErrorCode::InvalidArgument, fmt::format("unknown objective '{}'", name));
  return it->second;
}

std::vector<std::string> ObjectiveRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : specs_) out.push_back(k);
  return out;
}

}  // namespace dumbo
