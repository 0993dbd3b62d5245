#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dumbo/domain.hpp"

namespace dumbo {

struct Observation {
  double value = 0.0;
  std::optional<Vector> factor_values;  // aligned with the known decomposition
};

/// A black-box objective in maximization form.
struct ObjectiveSpec {
  std::string name;
  BoxDomain domain;
  std::optional<Decomposition> decomposition;
  std::optional<double> optimum;
  std::optional<Vector> optimizer;
  std::function<double(const Vector&)> evaluate;
  /// Per-factor outputs aligned with `decomposition`; empty for scalar-only
  /// objectives.
  std::function<Vector(const Vector&)> evaluate_factors;

  bool has_factor_outputs() const { return static_cast<bool>(evaluate_factors) && decomposition.has_value(); }

  /// Checks x against the domain (OutOfDomain) and evaluates. When
  /// `with_factors` is set the joint value is the sum of the factor outputs.
  Observation observe(const Vector& x, bool with_factors) const;
};

class ObjectiveRegistry {
 public:
  /// Registry holding shc, hartmann6, powell24 and rastrigin100.
  static ObjectiveRegistry with_benchmarks();

  void add(ObjectiveSpec spec);
  bool contains(const std::string& name) const { return specs_.count(name) != 0; }
  const ObjectiveSpec& get(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, ObjectiveSpec> specs_;
};

}  // namespace dumbo
