#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace dumbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box [lower, upper] in R^d.
class BoxDomain {
 public:
  BoxDomain(Vector lower, Vector upper);

  static BoxDomain unit(std::size_t dim);
  static BoxDomain uniform(std::size_t dim, double lower, double upper);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  Vector width() const { return upper_ - lower_; }
  Vector center() const { return 0.5 * (lower_ + upper_); }

  bool contains(const Vector& x, double tolerance = 0.0) const;
  Vector clip(const Vector& x) const;

  /// Affine maps between this box and [0,1]^d.
  Vector to_unit(const Vector& x) const;
  Vector from_unit(const Vector& u) const;

  /// Projection of the box onto the listed (0-based) coordinates.
  BoxDomain project(std::span<const std::size_t> vars) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// Sorted, 0-based dimension indices consumed by one factor.
using Factor = std::vector<std::size_t>;

/// Throws dumbo::Error (IndexOutOfRange, EmptyFactor, DuplicateFactor,
/// UncoveredDimension) when the factor list is not a valid decomposition of
/// {0..dim-1}. Messages report 1-based indices.
void validate_decomposition(const std::vector<Factor>& factors, std::size_t dim);

/// A validated additive decomposition. Factors are stored in canonical order
/// (each factor sorted, factors ordered lexicographically) so that equality is
/// structural.
class Decomposition {
 public:
  Decomposition(std::vector<Factor> factors, std::size_t dim);

  static Decomposition fully_dependent(std::size_t dim);
  static Decomposition singletons(std::size_t dim);

  /// Parses "1,2;2,3" (1-based, ';' between factors, ',' within a factor).
  static Decomposition parse(std::string_view text, std::size_t dim);

  /// Inverse of parse(); also used as the canonical fingerprint.
  std::string to_string() const;

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return factors_.size(); }
  const Factor& factor(std::size_t i) const { return factors_.at(i); }
  const std::vector<Factor>& factors() const noexcept { return factors_; }
  std::size_t max_factor_size() const;
  bool is_partition() const;

  bool operator==(const Decomposition&) const = default;

 private:
  std::vector<Factor> factors_;
  std::size_t dim_;
};

/// Bipartite adjacency between factor nodes and variable nodes.
class FactorGraph {
 public:
  /// Builds a graph from raw factor lists. Unlike Decomposition this accepts
  /// repeated factors (several candidate models may share a factor), but still
  /// requires coverage and in-range indices.
  static FactorGraph from_factors(std::vector<Factor> factors, std::size_t dim);

  std::size_t dim() const noexcept { return var_to_factors_.size(); }
  std::size_t num_factors() const noexcept { return factor_to_vars_.size(); }
  const std::vector<Factor>& factor_to_vars() const noexcept { return factor_to_vars_; }
  const std::vector<std::vector<std::size_t>>& var_to_factors() const noexcept {
    return var_to_factors_;
  }

 private:
  std::vector<Factor> factor_to_vars_;
  std::vector<std::vector<std::size_t>> var_to_factors_;
};

FactorGraph build_factor_graph(const Decomposition& dec);

/// x restricted to the coordinates in vars.
Vector restrict(const Vector& x, std::span<const std::size_t> vars);

/// Observations collected so far. Rows of `inputs` are query points.
struct Dataset {
  Matrix inputs;                        // t x d
  Vector outputs;                       // t
  std::optional<Matrix> factor_outputs;  // t x n, decomposed-output mode only
  double noise_variance = 0.0;

  Dataset() = default;
  explicit Dataset(std::size_t dim, double noise = 0.0);

  std::size_t size() const noexcept { return static_cast<std::size_t>(outputs.size()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(inputs.cols()); }
  bool empty() const noexcept { return size() == 0; }

  void append(const Vector& x, double y);
  void append(const Vector& x, double y, const Vector& factor_y);

  /// Inputs inside the box and (when present) rows of factor_outputs summing
  /// to outputs within `row_sum_tolerance`.
  void validate(const BoxDomain& domain, double row_sum_tolerance = 1e-6) const;
};

}  // namespace dumbo
