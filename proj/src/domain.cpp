#include "dumbo/domain.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "dumbo/error.hpp"

namespace dumbo {

BoxDomain::BoxDomain(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0) throw Error(ErrorCode::InvalidArgument, "box domain needs at least one dimension");
  if (lower_.size() != upper_.size())
    throw Error(ErrorCode::ShapeMismatch, "box bounds have different lengths");
  for (Eigen::Index j = 0; j < lower_.size(); ++j) {
    if (!(lower_[j] < upper_[j]))
      throw Error(ErrorCode::InvalidArgument, fmt::format("empty box along dimension {}", j + 1));
  }
}

BoxDomain BoxDomain::unit(std::size_t dim) { return uniform(dim, 0.0, 1.0); }

BoxDomain BoxDomain::uniform(std::size_t dim, double lower, double upper) {
  const auto n = static_cast<Eigen::Index>(dim);
  return BoxDomain(Vector::Constant(n, lower), Vector::Constant(n, upper));
}

bool BoxDomain::contains(const Vector& x, double tolerance) const {
  if (x.size() != lower_.size()) return false;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x[j] >= lower_[j] - tolerance && x[j] <= upper_[j] + tolerance)) return false;
  }
  return true;
}

Vector BoxDomain::clip(const Vector& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

Vector BoxDomain::to_unit(const Vector& x) const {
  return (x - lower_).cwiseQuotient(upper_ - lower_);
}

Vector BoxDomain::from_unit(const Vector& u) const {
  return lower_ + u.cwiseProduct(upper_ - lower_);
}

BoxDomain BoxDomain::project(std::span<const std::size_t> vars) const {
  return BoxDomain(restrict(lower_, vars), restrict(upper_, vars));
}

void validate_decomposition(const std::vector<Factor>& factors, std::size_t dim) {
  if (factors.empty()) throw Error(ErrorCode::EmptyFactor, "decomposition has no factors");
  std::vector<bool> covered(dim, false);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i].empty())
      throw Error(ErrorCode::EmptyFactor, fmt::format("factor {} is empty", i + 1));
    for (std::size_t j : factors[i]) {
      if (j >= dim)
        throw Error(ErrorCode::IndexOutOfRange,
                    fmt::format("factor {} references dimension {} but d = {}", i + 1, j + 1, dim));
      covered[j] = true;
    }
  }
  std::set<Factor> seen;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    Factor f = factors[i];
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
    if (!seen.insert(f).second)
      throw Error(ErrorCode::DuplicateFactor, fmt::format("factor {} appears more than once", i + 1));
  }
  for (std::size_t j = 0; j < dim; ++j) {
    if (!covered[j])
      throw Error(ErrorCode::UncoveredDimension, fmt::format("dimension {} is not covered", j + 1));
  }
}

Decomposition::Decomposition(std::vector<Factor> factors, std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "decomposition needs d >= 1");
  validate_decomposition(factors, dim);
  for (auto& f : factors) {
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
  }
  std::sort(factors.begin(), factors.end());
  factors_ = std::move(factors);
}

Decomposition Decomposition::fully_dependent(std::size_t dim) {
  Factor all(dim);
  for (std::size_t j = 0; j < dim; ++j) all[j] = j;
  return Decomposition({all}, dim);
}

Decomposition Decomposition::singletons(std::size_t dim) {
  std::vector<Factor> fs;
  for (std::size_t j = 0; j < dim; ++j) fs.push_back({j});
  return Decomposition(std::move(fs), dim);
}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

Decomposition Decomposition::parse(std::string_view text, std::size_t dim) {
  std::vector<Factor> factors;
  for (auto group : split(text, ';')) {
    Factor f;
    group = trim(group);
    if (group.empty()) {
      factors.push_back(f);
      continue;
    }
    for (auto item : split(group, ',')) {
      item = trim(item);
      std::size_t value = 0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
      if (ec != std::errc() || ptr != item.data() + item.size())
        throw Error(ErrorCode::ParseError, fmt::format("bad dimension index '{}'", item));
      if (value == 0)
        throw Error(ErrorCode::IndexOutOfRange, "dimension indices are 1-based");
      f.push_back(value - 1);
    }
    factors.push_back(std::move(f));
  }
  return Decomposition(std::move(factors), dim);
}

std::string Decomposition::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) out += ';';
    for (std::size_t k = 0; k < factors_[i].size(); ++k) {
      if (k) out += ',';
      out += std::to_string(factors_[i][k] + 1);
    }
  }
  return out;
}

std::size_t Decomposition::max_factor_size() const {
  std::size_t m = 0;
  for (const auto& f : factors_) m = std::max(m, f.size());
  return m;
}

bool Decomposition::is_partition() const {
  std::size_t total = 0;
  for (const auto& f : factors_) total += f.size();
  return total == dim_;
}

FactorGraph FactorGraph::from_factors(std::vector<Factor> factors, std::size_t dim) {
  FactorGraph g;
  g.var_to_factors_.assign(dim, {});
  for (std::size_t i = 0; i < factors.size(); ++i) {
    auto& f = factors[i];
    if (f.empty()) throw Error(ErrorCode::EmptyFactor, fmt::format("factor {} is empty", i + 1));
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
    for (std::size_t j : f) {
      if (j >= dim)
        throw Error(ErrorCode::IndexOutOfRange,
                    fmt::format("factor {} references dimension {} but d = {}", i + 1, j + 1, dim));
      g.var_to_factors_[j].push_back(i);
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    if (g.var_to_factors_[j].empty())
      throw Error(ErrorCode::UncoveredDimension, fmt::format("dimension {} is not covered", j + 1));
  }
  g.factor_to_vars_ = std::move(factors);
  return g;
}

FactorGraph build_factor_graph(const Decomposition& dec) {
  return FactorGraph::from_factors(dec.factors(), dec.dim());
}

Vector restrict(const Vector& x, std::span<const std::size_t> vars) {
  Vector out(static_cast<Eigen::Index>(vars.size()));
  for (std::size_t k = 0; k < vars.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[static_cast<Eigen::Index>(vars[k])];
  return out;
}

Dataset::Dataset(std::size_t dim, double noise)
    : inputs(0, static_cast<Eigen::Index>(dim)), outputs(0), noise_variance(noise) {}

void Dataset::append(const Vector& x, double y) {
  if (x.size() != inputs.cols()) throw Error(ErrorCode::ShapeMismatch, "input has wrong dimension");
  if (factor_outputs)
    throw Error(ErrorCode::MissingFactorOutputs, "decomposed dataset needs factor outputs for every row");
  const auto t = inputs.rows();
  inputs.conservativeResize(t + 1, Eigen::NoChange);
  inputs.row(t) = x.transpose();
  outputs.conservativeResize(t + 1);
  outputs[t] = y;
}

void Dataset::append(const Vector& x, double y, const Vector& factor_y) {
  if (x.size() != inputs.cols()) throw Error(ErrorCode::ShapeMismatch, "input has wrong dimension");
  const auto t = inputs.rows();
  if (!factor_outputs) {
    if (t != 0)
      throw Error(ErrorCode::MissingFactorOutputs, "earlier rows were recorded without factor outputs");
    factor_outputs = Matrix(0, factor_y.size());
  }
  if (factor_outputs->cols() != factor_y.size())
    throw Error(ErrorCode::ShapeMismatch, "factor output has wrong length");
  inputs.conservativeResize(t + 1, Eigen::NoChange);
  inputs.row(t) = x.transpose();
  outputs.conservativeResize(t + 1);
  outputs[t] = y;
  factor_outputs->conservativeResize(t + 1, Eigen::NoChange);
  factor_outputs->row(t) = factor_y.transpose();
}

void Dataset::validate(const BoxDomain& domain, double row_sum_tolerance) const {
  if (inputs.rows() != outputs.size())
    throw Error(ErrorCode::ShapeMismatch, "inputs and outputs have different lengths");
  if (static_cast<std::size_t>(inputs.cols()) != domain.dim())
    throw Error(ErrorCode::ShapeMismatch, "dataset dimension does not match domain");
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    if (!domain.contains(inputs.row(r).transpose()))
      throw Error(ErrorCode::OutOfDomain, fmt::format("input {} lies outside the domain", r + 1));
  }
  if (factor_outputs) {
    if (factor_outputs->rows() != outputs.size())
      throw Error(ErrorCode::ShapeMismatch, "factor outputs have wrong row count");
    for (Eigen::Index r = 0; r < outputs.size(); ++r) {
      const double s = factor_outputs->row(r).sum();
      if (std::abs(s - outputs[r]) > row_sum_tolerance * std::max(1.0, std::abs(outputs[r])))
        throw Error(ErrorCode::RowSumViolation,
                    fmt::format("row {} factor outputs sum to {} instead of {}", r + 1, s, outputs[r]));
    }
  }
}

}  // namespace dumbo
