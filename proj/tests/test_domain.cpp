#include <random>

#include "dumbo/domain.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dumbo;

TEST_CASE("decomposition validation") {
  CHECK_NOTHROW(Decomposition({{0, 1}, {2}}, 3));
  CHECK_NOTHROW(Decomposition({{0, 1}, {1, 2}}, 3));
  CHECK_ERROR_CODE(Decomposition({{0, 1}}, 3), ErrorCode::UncoveredDimension);
  CHECK_ERROR_CODE(Decomposition({{0, 1}, {}}, 2), ErrorCode::EmptyFactor);
  CHECK_ERROR_CODE(Decomposition({{0, 3}}, 3), ErrorCode::IndexOutOfRange);
  CHECK_ERROR_CODE(Decomposition({{0, 1}, {1, 0}}, 2), ErrorCode::DuplicateFactor);

  try {
    validate_decomposition({{0, 1}}, 3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find('3') != std::string::npos);
  }
}

TEST_CASE("decomposition text format and canonical order") {
  const auto dec = Decomposition::parse("2,3;1,2", 3);
  CHECK(dec.to_string() == "1,2;2,3");
  CHECK(dec.factor(0) == Factor{0, 1});
  CHECK(dec == Decomposition({{1, 2}, {0, 1}}, 3));
  CHECK(dec.max_factor_size() == 2);
  CHECK_FALSE(dec.is_partition());
  CHECK(Decomposition::singletons(3).is_partition());
  CHECK(Decomposition::fully_dependent(3).to_string() == "1,2,3");
  CHECK_ERROR_CODE(Decomposition::parse("1,x", 2), ErrorCode::ParseError);
}

TEST_CASE("factor graph adjacency") {
  const auto g = build_factor_graph(Decomposition::parse("1,2;2,3", 3));
  CHECK(g.var_to_factors()[0] == std::vector<std::size_t>{0});
  CHECK(g.var_to_factors()[1] == std::vector<std::size_t>{0, 1});
  CHECK(g.var_to_factors()[2] == std::vector<std::size_t>{1});

  const auto s = build_factor_graph(Decomposition::parse("1;2", 2));
  CHECK(s.var_to_factors()[0] == std::vector<std::size_t>{0});
  CHECK(s.var_to_factors()[1] == std::vector<std::size_t>{1});

  const auto full = build_factor_graph(Decomposition::fully_dependent(3));
  for (const auto& f : full.var_to_factors()) CHECK(f == std::vector<std::size_t>{0});
}

TEST_CASE("factor graph round trip and coverage on random decompositions") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + trial % 7;
    const auto fs = oracle::random_factors(rng, d, 4);
    const Decomposition dec(fs, d);
    const auto g = build_factor_graph(dec);
    CHECK(g.factor_to_vars() == dec.factors());
    std::size_t lhs = 0, rhs = 0;
    for (const auto& f : g.var_to_factors()) {
      CHECK(!f.empty());
      lhs += f.size();
    }
    for (const auto& v : dec.factors()) rhs += v.size();
    CHECK(lhs == rhs);
    for (std::size_t i = 0; i < dec.size(); ++i)
      for (std::size_t j : dec.factor(i)) {
        const auto& inc = g.var_to_factors()[j];
        CHECK(std::find(inc.begin(), inc.end(), i) != inc.end());
      }
  }
}

TEST_CASE("factor graph accepts repeated factors") {
  const auto g = FactorGraph::from_factors({{0}, {0}, {1}}, 2);
  CHECK(g.num_factors() == 3);
  CHECK(g.var_to_factors()[0].size() == 2);
  CHECK_ERROR_CODE(FactorGraph::from_factors({{0}}, 2), ErrorCode::UncoveredDimension);
}

TEST_CASE("box domain maps") {
  const BoxDomain box(Vector::Constant(2, -3.0), Vector::Constant(2, 5.0));
  const Vector x = (Vector(2) << -3.0, 1.0).finished();
  CHECK(box.to_unit(x).isApprox((Vector(2) << 0.0, 0.5).finished()));
  CHECK(box.from_unit(box.to_unit(x)).isApprox(x));
  CHECK(box.contains(x));
  CHECK_FALSE(box.contains(Vector::Constant(2, 6.0)));
  CHECK(box.clip(Vector::Constant(2, 9.0)) == Vector::Constant(2, 5.0));
  const std::vector<std::size_t> vars{1};
  CHECK(box.project(vars).dim() == 1);
  CHECK_ERROR_CODE(BoxDomain(Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)), ErrorCode::InvalidArgument);
}

TEST_CASE("dataset row sums") {
  Dataset ds(2, 0.0);
  ds.append(Vector::Constant(2, 0.5), 3.0, (Vector(2) << 1.0, 2.0).finished());
  CHECK_NOTHROW(ds.validate(BoxDomain::unit(2)));
  ds.factor_outputs.value()(0, 0) = 5.0;
  CHECK_ERROR_CODE(ds.validate(BoxDomain::unit(2)), ErrorCode::RowSumViolation);

  Dataset outside(1, 0.0);
  outside.append(Vector::Constant(1, 2.0), 0.0);
  CHECK_ERROR_CODE(outside.validate(BoxDomain::unit(1)), ErrorCode::OutOfDomain);
}
