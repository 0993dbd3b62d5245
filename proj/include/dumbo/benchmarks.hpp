#pragma once

#include "dumbo/objective.hpp"

namespace dumbo::benchmarks {

inline constexpr double kShcOptimum = 1.0316284534898774;
inline constexpr double kHartmann6Optimum = 3.322368011415514;

// Raw evaluators in maximization form. They throw OutOfDomain outside the box.

/// Six-hump camel on [-3,3] x [-2,2]. Factors {1}, {1,2}, {2}.
double eval_shc(const Vector& x);
Vector shc_factors(const Vector& x);

/// Hartmann-6 on [0,1]^6. The four exponential terms each depend on all six
/// inputs.
double eval_hartmann6(const Vector& x);
Vector hartmann6_terms(const Vector& x);

/// Negated Powell on [-4,5]^24, six blocks of four.
double eval_powell24(const Vector& x);
Vector powell24_factors(const Vector& x);

/// Negated Rastrigin on [-5.12,5.12]^100, twenty blocks of five.
double eval_rastrigin100(const Vector& x);
Vector rastrigin100_factors(const Vector& x);

ObjectiveSpec shc();
/// Known decomposition is the single factor {1..6}; its factor output is the
/// sum of the four terms.
ObjectiveSpec hartmann6();
ObjectiveSpec powell24();
ObjectiveSpec rastrigin100();

}  // namespace dumbo::benchmarks
