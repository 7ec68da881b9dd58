#pragma once

#include "pctl/formula.hpp"
#include "pctl/markov.hpp"
#include "pctl/modelcheck.hpp"

#include <cstdint>

namespace pctl {

/// 1 plus the norms of the outermost path subformulae of the body.
std::uint64_t path_norm(const PathFormula& path);

struct AuxSets {
    PathSet deg;   // G phi in psub(X) with s not satisfying G=1 phi
    PathSet cf;    // F phi with F op r phi in X, see cf()
    std::uint64_t b = 0;
};

PathSet deg(ModelChecker& mc, StateIndex s, const FormulaSet& xs);
/// F phi such that X contains F op r phi, s does not satisfy phi, and some
/// state t reachable from s satisfies phi but no G=1 psi for G psi in deg.
PathSet cf(ModelChecker& mc, StateIndex s, const FormulaSet& xs);
std::uint64_t b_value(const FormulaSet& xs);
AuxSets aux_sets(ModelChecker& mc, StateIndex s, const FormulaSet& xs);

std::uint64_t measure(ModelChecker& mc, StateIndex s, const FormulaSet& xs);
std::uint64_t measure(const MarkovChain& chain, StateIndex s, const FormulaSet& xs);

/// 2^b * (b^(m+1) - 1) / (b - 1). Requires b >= 2.
Integer size_bound(std::uint64_t b, std::uint64_t m);

/// 2^b1 <= 2^b1 (b1^n1 - 1)/(b1 - 1) <= 2^b2 (b2^n2 - 1)/(b2 - 1), evaluated
/// exactly.
bool size_chain_holds(std::uint64_t b1, std::uint64_t n1, std::uint64_t b2, std::uint64_t n2);

}  // namespace pctl
