#pragma once

#include "pctl/formula.hpp"
#include "pctl/markov.hpp"

#include <unordered_map>
#include <vector>

namespace pctl {

/// Exact model checker over one chain. Satisfaction sets and path
/// probabilities are memoized per formula for the lifetime of the object.
class ModelChecker {
public:
    explicit ModelChecker(const MarkovChain& chain) : chain_(chain) {}

    const MarkovChain& chain() const { return chain_; }

    const StateSet& sat(const StateFormula& f);
    /// Probability of the path formula from every state.
    const std::vector<Rational>& probabilities(const PathFormula& path);

    Rational prob(StateIndex s, const PathFormula& path) { return probabilities(path).at(s); }
    bool holds(StateIndex s, const StateFormula& f) { return sat(f).test(s); }
    bool holds_all(StateIndex s, const FormulaSet& xs);

private:
    const MarkovChain& chain_;
    std::unordered_map<StateFormula, StateSet, FormulaHash> sat_memo_;
    std::unordered_map<PathFormula, std::vector<Rational>, FormulaHash> prob_memo_;
};

/// F: probability of reaching `sat_body`. G: probability of never leaving it.
Rational prob(const MarkovChain& chain, StateIndex s, const PathFormula& path, const StateSet& sat_body);
StateSet sat_set(const MarkovChain& chain, const StateFormula& f);
/// s satisfies every member of `xs`.
bool check(const MarkovChain& chain, StateIndex s, const FormulaSet& xs);

}  // namespace pctl
