#pragma once

#include "pctl/formula.hpp"
#include "pctl/markov.hpp"
#include "pctl/modelcheck.hpp"

#include <stdexcept>

namespace pctl {

/// A set operator was applied at a state that does not satisfy its input.
class PreconditionError : public std::runtime_error {
public:
    PreconditionError(const std::string& state, const StateFormula& falsified);
    const StateFormula& falsified() const { return falsified_; }

private:
    StateFormula falsified_;
};

// All operators take a ModelChecker so that repeated calls on one chain share
// satisfaction sets; the free-standing overloads build a fresh one.

/// Closure of X in s. G bodies are not unfolded.
FormulaSet closure(ModelChecker& mc, StateIndex s, const FormulaSet& xs);
/// Every P(Phi) op r in X replaced by P(Phi) >= Prob_s(Phi).
FormulaSet update(ModelChecker& mc, StateIndex s, const FormulaSet& xs);
/// update after closure.
FormulaSet uc(ModelChecker& mc, StateIndex s, const FormulaSet& xs);
/// P(Phi) >= Prob_t(Phi) for every probabilistic member of X with positive
/// probability at t. No precondition.
FormulaSet theta(ModelChecker& mc, StateIndex t, const FormulaSet& xs);

FormulaSet closure(const MarkovChain& chain, StateIndex s, const FormulaSet& xs);
FormulaSet update(const MarkovChain& chain, StateIndex s, const FormulaSet& xs);
FormulaSet uc(const MarkovChain& chain, StateIndex s, const FormulaSet& xs);
FormulaSet theta(const MarkovChain& chain, StateIndex t, const FormulaSet& xs);

}  // namespace pctl
