#include "pctl/modelcheck.hpp"

namespace pctl {

namespace {

std::vector<Rational> path_probabilities(const MarkovChain& chain, PathOp op, const StateSet& sat_body) {
    if (op == PathOp::Eventually) return reach_probabilities(chain, sat_body);
    auto escape = reach_probabilities(chain, ~sat_body);
    for (auto& p : escape) p = 1 - p;
    return escape;
}

bool compare(const Rational& value, Comparison cmp, const Rational& bound) {
    return cmp == Comparison::Geq ? value >= bound : value > bound;
}

}  // namespace

const StateSet& ModelChecker::sat(const StateFormula& f) {
    if (auto it = sat_memo_.find(f); it != sat_memo_.end()) return it->second;
    StateSet out = chain_.empty_set();
    using Kind = StateFormula::Kind;
    switch (f.kind()) {
    case Kind::Atom:
    case Kind::NegAtom: {
        bool positive = f.kind() == Kind::Atom;
        for (StateIndex s = 0; s < chain_.size(); ++s)
            if (chain_.has_label(s, f.name()) == positive) out.set(s);
        break;
    }
    case Kind::And:
        out = chain_.full_set();
        for (const auto& g : f.operands()) out &= sat(g);
        break;
    case Kind::Or:
        for (const auto& g : f.operands()) out |= sat(g);
        break;
    case Kind::Prob: {
        const auto& values = probabilities(f.path());
        for (StateIndex s = 0; s < chain_.size(); ++s)
            if (compare(values[s], f.cmp(), f.bound())) out.set(s);
        break;
    }
    }
    return sat_memo_.emplace(f, std::move(out)).first->second;
}

const std::vector<Rational>& ModelChecker::probabilities(const PathFormula& path) {
    if (auto it = prob_memo_.find(path); it != prob_memo_.end()) return it->second;
    auto values = path_probabilities(chain_, path.op, sat(path.body));
    return prob_memo_.emplace(path, std::move(values)).first->second;
}

bool ModelChecker::holds_all(StateIndex s, const FormulaSet& xs) {
    for (const auto& f : xs)
        if (!holds(s, f)) return false;
    return true;
}

Rational prob(const MarkovChain& chain, StateIndex s, const PathFormula& path, const StateSet& sat_body) {
    if (s >= chain.size()) throw std::out_of_range("state index out of range");
    return path_probabilities(chain, path.op, sat_body)[s];
}

StateSet sat_set(const MarkovChain& chain, const StateFormula& f) {
    return ModelChecker(chain).sat(f);
}

bool check(const MarkovChain& chain, StateIndex s, const FormulaSet& xs) {
    return ModelChecker(chain).holds_all(s, xs);
}

}  // namespace pctl
