#include "pctl/closure.hpp"

#include <vector>

namespace pctl {

PreconditionError::PreconditionError(const std::string& state, const StateFormula& falsified)
    : std::runtime_error("state '" + state + "' does not satisfy " + to_string(falsified)), falsified_(falsified) {}

namespace {

void require_holds(ModelChecker& mc, StateIndex s, const FormulaSet& xs) {
    for (const auto& f : xs)
        if (!mc.holds(s, f)) throw PreconditionError(mc.chain().id(s), f);
}

}  // namespace

FormulaSet closure(ModelChecker& mc, StateIndex s, const FormulaSet& xs) {
    require_holds(mc, s, xs);
    FormulaSet out;
    std::vector<StateFormula> work(xs.begin(), xs.end());
    using Kind = StateFormula::Kind;
    while (!work.empty()) {
        StateFormula f = work.back();
        work.pop_back();
        if (!out.insert(f).second) continue;
        switch (f.kind()) {
        case Kind::And:
            for (const auto& g : f.operands()) work.push_back(g);
            break;
        case Kind::Or:
            for (const auto& g : f.operands())
                if (mc.holds(s, g)) work.push_back(g);
            break;
        case Kind::Prob:
            if (f.op() == PathOp::Eventually && mc.holds(s, f.body())) work.push_back(f.body());
            break;
        default:
            break;
        }
    }
    return out;
}

FormulaSet update(ModelChecker& mc, StateIndex s, const FormulaSet& xs) {
    require_holds(mc, s, xs);
    FormulaSet out;
    for (const auto& f : xs) {
        if (f.is_prob())
            out.insert(StateFormula::prob(f.path(), Comparison::Geq, mc.prob(s, f.path())));
        else
            out.insert(f);
    }
    return out;
}

FormulaSet uc(ModelChecker& mc, StateIndex s, const FormulaSet& xs) {
    return update(mc, s, closure(mc, s, xs));
}

FormulaSet theta(ModelChecker& mc, StateIndex t, const FormulaSet& xs) {
    FormulaSet out;
    for (const auto& f : xs) {
        if (!f.is_prob()) continue;
        Rational p = mc.prob(t, f.path());
        if (p > 0) out.insert(StateFormula::prob(f.path(), Comparison::Geq, p));
    }
    return out;
}

FormulaSet closure(const MarkovChain& chain, StateIndex s, const FormulaSet& xs) {
    ModelChecker mc(chain);
    return closure(mc, s, xs);
}

FormulaSet update(const MarkovChain& chain, StateIndex s, const FormulaSet& xs) {
    ModelChecker mc(chain);
    return update(mc, s, xs);
}

FormulaSet uc(const MarkovChain& chain, StateIndex s, const FormulaSet& xs) {
    ModelChecker mc(chain);
    return uc(mc, s, xs);
}

FormulaSet theta(const MarkovChain& chain, StateIndex t, const FormulaSet& xs) {
    ModelChecker mc(chain);
    return theta(mc, t, xs);
}

}  // namespace pctl
