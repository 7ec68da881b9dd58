#include "pctl/measure.hpp"

#include <stdexcept>

namespace pctl {

std::uint64_t path_norm(const PathFormula& path) {
    std::uint64_t norm = 1;
    for (const auto& inner : maximal_psub(FormulaSet{path.body})) norm += path_norm(inner);
    return norm;
}

PathSet deg(ModelChecker& mc, StateIndex s, const FormulaSet& xs) {
    PathSet out;
    for (const auto& path : psub(xs)) {
        if (path.op != PathOp::Globally) continue;
        if (mc.prob(s, path) != 1) out.insert(path);
    }
    return out;
}

PathSet cf(ModelChecker& mc, StateIndex s, const FormulaSet& xs) {
    const auto& chain = mc.chain();
    PathSet degraded = deg(mc, s, xs);
    StateSet avoid = chain.empty_set();
    for (const auto& g : degraded) {
        const auto& values = mc.probabilities(g);
        for (StateIndex t = 0; t < chain.size(); ++t)
            if (values[t] == 1) avoid.set(t);
    }
    StateSet reach = reachable_from(chain, s);
    PathSet out;
    for (const auto& f : xs) {
        if (!f.is_prob() || f.op() != PathOp::Eventually) continue;
        if (mc.holds(s, f.body())) continue;
        StateSet good = mc.sat(f.body()) & reach;
        good -= avoid;
        if (good.any()) out.insert(f.path());
    }
    return out;
}

std::uint64_t b_value(const FormulaSet& xs) {
    auto sets = formula_sets(xs);
    FormulaSet proper;
    for (const auto& f : xs) {
        for (const auto& g : sub(f))
            if (!(g == f)) proper.insert(g);
    }
    return 2 + sets.nsub.size() + sets.psub.size() + proper.size();
}

AuxSets aux_sets(ModelChecker& mc, StateIndex s, const FormulaSet& xs) {
    return {deg(mc, s, xs), cf(mc, s, xs), b_value(xs)};
}

std::uint64_t measure(ModelChecker& mc, StateIndex s, const FormulaSet& xs) {
    std::uint64_t psum = 0;
    for (const auto& path : maximal_psub(xs)) psum += path_norm(path);
    std::uint64_t cfsum = 0;
    for (const auto& path : cf(mc, s, xs)) cfsum += path_norm(path);
    return 1 + deg(mc, s, xs).size() * (1 + psum) + cfsum;
}

std::uint64_t measure(const MarkovChain& chain, StateIndex s, const FormulaSet& xs) {
    ModelChecker mc(chain);
    return measure(mc, s, xs);
}

Integer size_bound(std::uint64_t b, std::uint64_t m) {
    if (b < 2) throw std::invalid_argument("size_bound requires b >= 2");
    Integer pow2, powb;
    mpz_ui_pow_ui(pow2.get_mpz_t(), 2, b);
    mpz_ui_pow_ui(powb.get_mpz_t(), b, m + 1);
    return pow2 * (powb - 1) / Integer(b - 1);
}

bool size_chain_holds(std::uint64_t b1, std::uint64_t n1, std::uint64_t b2, std::uint64_t n2) {
    auto term = [](std::uint64_t b, std::uint64_t n) {
        Integer pow2, powb;
        mpz_ui_pow_ui(pow2.get_mpz_t(), 2, b);
        mpz_ui_pow_ui(powb.get_mpz_t(), b, n);
        return Rational(pow2 * (powb - 1), Integer(b - 1));
    };
    Integer lhs;
    mpz_ui_pow_ui(lhs.get_mpz_t(), 2, b1);
    Rational middle = term(b1, n1);
    return Rational(lhs) <= middle && middle <= term(b2, n2);
}

}  // namespace pctl
