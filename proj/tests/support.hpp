#pragma once

#include "pctl/formula.hpp"
#include "pctl/markov.hpp"
#include "pctl/syntax.hpp"

#include <random>
#include <string>
#include <vector>

namespace pctl::fixtures {

inline const char* const kPsi = "G=1[F>=0.5[a & F>=0.2[!a]] | a] & F=1[G=1[a]] & !a";

// s -> t (1); t -> s (3/5), t -> u (2/5); u -> u (1). a holds on t and u.
inline MarkovChain example_chain() {
    MarkovChain m;
    auto s = m.add_state("s");
    auto t = m.add_state("t", {"a"});
    auto u = m.add_state("u", {"a"});
    m.add_transition(s, t, 1);
    m.add_transition(t, s, Rational(3, 5));
    m.add_transition(t, u, Rational(2, 5));
    m.add_transition(u, u, 1);
    return m;
}

inline StateFormula f(const std::string& text) { return parse_formula(text); }

inline FormulaSet fs(std::initializer_list<const char*> texts) {
    FormulaSet out;
    for (const char* t : texts) out.insert(parse_formula(t));
    return out;
}

// Running-example pieces, built by hand rather than through the parser.
struct Running {
    StateFormula a = StateFormula::atom("a");
    StateFormula not_a = StateFormula::neg_atom("a");
    StateFormula f_not_a = StateFormula::prob(PathOp::Eventually, Comparison::Geq, Rational(1, 5), not_a);
    StateFormula inner = StateFormula::conj({a, f_not_a});
    StateFormula f_inner = StateFormula::prob(PathOp::Eventually, Comparison::Geq, Rational(1, 2), inner);
    StateFormula phi_or = StateFormula::disj({f_inner, a});
    StateFormula g_phi_or = StateFormula::prob(PathOp::Globally, Comparison::Geq, 1, phi_or);
    StateFormula g_a = StateFormula::prob(PathOp::Globally, Comparison::Geq, 1, a);
    StateFormula f_g_a = StateFormula::prob(PathOp::Eventually, Comparison::Geq, 1, g_a);
    StateFormula psi = StateFormula::conj({g_phi_or, f_g_a, not_a});
};

// Random chain over `n` states with labels drawn from {a, b}. Probabilities
// have small denominators so exact arithmetic stays cheap.
inline MarkovChain random_chain(std::mt19937& rng, std::size_t n, int max_out = 3) {
    MarkovChain m;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n; ++i) {
        std::set<std::string> labels;
        if (coin(rng)) labels.insert("a");
        if (coin(rng)) labels.insert("b");
        m.add_state("s" + std::to_string(i), labels);
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_int_distribution<int> outdeg(1, max_out);
    std::uniform_int_distribution<int> weight(1, 4);
    for (std::size_t i = 0; i < n; ++i) {
        std::set<std::size_t> targets;
        int k = outdeg(rng);
        for (int j = 0; j < k; ++j) targets.insert(pick(rng));
        std::vector<int> w;
        int total = 0;
        for (std::size_t j = 0; j < targets.size(); ++j) {
            w.push_back(weight(rng));
            total += w.back();
        }
        std::size_t j = 0;
        for (auto t : targets) m.add_transition(i, t, Rational(w[j++], total));
    }
    return m;
}

inline Rational random_bound(std::mt19937& rng) {
    static const Rational choices[] = {Rational(1, 5), Rational(1, 3), Rational(1, 2), Rational(2, 3), Rational(4, 5), 1};
    std::uniform_int_distribution<int> pick(0, 5);
    return choices[pick(rng)];
}

// Random core formula of bounded depth over atoms a, b.
inline StateFormula random_formula(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 5);
    std::bernoulli_distribution coin(0.5);
    std::string ap = coin(rng) ? "a" : "b";
    switch (kind(rng)) {
    case 0: return StateFormula::atom(ap);
    case 1: return StateFormula::neg_atom(ap);
    case 2: return StateFormula::conj({random_formula(rng, depth - 1), random_formula(rng, depth - 1)});
    case 3: return StateFormula::disj({random_formula(rng, depth - 1), random_formula(rng, depth - 1)});
    default: {
        PathOp op = coin(rng) ? PathOp::Eventually : PathOp::Globally;
        Rational r = random_bound(rng);
        Comparison cmp = (r != 1 && coin(rng)) ? Comparison::Gt : Comparison::Geq;
        return StateFormula::prob(op, cmp, r, random_formula(rng, depth - 1));
    }
    }
}

}  // namespace pctl::fixtures
