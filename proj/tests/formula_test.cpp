#include "pctl/formula.hpp"
#include "pctl/markov.hpp"
#include "pctl/modelcheck.hpp"
#include "pctl/syntax.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pctl;
using pctl::fixtures::f;
using pctl::fixtures::Running;

TEST(Parse, RunningExampleFragment) {
    Running r;
    auto parsed = f("F>=0.5[a & F>=0.2[!a]]");
    EXPECT_EQ(parsed, r.f_inner);
    EXPECT_EQ(parsed.bound(), Rational(1, 2));
    EXPECT_EQ(parsed.body().operands()[1].bound(), Rational(1, 5));
}

TEST(Parse, Atom) {
    EXPECT_EQ(f("a"), StateFormula::atom("a"));
    EXPECT_EQ(f("  a  "), StateFormula::atom("a"));
    // F and G are ordinary identifiers unless a comparison follows.
    EXPECT_EQ(f("F"), StateFormula::atom("F"));
}

TEST(Parse, BoundOutOfRange) {
    try {
        parse("F>=1.5[a]");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.pos().column, 4);
        EXPECT_NE(std::string(e.what()).find("outside [0,1]"), std::string::npos);
    }
}

TEST(Parse, ErrorsCarryPosition) {
    try {
        parse("a &\n  (b | ]");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.pos().line, 2);
        EXPECT_EQ(e.pos().column, 8);
    }
    EXPECT_THROW(parse("F=0.5[a]"), ParseError);
    EXPECT_THROW(parse("F>=1/0[a]"), ParseError);
    EXPECT_THROW(parse("F>=0.5[a"), ParseError);
    EXPECT_THROW(parse("a b"), ParseError);
}

TEST(Normalize, DeMorgan) {
    EXPECT_EQ(f("!(a | b)"), StateFormula::conj({StateFormula::neg_atom("a"), StateFormula::neg_atom("b")}));
    EXPECT_EQ(f("!!a"), StateFormula::atom("a"));
}

TEST(Normalize, UpperBoundsBecomeDuals) {
    auto na = StateFormula::neg_atom("a");
    EXPECT_EQ(f("F<=0.3[a]"), StateFormula::prob(PathOp::Globally, Comparison::Geq, Rational(7, 10), na));
    EXPECT_EQ(f("G<0.4[a]"), StateFormula::prob(PathOp::Eventually, Comparison::Gt, Rational(3, 5), na));
    EXPECT_EQ(f("F<0.3[a]"), StateFormula::prob(PathOp::Globally, Comparison::Gt, Rational(7, 10), na));
    EXPECT_EQ(f("G<=0.4[a]"), StateFormula::prob(PathOp::Eventually, Comparison::Geq, Rational(3, 5), na));
    EXPECT_EQ(f("!F>=0.3[a]"), f("F<0.3[a]"));
    EXPECT_EQ(f("G=1[a]"), StateFormula::prob(PathOp::Globally, Comparison::Geq, 1, StateFormula::atom("a")));
}

TEST(Normalize, RejectsTrivialBounds) {
    EXPECT_THROW(parse_formula("F>=0[a]"), NormalizeError);
    EXPECT_THROW(parse_formula("F>1[a]"), NormalizeError);
    EXPECT_THROW(parse_formula("F<=1[a]"), NormalizeError);  // G>=0
    EXPECT_THROW(parse_formula("G<0[a]"), NormalizeError);   // F>1
    EXPECT_THROW(parse_formula("!F<0.2[a] & !F>=1/2[b] | G<=1[c]"), NormalizeError);
}

TEST(Normalize, IdempotentOnPrintedForm) {
    std::mt19937 rng(7);
    for (int i = 0; i < 200; ++i) {
        auto g = fixtures::random_formula(rng, 3);
        EXPECT_EQ(parse_formula(to_string(g)), g) << to_string(g);
    }
}

namespace {

// Direct semantics of surface formulas, with no rewriting.
StateSet eval_surface(const MarkovChain& m, const SurfaceFormula& g) {
    using K = SurfaceFormula::Kind;
    StateSet out = m.empty_set();
    switch (g.kind) {
    case K::Atom:
        for (StateIndex s = 0; s < m.size(); ++s)
            if (m.has_label(s, g.name)) out.set(s);
        return out;
    case K::Not: return ~eval_surface(m, g.operands[0]);
    case K::And:
        out = m.full_set();
        for (const auto& h : g.operands) out &= eval_surface(m, h);
        return out;
    case K::Or:
        for (const auto& h : g.operands) out |= eval_surface(m, h);
        return out;
    case K::Prob: {
        StateSet body = eval_surface(m, g.operands[0]);
        std::vector<Rational> p;
        if (g.op == PathOp::Eventually) {
            p = reach_probabilities(m, body);
        } else {
            p = reach_probabilities(m, ~body);
            for (auto& x : p) x = 1 - x;
        }
        for (StateIndex s = 0; s < m.size(); ++s) {
            bool ok = false;
            switch (g.cmp) {
            case SurfaceCmp::Geq: ok = p[s] >= g.bound; break;
            case SurfaceCmp::Gt: ok = p[s] > g.bound; break;
            case SurfaceCmp::Leq: ok = p[s] <= g.bound; break;
            case SurfaceCmp::Lt: ok = p[s] < g.bound; break;
            case SurfaceCmp::Eq: ok = p[s] == 1; break;
            }
            if (ok) out.set(s);
        }
        return out;
    }
    }
    return out;
}

std::string random_surface(std::mt19937& rng, int depth) {
    static const char* cmps[] = {">=", ">", "<=", "<"};
    static const char* bounds[] = {"0.2", "1/3", "1/2", "0.75"};
    std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 5);
    std::uniform_int_distribution<int> four(0, 3);
    std::bernoulli_distribution coin(0.5);
    std::string ap = coin(rng) ? "a" : "b";
    switch (kind(rng)) {
    case 0: return ap;
    case 1: return "!" + ap;
    case 2: return "(" + random_surface(rng, depth - 1) + " & " + random_surface(rng, depth - 1) + ")";
    case 3: return "!(" + random_surface(rng, depth - 1) + " | " + random_surface(rng, depth - 1) + ")";
    default:
        return std::string(coin(rng) ? "F" : "G") + cmps[four(rng)] + bounds[four(rng)] + "[" +
               random_surface(rng, depth - 1) + "]";
    }
}

}  // namespace

TEST(Normalize, PreservesSemantics) {
    std::mt19937 rng(11);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        auto m = fixtures::random_chain(rng, 1 + i % 5);
        std::string text = random_surface(rng, 3);
        auto surface = parse(text);
        auto core = normalize(surface);
        EXPECT_EQ(sat_set(m, core), eval_surface(m, surface)) << text;
        ++checked;
    }
    EXPECT_EQ(checked, 300);
}

TEST(FormulaSets, RunningExample) {
    Running r;
    FormulaSet x{r.psi, r.g_phi_or, r.f_g_a, r.not_a};
    auto sets = formula_sets(x);
    // Hand enumeration: psi, G(..), phi_or, F(a & F !a), a & F !a, a, F !a, !a, F G a, G a.
    FormulaSet expected_sub{r.psi, r.g_phi_or, r.phi_or, r.f_inner, r.inner, r.a, r.f_not_a, r.not_a, r.f_g_a, r.g_a};
    EXPECT_EQ(sets.sub, expected_sub);
    EXPECT_EQ(sets.sub.size(), 10u);
    EXPECT_EQ(sets.nsub.size(), 5u);
    EXPECT_EQ(sets.psub.size(), 5u);
    PathSet expected_p{r.g_phi_or.path(), r.f_g_a.path()};
    EXPECT_EQ(sets.p, expected_p);
    EXPECT_EQ(sets.maximal_psub, expected_p);
}

TEST(FormulaSets, SingleAtom) {
    auto sets = formula_sets({StateFormula::atom("a")});
    EXPECT_EQ(sets.sub, FormulaSet{StateFormula::atom("a")});
    EXPECT_EQ(sets.nsub, FormulaSet{StateFormula::atom("a")});
    EXPECT_TRUE(sets.psub.empty());
    EXPECT_TRUE(sets.p.empty());
}

TEST(FormulaSets, SubIsClosed) {
    std::mt19937 rng(3);
    for (int i = 0; i < 100; ++i) {
        FormulaSet x{fixtures::random_formula(rng, 3), fixtures::random_formula(rng, 2)};
        EXPECT_EQ(sub(sub(x)), sub(x));
    }
}

TEST(Formula, BoundsCompareExactly) {
    EXPECT_EQ(f("F>=0.5[a]"), f("F>=1/2[a]"));
    EXPECT_NE(f("F>=0.5[a]"), f("F>0.5[a]"));
    EXPECT_EQ(f("F>=0.5[a]").hash(), f("F>=2/4[a]").hash());
}

TEST(Formula, JunctionsFlatten) {
    auto g = f("a & (b & c)");
    ASSERT_EQ(g.kind(), StateFormula::Kind::And);
    EXPECT_EQ(g.operands().size(), 3u);
    EXPECT_EQ(to_string(f("(a | b) & c")), "(a | b) & c");
}

TEST(Fragment, RunningExample) {
    auto m = fragment_classify(f(fixtures::kPsi));
    EXPECT_TRUE(m.in_l2);
    EXPECT_TRUE(m.in_l3);
    EXPECT_FALSE(m.in_l1);
}

TEST(Fragment, NestedGloballyUnderEventually) {
    auto m = fragment_classify(f("F>=0.5[G>=0.5[a]]"));
    EXPECT_TRUE(m.in_l1);
    EXPECT_FALSE(m.in_l2);
}

TEST(Fragment, GrammarCorners) {
    EXPECT_TRUE(fragment_classify(f("G=1[F>0[a] & G=1[b]]")).in_l4);
    EXPECT_FALSE(fragment_classify(f("G=1[F>=0.5[a]]")).in_l4);
    EXPECT_FALSE(fragment_classify(f("G=1[F=1[a]]")).in_l2);
    EXPECT_TRUE(fragment_classify(f("G=1[G=1[F>=0.5[a]]]")).in_l3);
    EXPECT_FALSE(fragment_classify(f("G=1[G=1[F>=0.5[a]]]")).in_l2);
}

namespace {

void collect_variants(const StateFormula& g, std::vector<StateFormula>& out) {
    out.push_back(g);
    if (g.kind() == StateFormula::Kind::And || g.kind() == StateFormula::Kind::Or)
        for (const auto& h : g.operands()) collect_variants(h, out);
    if (g.is_prob()) collect_variants(g.body(), out);
}

}  // namespace

TEST(Fragment, ClosedUnderSubformulae) {
    std::mt19937 rng(5);
    const Fragment all[] = {Fragment::L1, Fragment::L2, Fragment::L3, Fragment::L4};
    int hits = 0;
    for (int i = 0; i < 2000; ++i) {
        auto g = fixtures::random_formula(rng, 3);
        for (auto frag : all) {
            if (!in_fragment(g, frag)) continue;
            ++hits;
            for (const auto& h : sub(g)) EXPECT_TRUE(in_fragment(h, frag)) << to_string(g) << " / " << to_string(h);
            // Top-level bound changes keep the formula in the fragment, except
            // where the grammar pins G to =1.
            if (g.is_prob() && (g.op() == PathOp::Eventually || frag == Fragment::L1)) {
                for (Rational r : {Rational(1, 7), Rational(1)}) {
                    auto v = StateFormula::prob(g.path(), Comparison::Geq, r);
                    EXPECT_TRUE(in_fragment(v, frag)) << to_string(v);
                }
            }
        }
    }
    EXPECT_GT(hits, 100);
}
