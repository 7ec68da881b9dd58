#include "pctl/closure.hpp"
#include "pctl/measure.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pctl;
using pctl::fixtures::example_chain;
using pctl::fixtures::Running;

TEST(PathNorm, RunningExample) {
    Running r;
    EXPECT_EQ(path_norm(r.g_phi_or.path()), 3u);
    EXPECT_EQ(path_norm(r.f_g_a.path()), 2u);
    EXPECT_EQ(path_norm(PathFormula{PathOp::Eventually, r.a}), 1u);
}

TEST(AuxSets, RunningExample) {
    auto m = example_chain();
    Running r;
    ModelChecker mc(m);
    auto x = uc(mc, 0, {r.psi});
    auto aux = aux_sets(mc, 0, x);
    EXPECT_EQ(aux.deg, PathSet{r.g_a.path()});
    EXPECT_TRUE(aux.cf.empty());
    EXPECT_EQ(aux.b, 21u);
}

TEST(AuxSets, EmptySet) {
    auto m = example_chain();
    ModelChecker mc(m);
    auto aux = aux_sets(mc, 0, {});
    EXPECT_TRUE(aux.deg.empty());
    EXPECT_TRUE(aux.cf.empty());
    EXPECT_EQ(aux.b, 2u);
}

TEST(AuxSets, ContinuationFormula) {
    auto m = example_chain();
    ModelChecker mc(m);
    auto g = fixtures::f("F>=0.5[a & F>=0.2[!a]]");
    EXPECT_EQ(cf(mc, 0, {g}), PathSet{g.path()});
    // With G a degraded, u is excluded but t still serves the body.
    auto h = fixtures::f("F>=0.1[a] & F=1[G=1[a]]");
    EXPECT_EQ(cf(mc, 0, {h}).size(), 0u);  // cf looks at members of X only
    EXPECT_EQ(cf(mc, 0, {fixtures::f("F>=0.1[a]"), fixtures::f("F=1[G=1[a]]")}).size(), 1u);
}

TEST(Measure, RunningExample) {
    auto m = example_chain();
    Running r;
    EXPECT_EQ(measure(m, 0, uc(m, 0, {r.psi})), 7u);
}

TEST(Measure, EmptyAndSatisfiedBody) {
    auto m = example_chain();
    EXPECT_EQ(measure(m, 0, {}), 1u);
    EXPECT_EQ(measure(m, 1, {fixtures::f("F>=1/2[a]")}), 1u);
}

TEST(SizeBound, Value) {
    Integer expected = Integer(1) << 21;
    Integer p21 = 1;
    for (int i = 0; i < 8; ++i) p21 *= 21;
    expected = expected * (p21 - 1) / 20;
    EXPECT_EQ(size_bound(21, 7), expected);
    EXPECT_EQ(size_bound(2, 0), 4);
    EXPECT_THROW(size_bound(1, 3), std::invalid_argument);
}

TEST(Properties, SubSizeBelowB) {
    std::mt19937 rng(43);
    int checked = 0;
    while (checked < 200) {
        auto m = fixtures::random_chain(rng, 1 + rng() % 6);
        StateIndex s = rng() % m.size();
        ModelChecker mc(m);
        FormulaSet x;
        for (int k = 0; k < 5; ++k) {
            auto g = fixtures::random_formula(rng, 3);
            if (mc.holds(s, g)) x.insert(g);
        }
        x = update(mc, s, x);
        ASSERT_EQ(update(mc, s, x), x);
        EXPECT_LE(sub(x).size() + 1, b_value(x));
        ++checked;
    }
}

TEST(Properties, SizeBoundMonotone) {
    std::mt19937 rng(47);
    std::uniform_int_distribution<std::uint64_t> bd(2, 40), nd(1, 12);
    for (int i = 0; i < 500; ++i) {
        std::uint64_t b1 = bd(rng), b2 = bd(rng), n1 = nd(rng), n2 = nd(rng);
        if (b1 > b2) std::swap(b1, b2);
        if (n1 > n2) std::swap(n1, n2);
        EXPECT_TRUE(size_chain_holds(b1, n1, b2, n2)) << b1 << " " << n1 << " " << b2 << " " << n2;
    }
}
