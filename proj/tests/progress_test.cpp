#include "pctl/closure.hpp"
#include "pctl/measure.hpp"
#include "pctl/progress.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pctl;
using pctl::fixtures::example_chain;
using pctl::fixtures::Running;

namespace {

ProgressLoop example_loop(const Running& r) {
    return {{
        {r.psi, r.g_phi_or, r.phi_or, r.f_inner, r.f_g_a, r.not_a},
        {r.phi_or, r.a},
        {r.phi_or, r.f_inner, r.inner, r.a, r.f_not_a},
    }};
}

bool has(const std::vector<LoopViolation>& vs, LoopCondition c) {
    return std::any_of(vs.begin(), vs.end(), [&](const LoopViolation& v) { return v.condition == c; });
}

std::string describe(const std::vector<LoopViolation>& vs) {
    std::string out;
    for (const auto& v : vs) out += std::string(to_string(v.condition)) + ": " + v.message + "\n";
    return out;
}

// Invariant shared by every loop the tests produce.
void expect_delta_bound(ModelChecker& mc, StateIndex s, const FormulaSet& x, const ProgressLoop& loop) {
    FormulaSet d = delta(loop);
    EXPECT_LE(measure(mc, s, d), measure(mc, s, x));
    FormulaSet universe = sub(x);
    for (const auto& g : d) EXPECT_TRUE(universe.contains(g)) << to_string(g);
}

}  // namespace

TEST(Delta, Example) {
    Running r;
    EXPECT_EQ(delta(example_loop(r)), (FormulaSet{r.g_phi_or, r.f_g_a}));
}

TEST(Delta, AlmostSureWithLateBody) {
    auto fa = fixtures::f("F=1[a]");
    auto a = fixtures::f("a");
    // Body only before the F=1 formula: not discharged.
    EXPECT_EQ(delta({{{a}, {fa}}}), FormulaSet{fa});
    EXPECT_TRUE(delta({{{fa}, {a}}}).empty());
    auto fh = fixtures::f("F>=1/2[a]");
    EXPECT_TRUE(delta({{{a}, {fh}}}).empty());
}

TEST(VerifyLoop, ExampleIsLoop) {
    auto m = example_chain();
    Running r;
    ModelChecker mc(m);
    auto x = uc(mc, 0, {r.psi});
    auto v = verify_loop(mc, 0, x, example_loop(r));
    EXPECT_TRUE(v.empty()) << describe(v);
    expect_delta_bound(mc, 0, x, example_loop(r));
}

TEST(VerifyLoop, MissingGBody) {
    auto m = example_chain();
    Running r;
    ModelChecker mc(m);
    auto x = uc(mc, 0, {r.psi});
    auto loop = example_loop(r);
    loop.sets[1].erase(r.phi_or);
    auto v = verify_loop(mc, 0, x, loop);
    EXPECT_TRUE(has(v, LoopCondition::Local)) << describe(v);
}

TEST(VerifyLoop, Duplicates) {
    auto m = example_chain();
    Running r;
    ModelChecker mc(m);
    auto x = uc(mc, 0, {r.psi});
    auto loop = example_loop(r);
    loop.sets.insert(loop.sets.begin(), loop.sets[0]);
    auto v = verify_loop(mc, 0, x, loop);
    EXPECT_TRUE(has(v, LoopCondition::Distinct));
    EXPECT_FALSE(has(v, LoopCondition::Local));
}

TEST(VerifyLoop, OtherConditions) {
    auto m = example_chain();
    Running r;
    ModelChecker mc(m);
    auto x = uc(mc, 0, {r.psi});

    auto loop = example_loop(r);
    loop.sets[0].erase(r.not_a);
    EXPECT_TRUE(has(verify_loop(mc, 0, x, loop), LoopCondition::Contains));

    loop = example_loop(r);
    loop.sets[1].insert(r.not_a);
    EXPECT_TRUE(has(verify_loop(mc, 0, x, loop), LoopCondition::Local));

    loop = example_loop(r);
    loop.sets[1].insert(fixtures::f("b"));
    EXPECT_TRUE(has(verify_loop(mc, 0, x, loop), LoopCondition::Subset));

    // Dropping the body of F(a & F!a) puts that formula into delta; s does
    // satisfy it, but its body fails at s, so the continuation check decides.
    loop = example_loop(r);
    loop.sets.pop_back();
    auto v = verify_loop(mc, 0, x, loop);
    EXPECT_TRUE(has(v, LoopCondition::Continuation)) << describe(v);

    EXPECT_TRUE(has(verify_loop(mc, 0, x, {}), LoopCondition::Contains));
    EXPECT_TRUE(has(verify_loop(mc, 0, {r.a}, {{{r.a}}}), LoopCondition::Hypothesis));
}

TEST(VerifyLoop, DeltaBodies) {
    // A loop without a keeps F>=1/2 a in delta although a holds at s.
    MarkovChain m;
    auto s = m.add_state("s", {"a"});
    m.add_transition(s, s, 1);
    ModelChecker mc(m);
    auto fa = fixtures::f("F>=1/2[a]");
    auto x = uc(mc, s, {fa});
    ASSERT_TRUE(x.contains(fixtures::f("a")));
    auto v = verify_loop(mc, s, x, {{{fa}}});
    EXPECT_TRUE(has(v, LoopCondition::DeltaBodies)) << describe(v);
    EXPECT_TRUE(verify_loop(mc, s, x, {{x}}).empty());
}

TEST(GenericSearch, FindsLoopOnRunningExample) {
    auto m = example_chain();
    Running r;
    ModelChecker mc(m);
    auto x = uc(mc, 0, {r.psi});
    auto res = search_loop_generic(mc, 0, x, {.max_n = 3});
    ASSERT_EQ(res.status, SearchStatus::Found);
    EXPECT_TRUE(verify_loop(mc, 0, x, *res.loop).empty());
    expect_delta_bound(mc, 0, x, *res.loop);
}

TEST(GenericSearch, SingleSet) {
    auto m = example_chain();
    ModelChecker mc(m);
    FormulaSet x{fixtures::f("a")};
    auto res = search_loop_generic(mc, 1, x);
    ASSERT_EQ(res.status, SearchStatus::Found);
    ASSERT_EQ(res.loop->sets.size(), 1u);
    EXPECT_EQ(res.loop->sets[0], x);
}

TEST(GenericSearch, BoundExhausted) {
    auto m = example_chain();
    Running r;
    ModelChecker mc(m);
    auto x = uc(mc, 0, {r.psi});
    // A single set would have to contain both !a and a.
    auto res = search_loop_generic(mc, 0, x, {.max_n = 0});
    EXPECT_EQ(res.status, SearchStatus::NotFound);
    EXPECT_FALSE(res.loop);
}

TEST(GenericSearch, BudgetSignal) {
    auto m = example_chain();
    Running r;
    ModelChecker mc(m);
    auto x = uc(mc, 0, {r.psi});
    auto res = search_loop_generic(mc, 0, x, {.max_n = 3, .node_budget = 5});
    EXPECT_EQ(res.status, SearchStatus::BudgetExceeded);
    auto wide = search_loop_generic(mc, 0, x, {.max_n = 3, .node_budget = 1000, .max_sub = 4});
    EXPECT_EQ(wide.status, SearchStatus::BudgetExceeded);
}

TEST(L2Search, RunningExample) {
    auto m = example_chain();
    Running r;
    ModelChecker mc(m);
    auto x = uc(mc, 0, {r.psi});
    auto loop = search_loop_L2(mc, 0, x);
    EXPECT_TRUE(verify_loop(mc, 0, x, loop).empty());
    auto d = delta(loop);
    EXPECT_TRUE(std::includes(x.begin(), x.end(), d.begin(), d.end()));
    bool outer = false, body = false;
    for (const auto& l : loop.sets) {
        outer = outer || l.contains(r.f_inner);
        body = body || l.contains(r.inner);
    }
    EXPECT_TRUE(outer);
    EXPECT_TRUE(body);
    EXPECT_EQ(loop.sets[0], (FormulaSet{r.psi, r.g_phi_or, r.phi_or, r.f_inner, r.f_g_a, r.not_a}));
    expect_delta_bound(mc, 0, x, loop);
}

TEST(L2Search, SingleSet) {
    auto m = example_chain();
    ModelChecker mc(m);
    auto loop = search_loop_L2(mc, 1, {fixtures::f("a")});
    ASSERT_EQ(loop.sets.size(), 1u);
}

TEST(L2Search, Errors) {
    auto m = example_chain();
    ModelChecker mc(m);
    EXPECT_THROW(search_loop_L2(mc, 0, {fixtures::f("a")}), LoopSearchError);
    // G with a non-trivial bound is outside L2.
    EXPECT_THROW(search_loop_L2(mc, 1, {fixtures::f("G>=1/3[a]")}), LoopSearchError);
    // Not closed: the conjuncts are missing.
    EXPECT_THROW(search_loop_L2(mc, 1, {fixtures::f("a & F>=1/2[a]")}), LoopSearchError);
}

TEST(Caratheodory, OneDimension) {
    std::vector<std::vector<Rational>> points{{Rational(1, 5)}, {Rational(4, 5)}, {Rational(1, 2)}};
    std::vector<Rational> w{Rational(1, 4), Rational(1, 4), Rational(1, 2)};
    auto res = caratheodory_reduce(points, w);
    ASSERT_LE(res.support.size(), 2u);
    Rational total = 0, value = 0;
    for (std::size_t j = 0; j < res.support.size(); ++j) {
        EXPECT_GT(res.weights[j], 0);
        total += res.weights[j];
        value += res.weights[j] * points[res.support[j]][0];
    }
    EXPECT_EQ(total, 1);
    EXPECT_EQ(value, Rational(1, 2));
}

TEST(Caratheodory, RandomPreservesCombination) {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> coord(0, 6), wt(1, 5), dims(0, 3), count(1, 9);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t d = dims(rng), k = count(rng);
        std::vector<std::vector<Rational>> pts(k, std::vector<Rational>(d));
        std::vector<Rational> w(k);
        Rational sum = 0;
        for (std::size_t i = 0; i < k; ++i) {
            for (auto& c : pts[i]) {
                c = Rational(coord(rng), 6);
                c.canonicalize();
            }
            w[i] = wt(rng);
            sum += w[i];
        }
        for (auto& x : w) x /= sum;
        auto res = caratheodory_reduce(pts, w);
        ASSERT_LE(res.support.size(), d + 1);
        Rational total = 0;
        std::vector<Rational> before(d), after(d);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t c = 0; c < d; ++c) before[c] += w[i] * pts[i][c];
        for (std::size_t j = 0; j < res.support.size(); ++j) {
            EXPECT_GT(res.weights[j], 0);
            total += res.weights[j];
            for (std::size_t c = 0; c < d; ++c) after[c] += res.weights[j] * pts[res.support[j]][c];
        }
        EXPECT_EQ(total, 1);
        EXPECT_EQ(before, after);
    }
}

TEST(SuccessorSelection, RunningExample) {
    auto m = example_chain();
    Running r;
    ModelChecker mc(m);
    auto sel = successor_selection(mc, 0, {r.g_phi_or, r.f_g_a});
    ASSERT_EQ(sel.targets, std::vector<StateIndex>{2});
    EXPECT_EQ(sel.alpha.at(2), 1);
    ASSERT_EQ(sel.paths.size(), 2u);
    EXPECT_EQ(sel.paths[0], r.f_g_a.path());
    EXPECT_EQ(sel.values.at(2), (std::vector<Rational>{1, 1}));
    EXPECT_THROW(successor_selection(mc, 0, {r.a}), std::invalid_argument);
}

TEST(SuccessorSelection, NoEventually) {
    auto m = example_chain();
    ModelChecker mc(m);
    auto sel = successor_selection(mc, 1, {fixtures::f("G>=1/3[a]")});
    ASSERT_EQ(sel.targets.size(), 1u);
    EXPECT_EQ(sel.alpha.at(sel.targets[0]), 1);
}

TEST(BuildLoopModel, RunningExample) {
    auto m = example_chain();
    Running r;
    auto x = uc(m, 0, {r.psi});
    auto loop = example_loop(r);
    EXPECT_EQ(loop_epsilon(loop), Rational(3, 4));
    MarkovChain u;
    u.add_state("u", {"a"});
    u.add_transition(0, 0, 1);
    auto model = build_loop_model(loop, x, {{u, 0, 1}});
    EXPECT_EQ(model.chain.size(), 4u);
    EXPECT_EQ(model.entry, 0u);
    EXPECT_EQ(model.epsilon, Rational(3, 4));
    EXPECT_TRUE(validate(model.chain).empty());
    EXPECT_TRUE(check(model.chain, model.entry, x));
    EXPECT_TRUE(check(model.chain, model.entry, {r.psi}));
    EXPECT_TRUE(loops_have_single_exit(model.chain));
    EXPECT_EQ(model.chain.probability(2, 0), Rational(3, 4));
    EXPECT_EQ(model.chain.probability(2, 3), Rational(1, 4));
    // Non-delta F formulas are met with probability at least epsilon.
    ModelChecker mm(model.chain);
    for (StateIndex i = 0; i < 3; ++i)
        for (const auto& g : loop.sets[i])
            if (g.is_prob() && g.op() == PathOp::Eventually && !delta(loop).contains(g))
                EXPECT_GE(mm.prob(i, g.path()), model.epsilon);
}

TEST(BuildLoopModel, SingleSetAndErrors) {
    auto a = fixtures::f("a");
    MarkovChain sink;
    sink.add_state("z", {"a"});
    sink.add_transition(0, 0, 1);
    auto model = build_loop_model({{{a}}}, {a}, {{sink, 0, 1}});
    EXPECT_EQ(model.epsilon, Rational(1, 2));
    EXPECT_EQ(model.chain.size(), 2u);
    EXPECT_TRUE(check(model.chain, model.entry, {a}));
    EXPECT_THROW(build_loop_model({{{a}}}, {a}, {{sink, 0, Rational(1, 2)}}), std::invalid_argument);
    EXPECT_THROW(build_loop_model({{{a}}}, {fixtures::f("b")}, {{sink, 0, 1}}), std::invalid_argument);
    EXPECT_THROW(build_loop_model({{{a}}}, {a}, {{sink, 0, 1}}, Rational(1)), std::invalid_argument);
}

TEST(BsccReduce, Examples) {
    auto m = example_chain();
    ModelChecker mc(m);
    auto [one, e1] = bscc_reduce(mc, 2, {fixtures::f("G=1[a]")});
    EXPECT_EQ(one.size(), 1u);
    EXPECT_TRUE(one.has_label(e1, "a"));
    EXPECT_THROW(bscc_reduce(mc, 0, {}), std::invalid_argument);

    MarkovChain cyc;
    for (int i = 0; i < 3; ++i) cyc.add_state("c" + std::to_string(i), {"a"});
    for (int i = 0; i < 3; ++i) cyc.add_transition(i, (i + 1) % 3, 1);
    ModelChecker mc2(cyc);
    EXPECT_EQ(bscc_reduce(mc2, 1, {fixtures::f("G=1[a]")}).first.size(), 1u);

    MarkovChain mixed;
    mixed.add_state("p", {"a"});
    mixed.add_state("q", {"a"});
    mixed.add_state("r", {"b"});
    mixed.add_transition(0, 1, 1);
    mixed.add_transition(1, 2, 1);
    mixed.add_transition(2, 0, Rational(1, 2));
    mixed.add_transition(2, 1, Rational(1, 2));
    ModelChecker mc3(mixed);
    FormulaSet x{fixtures::f("F=1[a]"), fixtures::f("F=1[b]")};
    auto [two, e3] = bscc_reduce(mc3, 2, x);
    EXPECT_EQ(two.size(), 2u);
    EXPECT_EQ(two.id(e3), "r");
    EXPECT_TRUE(check(two, e3, x));
}

TEST(BsccReduce, RandomInstances) {
    std::mt19937 rng(61);
    int done = 0;
    while (done < 50) {
        auto m = fixtures::random_chain(rng, 2 + rng() % 6);
        auto bottom = bscc_states(m);
        StateIndex t = rng() % m.size();
        if (!bottom.test(t)) continue;
        ModelChecker mc(m);
        FormulaSet x;
        for (int k = 0; k < 4; ++k) {
            auto g = fixtures::random_formula(rng, 3);
            if (mc.holds(t, g)) x.insert(g);
        }
        auto [red, entry] = bscc_reduce(mc, t, x);
        EXPECT_TRUE(check(red, entry, x));
        EXPECT_TRUE(validate(red).empty());
        EXPECT_LE(red.size(), std::size_t{1} << std::min<std::size_t>(sub(x).size(), 20));
        ++done;
    }
}

TEST(Compress, RunningExample) {
    auto m = example_chain();
    Running r;
    auto res = compress_model(m, 0, r.psi);
    EXPECT_LE(res.chain.size(), 5u);
    EXPECT_TRUE(check(res.chain, res.entry, {r.psi}));
    EXPECT_TRUE(validate(res.chain).empty());
    EXPECT_TRUE(res.bounds_respected);
    EXPECT_TRUE(res.measure_decreased);
    EXPECT_TRUE(loops_have_single_exit(res.chain));
    EXPECT_EQ(res.trace["measure"], 7);
    ASSERT_EQ(res.trace["children"].size(), 1u);
    const auto& child = res.trace["children"][0];
    EXPECT_EQ(child["state"], "u");
    EXPECT_LT(child["measure"].get<int>(), 7);
    EXPECT_EQ(child["alpha"], "1");
}

TEST(Compress, GenericStrategy) {
    auto m = example_chain();
    Running r;
    auto res = compress_model(m, 0, r.psi, {.strategy = LoopStrategy::Generic});
    EXPECT_TRUE(check(res.chain, res.entry, {r.psi}));
    EXPECT_TRUE(res.bounds_respected);
    EXPECT_TRUE(loops_have_single_exit(res.chain));
}

TEST(Compress, BsccBaseCase) {
    MarkovChain m;
    m.add_state("x", {"a"});
    m.add_state("y", {"a"});
    m.add_transition(0, 1, 1);
    m.add_transition(1, 0, 1);
    auto res = compress_model(m, 0, fixtures::f("G=1[a]"));
    EXPECT_EQ(res.chain.size(), 1u);
    EXPECT_EQ(res.trace["kind"], "bscc");
}

TEST(Compress, Errors) {
    auto m = example_chain();
    EXPECT_THROW(compress_model(m, 0, fixtures::f("a")), CompressError);
    EXPECT_THROW(compress_model(m, 1, fixtures::f("G>=1/3[a]")), CompressError);
}

// Random L2 instances: compression succeeds, respects the bound at every
// level and keeps the single-exit shape.
TEST(Properties, CompressRandomL2) {
    std::mt19937 rng(71);
    int done = 0, tries = 0;
    const char* pool[] = {"G=1[a | F>=1/2[b]]", "F>=1/3[b]", "F=1[G=1[a]]", "F>=1/2[a & F>=1/5[b]]",
                          "G=1[F>=1/2[a] | b]", "F>1/4[!a]", "b | F>=2/3[a]", "G=1[F=1[a] | b]"};
    while (done < 100 && tries < 20000) {
        ++tries;
        auto m = fixtures::random_chain(rng, 2 + rng() % 5);
        StateIndex s = rng() % m.size();
        std::vector<StateFormula> parts;
        for (int k = 0; k < 2; ++k) parts.push_back(fixtures::f(pool[rng() % 8]));
        auto psi = StateFormula::conj(parts);
        if (!in_fragment(psi, Fragment::L2) || !check(m, s, {psi})) continue;
        auto res = compress_model(m, s, psi);
        EXPECT_TRUE(check(res.chain, res.entry, {psi}));
        EXPECT_TRUE(res.bounds_respected);
        EXPECT_TRUE(loops_have_single_exit(res.chain));
        ++done;
    }
    EXPECT_EQ(done, 100);
}

// Every loop found on random instances satisfies the delta bound.
TEST(Properties, DeltaMeasureBound) {
    std::mt19937 rng(73);
    int done = 0, tries = 0;
    while (done < 100 && tries < 20000) {
        ++tries;
        auto m = fixtures::random_chain(rng, 2 + rng() % 4);
        StateIndex s = rng() % m.size();
        ModelChecker mc(m);
        auto psi = fixtures::random_formula(rng, 3);
        if (!mc.holds(s, psi)) continue;
        auto x = uc(mc, s, {psi});
        std::optional<ProgressLoop> loop;
        if (in_fragment(psi, Fragment::L2)) {
            loop = search_loop_L2(mc, s, x);
        } else {
            auto res = search_loop_generic(mc, s, x, {.max_n = 2, .node_budget = 200'000, .max_sub = 12});
            loop = res.loop;
        }
        if (!loop) continue;
        ASSERT_TRUE(verify_loop(mc, s, x, *loop).empty());
        expect_delta_bound(mc, s, x, *loop);
        ++done;
    }
    EXPECT_EQ(done, 100);
}

// Whenever the three hypotheses hold, the measure strictly decreases.
TEST(Properties, MeasureDecreasesAtSuccessor) {
    std::mt19937 rng(79);
    int done = 0, tries = 0;
    while (done < 150 && tries < 50000) {
        ++tries;
        auto m = fixtures::random_chain(rng, 2 + rng() % 5);
        StateIndex s = rng() % m.size(), t = rng() % m.size();
        ModelChecker mc(m);
        FormulaSet x;
        for (int k = 0; k < 3; ++k) x.insert(fixtures::random_formula(rng, 3));
        bool some_body = false, bodies_fail = true;
        for (const auto& g : x) {
            if (!g.is_prob() || g.op() != PathOp::Eventually) continue;
            bodies_fail = bodies_fail && !mc.holds(s, g.body());
            some_body = some_body || mc.holds(t, g.body());
        }
        if (!some_body || !bodies_fail || !reachable_from(m, s).test(t)) continue;
        auto xt = uc(mc, t, theta(mc, t, x));
        EXPECT_LT(measure(mc, t, xt), measure(mc, s, x)) << to_string(x) << " s=" << s << " t=" << t;
        ++done;
    }
    EXPECT_EQ(done, 150);
}
