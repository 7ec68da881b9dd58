#include "pctl/progress.hpp"

#include "pctl/closure.hpp"
#include "pctl/linalg.hpp"
#include "pctl/measure.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

namespace pctl {

std::string to_string(const ProgressLoop& loop) {
    std::string out;
    for (std::size_t i = 0; i < loop.sets.size(); ++i)
        out += "L" + std::to_string(i) + " = " + to_string(loop.sets[i]) + "\n";
    return out;
}

namespace {

FormulaSet union_of(const std::vector<FormulaSet>& sets, std::size_t from = 0) {
    FormulaSet out;
    for (std::size_t i = from; i < sets.size(); ++i) out.insert(sets[i].begin(), sets[i].end());
    return out;
}

bool is_f(const StateFormula& g) { return g.is_prob() && g.op() == PathOp::Eventually; }
bool is_g(const StateFormula& g) { return g.is_prob() && g.op() == PathOp::Globally; }

bool includes(const FormulaSet& big, const FormulaSet& small) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

FormulaSet delta(const ProgressLoop& loop) {
    const auto& sets = loop.sets;
    std::vector<FormulaSet> suffix(sets.size() + 1);
    for (std::size_t i = sets.size(); i-- > 0;) {
        suffix[i] = suffix[i + 1];
        suffix[i].insert(sets[i].begin(), sets[i].end());
    }
    const FormulaSet& all = suffix.front();
    FormulaSet out;
    for (const auto& g : all) {
        if (is_g(g)) {
            out.insert(g);
        } else if (is_f(g)) {
            if (!all.contains(g.body())) {
                out.insert(g);
                continue;
            }
            if (!g.is_almost_sure()) continue;
            for (std::size_t i = 0; i < sets.size(); ++i) {
                if (sets[i].contains(g) && !suffix[i].contains(g.body())) {
                    out.insert(g);
                    break;
                }
            }
        }
    }
    return out;
}

const char* to_string(LoopCondition c) {
    switch (c) {
    case LoopCondition::Hypothesis: return "hypothesis";
    case LoopCondition::Subset: return "subset";
    case LoopCondition::Contains: return "(1) contains X";
    case LoopCondition::Distinct: return "(2) distinct";
    case LoopCondition::Local: return "(3) local rules";
    case LoopCondition::DeltaHolds: return "(4) s satisfies delta";
    case LoopCondition::DeltaBodies: return "(5) delta bodies fail at s";
    case LoopCondition::Continuation: return "(6) continuation formulas";
    }
    return "?";
}

namespace {

// Violations of the local rules for one set; `all_sets` for the G rule.
void check_local(const FormulaSet& set, std::size_t i, const std::vector<FormulaSet>& all_sets,
                 std::vector<LoopViolation>& out) {
    const std::string where = "L" + std::to_string(i);
    using Kind = StateFormula::Kind;
    for (const auto& g : set) {
        switch (g.kind()) {
        case Kind::Atom:
            if (set.contains(StateFormula::neg_atom(g.name())))
                out.push_back({LoopCondition::Local, where + " contains both " + g.name() + " and !" + g.name()});
            break;
        case Kind::And:
            for (const auto& h : g.operands())
                if (!set.contains(h))
                    out.push_back({LoopCondition::Local,
                                   where + " contains " + to_string(g) + " but not the conjunct " + to_string(h)});
            break;
        case Kind::Or: {
            bool any = std::any_of(g.operands().begin(), g.operands().end(),
                                   [&](const StateFormula& h) { return set.contains(h); });
            if (!any) out.push_back({LoopCondition::Local, where + " contains " + to_string(g) + " but no disjunct"});
            break;
        }
        case Kind::Prob:
            if (g.op() == PathOp::Globally) {
                for (std::size_t j = 0; j < all_sets.size(); ++j)
                    if (!all_sets[j].contains(g.body()))
                        out.push_back({LoopCondition::Local, where + " contains " + to_string(g) + " but L" +
                                                                 std::to_string(j) + " lacks its body"});
            }
            break;
        default:
            break;
        }
    }
}

}  // namespace

std::vector<LoopViolation> verify_loop(ModelChecker& mc, StateIndex s, const FormulaSet& xs, const ProgressLoop& loop) {
    std::vector<LoopViolation> out;
    const auto& sets = loop.sets;

    bool holds = true;
    for (const auto& g : xs) {
        if (!mc.holds(s, g)) {
            holds = false;
            out.push_back({LoopCondition::Hypothesis, "s does not satisfy " + to_string(g)});
        }
    }
    if (holds && uc(mc, s, xs) != xs)
        out.push_back({LoopCondition::Hypothesis, "X is not closed and updated at s"});

    if (sets.empty()) {
        out.push_back({LoopCondition::Contains, "the loop has no sets"});
        return out;
    }

    FormulaSet universe = sub(xs);
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (const auto& g : sets[i])
            if (!universe.contains(g))
                out.push_back({LoopCondition::Subset, "L" + std::to_string(i) + " contains " + to_string(g) +
                                                          ", which is not a subformula of X"});

    if (std::none_of(sets.begin(), sets.end(), [&](const FormulaSet& l) { return includes(l, xs); }))
        out.push_back({LoopCondition::Contains, "no set of the loop contains X"});

    for (std::size_t i = 0; i < sets.size(); ++i)
        for (std::size_t j = i + 1; j < sets.size(); ++j)
            if (sets[i] == sets[j])
                out.push_back({LoopCondition::Distinct,
                               "L" + std::to_string(i) + " and L" + std::to_string(j) + " are equal"});

    for (std::size_t i = 0; i < sets.size(); ++i) check_local(sets[i], i, sets, out);

    FormulaSet d = delta(loop);
    for (const auto& g : d) {
        if (!mc.holds(s, g)) out.push_back({LoopCondition::DeltaHolds, "s does not satisfy " + to_string(g)});
        if (is_f(g) && mc.holds(s, g.body()))
            out.push_back({LoopCondition::DeltaBodies, "s satisfies the body of " + to_string(g)});
    }

    PathSet cf_delta = cf(mc, s, d);
    PathSet cf_x = cf(mc, s, xs);
    for (const auto& p : cf_delta)
        if (!cf_x.contains(p))
            out.push_back({LoopCondition::Continuation, to_string(p) + " is in cf(delta) but not in cf(X)"});
    return out;
}

// ---------------------------------------------------------------------------
// Generic search

namespace {

using Mask = std::uint32_t;

class GenericSearch {
public:
    GenericSearch(ModelChecker& mc, StateIndex s, const FormulaSet& xs, const GenericSearchOptions& options)
        : mc_(mc), s_(s), xs_(xs), options_(options) {}

    SearchResult run() {
        FormulaSet universe = sub(xs_);
        items_.assign(universe.begin(), universe.end());
        if (items_.size() > options_.max_sub) return {SearchStatus::BudgetExceeded, std::nullopt, 0};
        for (std::size_t i = 0; i < items_.size(); ++i) index_.emplace(items_[i], i);
        x_mask_ = mask_of(xs_);
        cf_x_ = cf(mc_, s_, xs_);
        build_candidates();

        std::size_t limit = options_.max_n;
        if (items_.size() < 32) limit = std::min<std::size_t>(limit, (std::size_t{1} << items_.size()) - 1);
        for (std::size_t length = 1; length <= limit + 1; ++length) {
            sequence_.clear();
            if (dfs(length, required_, ~Mask{0})) {
                ProgressLoop loop = to_loop(sequence_);
                if (!verify_loop(mc_, s_, xs_, loop).empty())
                    throw std::logic_error("generic search produced an invalid loop");
                return {SearchStatus::Found, loop, nodes_};
            }
            if (exceeded_) return {SearchStatus::BudgetExceeded, std::nullopt, nodes_};
        }
        return {SearchStatus::NotFound, std::nullopt, nodes_};
    }

private:
    ModelChecker& mc_;
    StateIndex s_;
    const FormulaSet& xs_;
    GenericSearchOptions options_;
    std::vector<StateFormula> items_;
    std::unordered_map<StateFormula, std::size_t, FormulaHash> index_;
    Mask x_mask_ = 0;
    Mask required_ = 0;
    PathSet cf_x_;
    std::vector<Mask> candidates_;
    std::vector<Mask> g_bodies_;  // per candidate
    std::vector<Mask> sequence_;
    std::unordered_map<std::uint64_t, bool> delta_ok_;
    std::uint64_t nodes_ = 0;
    bool exceeded_ = false;

    Mask bit(const StateFormula& g) const { return Mask{1} << index_.at(g); }

    Mask mask_of(const FormulaSet& set) const {
        Mask m = 0;
        for (const auto& g : set) m |= bit(g);
        return m;
    }

    FormulaSet set_of(Mask m) const {
        FormulaSet out;
        for (std::size_t i = 0; i < items_.size(); ++i)
            if (m & (Mask{1} << i)) out.insert(items_[i]);
        return out;
    }

    ProgressLoop to_loop(const std::vector<Mask>& seq) const {
        ProgressLoop loop;
        for (Mask m : seq) loop.sets.push_back(set_of(m));
        return loop;
    }

    void build_candidates() {
        const std::size_t k = items_.size();
        using Kind = StateFormula::Kind;
        std::vector<Mask> and_need(k, 0), or_any(k, 0), conflict(k, 0), g_body(k, 0);
        for (std::size_t i = 0; i < k; ++i) {
            const auto& g = items_[i];
            if (g.kind() == Kind::And)
                for (const auto& h : g.operands()) and_need[i] |= bit(h);
            if (g.kind() == Kind::Or)
                for (const auto& h : g.operands()) or_any[i] |= bit(h);
            if (g.kind() == Kind::Atom) {
                auto neg = StateFormula::neg_atom(g.name());
                if (index_.contains(neg)) conflict[i] = bit(neg);
            }
            if (is_g(g)) g_body[i] = bit(g.body());
        }
        // Every set must contain the G bodies and conjuncts forced by X.
        FormulaSet forced;
        std::vector<StateFormula> work;
        for (const auto& g : xs_)
            if (is_g(g)) work.push_back(g.body());
        while (!work.empty()) {
            auto g = work.back();
            work.pop_back();
            if (!forced.insert(g).second) continue;
            if (g.kind() == Kind::And)
                for (const auto& h : g.operands()) work.push_back(h);
            if (is_g(g)) work.push_back(g.body());
        }
        required_ = mask_of(forced);

        const std::uint64_t total = std::uint64_t{1} << k;
        for (std::uint64_t raw = 0; raw < total; ++raw) {
            Mask m = static_cast<Mask>(raw);
            if ((m & required_) != required_) continue;
            bool ok = true;
            Mask bodies = 0;
            for (std::size_t i = 0; i < k && ok; ++i) {
                if (!(m & (Mask{1} << i))) continue;
                if (m & conflict[i]) ok = false;
                if ((m & and_need[i]) != and_need[i]) ok = false;
                if (or_any[i] && !(m & or_any[i])) ok = false;
                bodies |= g_body[i];
            }
            if (ok && (m & bodies) == bodies) {
                candidates_.push_back(m);
                g_bodies_.push_back(bodies);
            }
        }
        std::vector<std::size_t> order(candidates_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::popcount(candidates_[a]) < std::popcount(candidates_[b]);
        });
        std::vector<Mask> c, g;
        for (auto i : order) {
            c.push_back(candidates_[i]);
            g.push_back(g_bodies_[i]);
        }
        candidates_ = std::move(c);
        g_bodies_ = std::move(g);
    }

    // `need`: G bodies every later set must contain; `common`: intersection of
    // the sets so far, which must contain the G bodies of every later set.
    bool dfs(std::size_t length, Mask need, Mask common) {
        if (sequence_.size() == length) return accept();
        bool have_x = std::any_of(sequence_.begin(), sequence_.end(),
                                  [&](Mask m) { return (m & x_mask_) == x_mask_; });
        bool last = sequence_.size() + 1 == length;
        for (std::size_t c = 0; c < candidates_.size(); ++c) {
            if (++nodes_ > options_.node_budget) {
                exceeded_ = true;
                return false;
            }
            Mask m = candidates_[c];
            if ((m & need) != need) continue;
            if ((common & g_bodies_[c]) != g_bodies_[c]) continue;
            if (last && !have_x && (m & x_mask_) != x_mask_) continue;
            if (std::find(sequence_.begin(), sequence_.end(), m) != sequence_.end()) continue;
            sequence_.push_back(m);
            if (dfs(length, need | g_bodies_[c], common & m)) return true;
            sequence_.pop_back();
            if (exceeded_) return false;
        }
        return false;
    }

    bool accept() {
        ProgressLoop loop = to_loop(sequence_);
        FormulaSet d = delta(loop);
        Mask key = mask_of(d);
        if (auto it = delta_ok_.find(key); it != delta_ok_.end()) return it->second;
        bool ok = true;
        for (const auto& g : d) {
            if (!mc_.holds(s_, g) || (is_f(g) && mc_.holds(s_, g.body()))) {
                ok = false;
                break;
            }
        }
        if (ok) {
            for (const auto& p : cf(mc_, s_, d))
                if (!cf_x_.contains(p)) ok = false;
        }
        delta_ok_.emplace(key, ok);
        return ok;
    }
};

}  // namespace

SearchResult search_loop_generic(ModelChecker& mc, StateIndex s, const FormulaSet& xs,
                                 const GenericSearchOptions& options) {
    return GenericSearch(mc, s, xs, options).run();
}

// ---------------------------------------------------------------------------
// L2 construction

namespace {

// Least set containing `seed`, closed under conjuncts, disjuncts and F bodies
// that hold at t, and (if `unfold_g`) G bodies.
FormulaSet close_at(ModelChecker& mc, StateIndex t, const FormulaSet& seed, bool unfold_g) {
    FormulaSet out;
    std::vector<StateFormula> work(seed.begin(), seed.end());
    using Kind = StateFormula::Kind;
    while (!work.empty()) {
        auto g = work.back();
        work.pop_back();
        if (!out.insert(g).second) continue;
        if (g.kind() == Kind::And)
            for (const auto& h : g.operands()) work.push_back(h);
        if (g.kind() == Kind::Or)
            for (const auto& h : g.operands())
                if (mc.holds(t, h)) work.push_back(h);
        if (is_f(g) && mc.holds(t, g.body())) work.push_back(g.body());
        if (unfold_g && is_g(g)) work.push_back(g.body());
    }
    return out;
}

// Breadth-first from `from`, successors in index order; first state in `good`.
std::optional<StateIndex> nearest(const MarkovChain& chain, StateIndex from, const StateSet& good) {
    StateSet seen = chain.empty_set();
    std::deque<StateIndex> queue{from};
    seen.set(from);
    while (!queue.empty()) {
        StateIndex v = queue.front();
        queue.pop_front();
        if (good.test(v)) return v;
        std::vector<StateIndex> next;
        for (const auto& tr : chain.successors(v)) next.push_back(tr.target);
        std::sort(next.begin(), next.end());
        for (StateIndex w : next) {
            if (seen.test(w)) continue;
            seen.set(w);
            queue.push_back(w);
        }
    }
    return std::nullopt;
}

}  // namespace

ProgressLoop search_loop_L2(ModelChecker& mc, StateIndex s, const FormulaSet& xs) {
    for (const auto& g : xs) {
        if (!in_fragment(g, Fragment::L2)) throw LoopSearchError(to_string(g) + " is outside fragment L2");
        if (!mc.holds(s, g)) throw LoopSearchError("s does not satisfy " + to_string(g));
    }
    if (uc(mc, s, xs) != xs) throw LoopSearchError("X is not closed and updated at s");

    ProgressLoop loop;
    std::vector<StateIndex> witness;
    loop.sets.push_back(close_at(mc, s, xs, true));
    witness.push_back(s);

    FormulaSet n_set;
    StateSet n_states = mc.chain().full_set();
    for (const auto& g : loop.sets[0]) {
        if (is_g(g) && g.is_almost_sure()) {
            n_set.insert(g.body());
            n_states &= mc.sat(g.body());
        }
    }

    for (;;) {
        FormulaSet all = union_of(loop.sets);
        std::optional<std::pair<std::size_t, StateFormula>> pending;
        for (std::size_t i = 0; i < loop.sets.size() && !pending; ++i)
            for (const auto& g : loop.sets[i])
                if (is_f(g) && !xs.contains(g) && !all.contains(g.body())) {
                    pending.emplace(i, g);
                    break;
                }
        if (!pending) break;
        const auto& [i, g] = *pending;
        StateSet good = mc.sat(g.body()) & n_states;
        auto t = nearest(mc.chain(), witness[i], good);
        if (!t)
            throw LoopSearchError("no state reachable from '" + mc.chain().id(witness[i]) + "' satisfies " +
                                  to_string(g.body()) + " together with the G=1 bodies");
        FormulaSet seed = n_set;
        seed.insert(g.body());
        loop.sets.push_back(close_at(mc, *t, seed, false));
        witness.push_back(*t);
    }

    auto violations = verify_loop(mc, s, xs, loop);
    if (!violations.empty()) {
        std::string msg = "constructed loop fails verification:";
        for (const auto& v : violations) msg += std::string("\n  ") + to_string(v.condition) + ": " + v.message;
        throw LoopSearchError(msg);
    }
    return loop;
}

// ---------------------------------------------------------------------------
// Successor selection

CaratheodoryResult caratheodory_reduce(const std::vector<std::vector<Rational>>& points,
                                       const std::vector<Rational>& weights) {
    if (points.size() != weights.size()) throw std::invalid_argument("caratheodory_reduce: size mismatch");
    CaratheodoryResult out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (weights[i] < 0) throw std::invalid_argument("caratheodory_reduce: negative weight");
        if (weights[i] > 0) {
            out.support.push_back(i);
            out.weights.push_back(weights[i]);
        }
    }
    const std::size_t dim = points.empty() ? 0 : points.front().size();
    for (;;) {
        const std::size_t k = out.support.size();
        if (k <= 1) break;
        linalg::Matrix a(dim + 1, k);
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t r = 0; r < dim; ++r) a(r, j) = points[out.support[j]][r];
            a(dim, j) = 1;
        }
        auto lambda = linalg::kernel_vector(a);
        if (!lambda) break;
        // Coordinates sum to zero, so some entry is positive.
        std::optional<std::size_t> pick;
        Rational step;
        for (std::size_t j = 0; j < k; ++j) {
            if ((*lambda)[j] <= 0) continue;
            Rational ratio = out.weights[j] / (*lambda)[j];
            if (!pick || ratio < step) {
                pick = j;
                step = ratio;
            }
        }
        CaratheodoryResult next;
        for (std::size_t j = 0; j < k; ++j) {
            Rational w = out.weights[j] - step * (*lambda)[j];
            if (j == *pick || w == 0) continue;
            next.support.push_back(out.support[j]);
            next.weights.push_back(w);
        }
        out = std::move(next);
    }
    return out;
}

SuccessorSelection successor_selection(ModelChecker& mc, StateIndex s, const FormulaSet& d) {
    const auto& chain = mc.chain();
    for (const auto& g : d)
        if (!mc.holds(s, g)) throw std::invalid_argument("successor_selection: s does not satisfy " + to_string(g));

    SuccessorSelection out;
    out.delta = d;
    PathSet ps = path_formulas(d);
    for (const auto& p : ps)
        if (p.op == PathOp::Eventually) out.paths.push_back(p);
    for (const auto& p : ps)
        if (p.op == PathOp::Globally) out.paths.push_back(p);

    StateSet b = bscc_states(chain);
    for (const auto& p : out.paths)
        if (p.op == PathOp::Eventually) b |= mc.sat(p.body);
    auto y = first_passage(chain, s, b);

    std::vector<StateIndex> states;
    std::vector<std::vector<Rational>> points;
    std::vector<Rational> weights;
    for (const auto& [t, w] : y) {
        if (w == 0) continue;
        states.push_back(t);
        std::vector<Rational> v;
        for (const auto& p : out.paths) v.push_back(mc.prob(t, p));
        points.push_back(std::move(v));
        weights.push_back(w);
    }
    auto reduced = caratheodory_reduce(points, weights);
    for (std::size_t j = 0; j < reduced.support.size(); ++j) {
        StateIndex t = states[reduced.support[j]];
        out.targets.push_back(t);
        out.alpha[t] = reduced.weights[j];
        out.values[t] = points[reduced.support[j]];
    }
    std::sort(out.targets.begin(), out.targets.end());
    for (const auto& p : out.paths) out.at_source.push_back(mc.prob(s, p));
    return out;
}

// ---------------------------------------------------------------------------
// Model assembly

Rational loop_epsilon(const ProgressLoop& loop) {
    std::optional<Rational> max_r;
    for (const auto& set : loop.sets)
        for (const auto& g : set)
            if (is_f(g) && g.bound() < 1 && (!max_r || g.bound() > *max_r)) max_r = g.bound();
    if (!max_r) return Rational(1, 2);
    Rational e = (*max_r + 1) / 2;
    e.canonicalize();
    return e;
}

LoopModel build_loop_model(const ProgressLoop& loop, const FormulaSet& xs, const std::vector<Submodel>& submodels,
                           std::optional<Rational> epsilon) {
    const auto& sets = loop.sets;
    if (sets.empty()) throw std::invalid_argument("build_loop_model: empty loop");
    Rational total = 0;
    for (const auto& sm : submodels) {
        if (sm.weight <= 0) throw std::invalid_argument("build_loop_model: non-positive submodel weight");
        total += sm.weight;
    }
    if (total != 1) throw std::invalid_argument("build_loop_model: weights sum to " + to_string(total) + ", expected 1");
    Rational eps = epsilon ? *epsilon : loop_epsilon(loop);
    Rational floor = 0;
    for (const auto& set : sets)
        for (const auto& g : set)
            if (is_f(g) && g.bound() < 1 && g.bound() > floor) floor = g.bound();
    if (eps <= floor || eps >= 1)
        throw std::invalid_argument("build_loop_model: epsilon " + to_string(eps) + " outside (" + to_string(floor) +
                                    ",1)");

    LoopModel out{MarkovChain{}, 0, eps};
    auto& m = out.chain;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        std::set<std::string> labels;
        for (const auto& g : sets[i])
            if (g.kind() == StateFormula::Kind::Atom) labels.insert(g.name());
        m.add_state("L" + std::to_string(i), std::move(labels));
    }
    std::vector<StateIndex> entries;
    for (std::size_t k = 0; k < submodels.size(); ++k) {
        const auto& sub = submodels[k].chain;
        std::string prefix = "m" + std::to_string(k) + ".";
        StateIndex base = m.size();
        for (StateIndex v = 0; v < sub.size(); ++v) m.add_state(prefix + sub.id(v), sub.labels(v));
        for (StateIndex v = 0; v < sub.size(); ++v)
            for (const auto& tr : sub.successors(v)) m.add_transition(base + v, base + tr.target, tr.probability);
        entries.push_back(base + submodels[k].entry);
    }
    const std::size_t n = sets.size() - 1;
    for (std::size_t i = 0; i < n; ++i) m.add_transition(i, i + 1, 1);
    if (submodels.empty()) {
        m.add_transition(n, 0, 1);
    } else {
        m.add_transition(n, 0, eps);
        for (std::size_t k = 0; k < submodels.size(); ++k)
            m.add_transition(n, entries[k], (1 - eps) * submodels[k].weight);
    }

    auto it = std::find_if(sets.begin(), sets.end(), [&](const FormulaSet& l) { return includes(l, xs); });
    if (it == sets.end()) throw std::invalid_argument("build_loop_model: no set of the loop contains X");
    out.entry = static_cast<StateIndex>(it - sets.begin());
    return out;
}

std::pair<MarkovChain, StateIndex> bscc_reduce(ModelChecker& mc, StateIndex t, const FormulaSet& xs) {
    const auto& chain = mc.chain();
    auto scc = scc_decompose(chain);
    std::size_t c = scc.component_of.at(t);
    if (!scc.is_bottom[c]) throw std::invalid_argument("bscc_reduce: '" + chain.id(t) + "' is not in a bottom SCC");
    for (const auto& g : xs)
        if (!mc.holds(t, g)) throw std::invalid_argument("bscc_reduce: '" + chain.id(t) + "' does not satisfy " + to_string(g));

    FormulaSet universe = sub(xs);
    auto signature = [&](StateIndex v) {
        std::vector<bool> sig;
        for (const auto& g : universe) sig.push_back(mc.holds(v, g));
        return sig;
    };
    std::map<std::vector<bool>, StateIndex> rep;
    for (StateIndex v : scc.components[c]) rep.emplace(signature(v), v);  // components are sorted
    std::vector<StateIndex> order{rep.at(signature(t))};
    std::vector<StateIndex> others;
    for (const auto& [sig, v] : rep)
        if (v != order.front()) others.push_back(v);
    std::sort(others.begin(), others.end());
    order.insert(order.end(), others.begin(), others.end());

    MarkovChain out;
    for (StateIndex v : order) out.add_state(chain.id(v), chain.labels(v));
    for (StateIndex i = 0; i < order.size(); ++i) out.add_transition(i, (i + 1) % order.size(), 1);
    if (!check(out, 0, xs)) throw std::logic_error("bscc_reduce: reduced chain does not satisfy X");
    return {std::move(out), 0};
}

bool loops_have_single_exit(const MarkovChain& chain) {
    auto scc = scc_decompose(chain);
    for (std::size_t c = 0; c < scc.components.size(); ++c) {
        if (scc.is_bottom[c]) continue;
        const auto& comp = scc.components[c];
        std::size_t exits = 0;
        for (StateIndex v : comp) {
            std::size_t inside = 0;
            bool leaves = false;
            for (const auto& tr : chain.successors(v)) {
                if (scc.component_of[tr.target] == c)
                    ++inside;
                else
                    leaves = true;
            }
            if (inside != 1) return false;
            if (leaves) ++exits;
        }
        if (exits > 1) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Compression

namespace {

nlohmann::json formulas_json(const FormulaSet& set) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& g : set) out.push_back(to_string(g));
    return out;
}

class Compressor {
public:
    Compressor(const MarkovChain& chain, const CompressOptions& options) : mc_(chain), options_(options) {}

    CompressResult run(StateIndex s, const StateFormula& psi) {
        if (!mc_.holds(s, psi)) throw CompressError("state '" + mc_.chain().id(s) + "' does not satisfy " + to_string(psi));
        if (options_.strategy == LoopStrategy::L2 && !in_fragment(psi, Fragment::L2))
            throw CompressError(to_string(psi) + " is outside fragment L2");
        bsccs_ = bscc_states(mc_.chain());
        FormulaSet xs = uc(mc_, s, {psi});
        CompressResult out;
        auto [chain, entry, trace] = node(s, xs, 0);
        if (!check(chain, entry, {psi})) throw CompressError("compressed model does not satisfy the formula");
        out.chain = std::move(chain);
        out.entry = entry;
        out.trace = std::move(trace);
        out.bounds_respected = bounds_ok_;
        out.measure_decreased = decreased_;
        return out;
    }

private:
    ModelChecker mc_;
    CompressOptions options_;
    StateSet bsccs_;
    bool bounds_ok_ = true;
    bool decreased_ = true;

    struct Built {
        MarkovChain chain;
        StateIndex entry;
        nlohmann::json trace;
    };

    Built node(StateIndex s, const FormulaSet& xs, std::size_t depth) {
        if (depth > options_.max_depth) throw CompressError("recursion depth limit reached");
        const auto& chain = mc_.chain();
        std::uint64_t norm = measure(mc_, s, xs);
        std::uint64_t b = b_value(xs);
        Integer bound = size_bound(b, norm);
        nlohmann::json trace{{"state", chain.id(s)}, {"X", formulas_json(xs)}, {"measure", norm}, {"b", b},
                             {"bound", bound.get_str()}};

        if (bsccs_.test(s)) {
            auto [reduced, entry] = bscc_reduce(mc_, s, xs);
            Integer cap = Integer(1) << static_cast<mp_bitcnt_t>(sub(xs).size());
            bool ok = Integer(reduced.size()) <= bound && Integer(reduced.size()) <= cap;
            bounds_ok_ = bounds_ok_ && ok;
            trace["kind"] = "bscc";
            trace["size"] = reduced.size();
            trace["within_bound"] = ok;
            return {std::move(reduced), entry, std::move(trace)};
        }

        ProgressLoop loop;
        if (options_.strategy == LoopStrategy::L2) {
            loop = search_loop_L2(mc_, s, xs);
        } else {
            auto found = search_loop_generic(mc_, s, xs, options_.generic);
            if (found.status == SearchStatus::BudgetExceeded)
                throw CompressError("loop search budget exceeded at '" + chain.id(s) + "'");
            if (!found.loop) throw CompressError("no progress loop found at '" + chain.id(s) + "'");
            loop = *found.loop;
        }
        FormulaSet d = delta(loop);
        std::uint64_t delta_norm = measure(mc_, s, d);
        auto selection = successor_selection(mc_, s, d);

        trace["kind"] = "loop";
        trace["loop"] = nlohmann::json::array();
        for (const auto& set : loop.sets) trace["loop"].push_back(formulas_json(set));
        trace["delta"] = formulas_json(d);
        trace["delta_measure"] = delta_norm;
        trace["delta_bound"] = delta_norm <= norm;
        trace["children"] = nlohmann::json::array();

        std::vector<Submodel> subs;
        for (StateIndex t : selection.targets) {
            FormulaSet xt = uc(mc_, t, theta(mc_, t, d));
            std::uint64_t child_norm = measure(mc_, t, xt);
            Built child = node_or_bscc(t, xt, depth);
            child.trace["alpha"] = to_string(selection.alpha.at(t));
            if (!bsccs_.test(t)) {
                bool decreased = child_norm < delta_norm && child_norm < norm;
                decreased_ = decreased_ && decreased;
                child.trace["measure_decreased"] = decreased;
            }
            trace["children"].push_back(std::move(child.trace));
            subs.push_back({std::move(child.chain), child.entry, selection.alpha.at(t)});
        }
        auto model = build_loop_model(loop, xs, subs);
        if (!check(model.chain, model.entry, xs)) throw CompressError("assembled model does not satisfy X");
        bool ok = Integer(model.chain.size()) <= bound;
        bounds_ok_ = bounds_ok_ && ok;
        trace["epsilon"] = to_string(model.epsilon);
        trace["size"] = model.chain.size();
        trace["within_bound"] = ok;
        return {std::move(model.chain), model.entry, std::move(trace)};
    }

    Built node_or_bscc(StateIndex t, const FormulaSet& xs, std::size_t depth) { return node(t, xs, depth + 1); }
};

}  // namespace

CompressResult compress_model(const MarkovChain& chain, StateIndex s, const StateFormula& psi,
                              const CompressOptions& options) {
    return Compressor(chain, options).run(s, psi);
}

}  // namespace pctl
