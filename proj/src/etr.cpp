#include "pctl/etr.hpp"

#include "pctl/linalg.hpp"
#include "pctl/modelcheck.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace pctl::etr {

const char* to_string(Relation rel) {
    switch (rel) {
    case Relation::Geq: return ">=";
    case Relation::Gt: return ">";
    case Relation::Leq: return "<=";
    case Relation::Lt: return "<";
    }
    return "?";
}

Relation negate(Relation rel) {
    switch (rel) {
    case Relation::Geq: return Relation::Lt;
    case Relation::Gt: return Relation::Leq;
    case Relation::Leq: return Relation::Gt;
    case Relation::Lt: return Relation::Geq;
    }
    return rel;
}

bool compare(const Rational& value, Relation rel, const Rational& bound) {
    switch (rel) {
    case Relation::Geq: return value >= bound;
    case Relation::Gt: return value > bound;
    case Relation::Leq: return value <= bound;
    case Relation::Lt: return value < bound;
    }
    return false;
}

// ---------------------------------------------------------------------------
// FFormula

FFormula FFormula::make(Node node) {
    switch (node.kind) {
    case Kind::True: node.key = "true"; break;
    case Kind::False: node.key = "false"; break;
    case Kind::Atom: node.key = node.name; break;
    case Kind::NegAtom: node.key = "!" + node.name; break;
    case Kind::And:
    case Kind::Or: {
        std::string sep = node.kind == Kind::And ? " & " : " | ";
        node.key = "(";
        for (std::size_t i = 0; i < node.operands.size(); ++i) {
            if (i) node.key += sep;
            node.key += node.operands[i].key();
        }
        node.key += ")";
        break;
    }
    case Kind::Eventually:
        node.key = std::string("F") + to_string(node.rel) + pctl::to_string(node.bound) + "[" +
                   node.operands.front().key() + "]";
        break;
    }
    return FFormula(std::make_shared<const Node>(std::move(node)));
}

FFormula FFormula::constant(bool value) { return make({value ? Kind::True : Kind::False, {}, {}, {}, {}, {}}); }
FFormula FFormula::atom(std::string name) { return make({Kind::Atom, std::move(name), {}, {}, {}, {}}); }
FFormula FFormula::neg_atom(std::string name) { return make({Kind::NegAtom, std::move(name), {}, {}, {}, {}}); }

FFormula FFormula::conj(std::vector<FFormula> operands) {
    std::vector<FFormula> flat;
    for (auto& op : operands) {
        if (op.kind() == Kind::False) return op;
        if (op.kind() == Kind::True) continue;
        if (op.kind() == Kind::And)
            flat.insert(flat.end(), op.operands().begin(), op.operands().end());
        else
            flat.push_back(std::move(op));
    }
    if (flat.empty()) return constant(true);
    if (flat.size() == 1) return flat.front();
    return make({Kind::And, {}, std::move(flat), {}, {}, {}});
}

FFormula FFormula::disj(std::vector<FFormula> operands) {
    std::vector<FFormula> flat;
    for (auto& op : operands) {
        if (op.kind() == Kind::True) return op;
        if (op.kind() == Kind::False) continue;
        if (op.kind() == Kind::Or)
            flat.insert(flat.end(), op.operands().begin(), op.operands().end());
        else
            flat.push_back(std::move(op));
    }
    if (flat.empty()) return constant(false);
    if (flat.size() == 1) return flat.front();
    return make({Kind::Or, {}, std::move(flat), {}, {}, {}});
}

FFormula FFormula::eventually(Relation rel, Rational bound, FFormula body) {
    bound.canonicalize();
    // Regions are up- or down-closed, so the endpoints decide triviality.
    bool at0 = compare(0, rel, bound), at1 = compare(1, rel, bound);
    if (at0 && at1) return constant(true);
    if (!at0 && !at1) return constant(false);
    if (body.kind() == Kind::True) return constant(compare(1, rel, bound));
    if (body.kind() == Kind::False) return constant(compare(0, rel, bound));
    return make({Kind::Eventually, {}, {std::move(body)}, rel, std::move(bound), {}});
}

std::string to_string(const FFormula& f) { return f.key(); }

FFormula negation(const FFormula& f) {
    using Kind = FFormula::Kind;
    switch (f.kind()) {
    case Kind::True: return FFormula::constant(false);
    case Kind::False: return FFormula::constant(true);
    case Kind::Atom: return FFormula::neg_atom(f.name());
    case Kind::NegAtom: return FFormula::atom(f.name());
    case Kind::And:
    case Kind::Or: {
        std::vector<FFormula> ops;
        for (const auto& g : f.operands()) ops.push_back(negation(g));
        return f.kind() == Kind::And ? FFormula::disj(std::move(ops)) : FFormula::conj(std::move(ops));
    }
    case Kind::Eventually: return FFormula::eventually(negate(f.relation()), f.bound(), f.body());
    }
    return f;
}

FFormula f_normal_form(const StateFormula& f) {
    using Kind = StateFormula::Kind;
    switch (f.kind()) {
    case Kind::Atom: return FFormula::atom(f.name());
    case Kind::NegAtom: return FFormula::neg_atom(f.name());
    case Kind::And:
    case Kind::Or: {
        std::vector<FFormula> ops;
        for (const auto& g : f.operands()) ops.push_back(f_normal_form(g));
        return f.kind() == Kind::And ? FFormula::conj(std::move(ops)) : FFormula::disj(std::move(ops));
    }
    case Kind::Prob: {
        FFormula body = f_normal_form(f.body());
        bool strict = f.cmp() == Comparison::Gt;
        if (f.op() == PathOp::Eventually)
            return FFormula::eventually(strict ? Relation::Gt : Relation::Geq, f.bound(), body);
        return FFormula::eventually(strict ? Relation::Lt : Relation::Leq, 1 - f.bound(), negation(body));
    }
    }
    throw std::logic_error("f_normal_form: unknown formula kind");
}

StateFormula to_state_formula(const FFormula& f) {
    using Kind = FFormula::Kind;
    switch (f.kind()) {
    case Kind::True:
    case Kind::False: throw std::invalid_argument("to_state_formula: constant " + f.key());
    case Kind::Atom: return StateFormula::atom(f.name());
    case Kind::NegAtom: return StateFormula::neg_atom(f.name());
    case Kind::And:
    case Kind::Or: {
        std::vector<StateFormula> ops;
        for (const auto& g : f.operands()) ops.push_back(to_state_formula(g));
        return f.kind() == Kind::And ? StateFormula::conj(std::move(ops)) : StateFormula::disj(std::move(ops));
    }
    case Kind::Eventually:
        switch (f.relation()) {
        case Relation::Geq:
            return StateFormula::prob(PathOp::Eventually, Comparison::Geq, f.bound(), to_state_formula(f.body()));
        case Relation::Gt:
            return StateFormula::prob(PathOp::Eventually, Comparison::Gt, f.bound(), to_state_formula(f.body()));
        case Relation::Leq:
            return StateFormula::prob(PathOp::Globally, Comparison::Geq, 1 - f.bound(),
                                      to_state_formula(negation(f.body())));
        case Relation::Lt:
            return StateFormula::prob(PathOp::Globally, Comparison::Gt, 1 - f.bound(),
                                      to_state_formula(negation(f.body())));
        }
    }
    throw std::logic_error("to_state_formula: unknown formula kind");
}

std::vector<FFormula> f_subformulas(const FFormula& f) {
    std::vector<FFormula> out;
    std::unordered_map<std::string, bool> seen;
    std::function<void(const FFormula&)> visit = [&](const FFormula& g) {
        if (seen.contains(g.key())) return;
        for (const auto& h : g.operands()) visit(h);
        seen.emplace(g.key(), true);
        out.push_back(g);
    };
    visit(f);
    return out;
}

// ---------------------------------------------------------------------------
// Intervals and graph roles

namespace {

struct Interval {
    Rational lo = 0, hi = 1;
    bool lo_open = false, hi_open = false;

    bool empty() const { return lo > hi || (lo == hi && (lo_open || hi_open)); }
};

Interval meet(const Interval& a, const Interval& b) {
    Interval out;
    if (a.lo > b.lo) {
        out.lo = a.lo;
        out.lo_open = a.lo_open;
    } else if (b.lo > a.lo) {
        out.lo = b.lo;
        out.lo_open = b.lo_open;
    } else {
        out.lo = a.lo;
        out.lo_open = a.lo_open || b.lo_open;
    }
    if (a.hi < b.hi) {
        out.hi = a.hi;
        out.hi_open = a.hi_open;
    } else if (b.hi < a.hi) {
        out.hi = b.hi;
        out.hi_open = b.hi_open;
    } else {
        out.hi = a.hi;
        out.hi_open = a.hi_open || b.hi_open;
    }
    return out;
}

Interval region(Relation rel, const Rational& r) {
    switch (rel) {
    case Relation::Geq: return {r, 1, false, false};
    case Relation::Gt: return {r, 1, true, false};
    case Relation::Leq: return {0, r, false, false};
    case Relation::Lt: return {0, r, false, true};
    }
    return {};
}

struct Roles {
    std::vector<YRole> roles;
    std::vector<bool> certain;
};

VertexSet bit(std::size_t v) { return VertexSet{1} << v; }

Roles roles_for(const std::vector<VertexSet>& succ, VertexSet target) {
    const std::size_t m = succ.size();
    // Backward closure: vertices that can reach the target.
    VertexSet reach = target;
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t v = 0; v < m; ++v)
            if (!(reach & bit(v)) && (succ[v] & reach)) {
                reach |= bit(v);
                changed = true;
            }
    }
    Roles out{std::vector<YRole>(m), std::vector<bool>(m, false)};
    VertexSet outs = 0;
    for (std::size_t v = 0; v < m; ++v) {
        if (target & bit(v))
            out.roles[v] = YRole::Target;
        else if (!(reach & bit(v))) {
            out.roles[v] = YRole::Out;
            outs |= bit(v);
        } else
            out.roles[v] = YRole::Other;
    }
    for (std::size_t v = 0; v < m; ++v) {
        if (out.roles[v] != YRole::Other) continue;
        VertexSet seen = bit(v), frontier = bit(v);
        while (frontier) {
            VertexSet next = 0;
            for (std::size_t w = 0; w < m; ++w)
                if (frontier & bit(w)) next |= succ[w];
            next &= ~target & ~seen;
            seen |= next;
            frontier = next;
        }
        out.certain[v] = (seen & outs) == 0;
    }
    return out;
}

Interval range_of(const Roles& r, std::size_t v) {
    switch (r.roles[v]) {
    case YRole::Target: return {1, 1, false, false};
    case YRole::Out: return {0, 0, false, false};
    case YRole::Other: break;
    }
    if (r.certain[v]) return {1, 1, false, false};
    return {0, 1, true, true};
}

bool reaches_all(const std::vector<VertexSet>& succ) {
    const std::size_t m = succ.size();
    VertexSet seen = 1, frontier = 1;
    while (frontier) {
        VertexSet next = 0;
        for (std::size_t w = 0; w < m; ++w)
            if (frontier & bit(w)) next |= succ[w];
        next &= ~seen;
        seen |= next;
        frontier = next;
    }
    return seen == (bit(m) - 1);
}

struct Layout {
    std::vector<FFormula> subs;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::string> atoms;
    std::vector<std::size_t> body_slot;  // per node: block index for F nodes
    std::vector<FFormula> bodies;
};

Layout layout_of(const FFormula& phi) {
    Layout l;
    l.subs = f_subformulas(phi);
    for (std::size_t i = 0; i < l.subs.size(); ++i) l.index.emplace(l.subs[i].key(), i);
    std::unordered_map<std::string, std::size_t> slot;
    l.body_slot.assign(l.subs.size(), 0);
    for (std::size_t i = 0; i < l.subs.size(); ++i) {
        const auto& g = l.subs[i];
        if (g.kind() == FFormula::Kind::Atom || g.kind() == FFormula::Kind::NegAtom) l.atoms.push_back(g.name());
        if (g.kind() == FFormula::Kind::Eventually) {
            auto [it, fresh] = slot.emplace(g.body().key(), l.bodies.size());
            if (fresh) l.bodies.push_back(g.body());
            l.body_slot[i] = it->second;
        }
    }
    std::sort(l.atoms.begin(), l.atoms.end());
    l.atoms.erase(std::unique(l.atoms.begin(), l.atoms.end()), l.atoms.end());
    return l;
}

class Enumerator {
public:
    Enumerator(const FFormula& phi, const std::function<bool(const ETRCandidate&)>& visit,
               const EnumerateOptions& options)
        : layout_(layout_of(phi)), visit_(visit), options_(options) {}

    std::uint64_t run(std::size_t n) {
        for (std::size_t m = 1; m <= n && !stop_; ++m) {
            const VertexSet full = bit(m) - 1;
            std::vector<VertexSet> succ(m, 1);
            for (;;) {
                if (reaches_all(succ)) graph(succ);
                if (stop_) break;
                // Odometer with vertex 0 most significant.
                std::size_t v = m;
                while (v > 0 && succ[v - 1] == full) succ[--v] = 1;
                if (v == 0) break;
                ++succ[v - 1];
            }
        }
        return visits_;
    }

private:
    Layout layout_;
    const std::function<bool(const ETRCandidate&)>& visit_;
    EnumerateOptions options_;
    std::uint64_t visits_ = 0;
    bool stop_ = false;

    ETRCandidate cand_;
    std::vector<VertexSet> atom_sets_;
    std::vector<std::optional<Roles>> roles_;
    std::vector<std::vector<Interval>> ranges_;

    void graph(const std::vector<VertexSet>& succ) {
        cand_.vertices = succ.size();
        cand_.successors = succ;
        cand_.labels.assign(layout_.subs.size(), 0);
        atom_sets_.assign(layout_.atoms.size(), 0);
        atoms(0);
    }

    void atoms(std::size_t i) {
        if (i == atom_sets_.size()) {
            roles_.assign(layout_.bodies.size(), std::nullopt);
            ranges_.assign(layout_.bodies.size(), {});
            nodes(0);
            return;
        }
        const VertexSet full = bit(cand_.vertices) - 1;
        for (VertexSet s = 0; s <= full && !stop_; ++s) {
            atom_sets_[i] = s;
            atoms(i + 1);
        }
    }

    VertexSet atom_set(const std::string& name) const {
        auto it = std::lower_bound(layout_.atoms.begin(), layout_.atoms.end(), name);
        return atom_sets_[static_cast<std::size_t>(it - layout_.atoms.begin())];
    }

    void nodes(std::size_t i) {
        using Kind = FFormula::Kind;
        const std::size_t m = cand_.vertices;
        const VertexSet full = bit(m) - 1;
        if (i == layout_.subs.size()) {
            if (cand_.labels.back() & 1) {
                ++visits_;
                if (!visit_(cand_)) stop_ = true;
            }
            return;
        }
        const auto& g = layout_.subs[i];
        auto label = [&](std::size_t k) { return cand_.labels[layout_.index.at(g.operands()[k].key())]; };
        switch (g.kind()) {
        case Kind::True: cand_.labels[i] = full; break;
        case Kind::False: cand_.labels[i] = 0; break;
        case Kind::Atom: cand_.labels[i] = atom_set(g.name()); break;
        case Kind::NegAtom: cand_.labels[i] = full & ~atom_set(g.name()); break;
        case Kind::And:
            cand_.labels[i] = full;
            for (std::size_t k = 0; k < g.operands().size(); ++k) cand_.labels[i] &= label(k);
            break;
        case Kind::Or:
            cand_.labels[i] = 0;
            for (std::size_t k = 0; k < g.operands().size(); ++k) cand_.labels[i] |= label(k);
            break;
        case Kind::Eventually:
            eventually(i);
            return;
        }
        nodes(i + 1);
    }

    void eventually(std::size_t i) {
        const auto& g = layout_.subs[i];
        const std::size_t m = cand_.vertices;
        const VertexSet full = bit(m) - 1;
        if (!options_.prune) {
            for (VertexSet s = 0; s <= full && !stop_; ++s) {
                cand_.labels[i] = s;
                nodes(i + 1);
            }
            return;
        }
        std::size_t slot = layout_.body_slot[i];
        bool fresh = !roles_[slot];
        if (fresh) {
            roles_[slot] = roles_for(cand_.successors, cand_.labels[layout_.index.at(g.body().key())]);
            ranges_[slot].clear();
            for (std::size_t v = 0; v < m; ++v) ranges_[slot].push_back(range_of(*roles_[slot], v));
        }
        const std::vector<Interval> saved = ranges_[slot];
        Interval in = region(g.relation(), g.bound());
        Interval out = region(negate(g.relation()), g.bound());
        VertexSet may_in = 0, may_out = 0;
        for (std::size_t v = 0; v < m; ++v) {
            if (!meet(saved[v], in).empty()) may_in |= bit(v);
            if (!meet(saved[v], out).empty()) may_out |= bit(v);
        }
        if ((may_in | may_out) == full) {
            const VertexSet forced = may_in & ~may_out;
            const VertexSet free = may_in & may_out;
            // Subsets of `free`, ascending.
            VertexSet s = 0;
            do {
                VertexSet label = forced | s;
                cand_.labels[i] = label;
                for (std::size_t v = 0; v < m; ++v) ranges_[slot][v] = meet(saved[v], (label & bit(v)) ? in : out);
                nodes(i + 1);
                s = (s - free) & free;
            } while (s != 0 && !stop_);
        }
        ranges_[slot] = saved;
        if (fresh) roles_[slot].reset();
    }
};

}  // namespace

std::uint64_t enumerate_candidates(const FFormula& phi, std::size_t n,
                                   const std::function<bool(const ETRCandidate&)>& visit,
                                   const EnumerateOptions& options) {
    if (n == 0) throw std::invalid_argument("enumerate_candidates: n must be at least 1");
    if (n > kMaxVertices)
        throw std::invalid_argument("enumerate_candidates: n above " + std::to_string(kMaxVertices));
    return Enumerator(phi, visit, options).run(n);
}

ETRCandidate induced_candidate(const MarkovChain& chain, const FFormula& phi) {
    if (chain.size() == 0 || chain.size() > kMaxVertices)
        throw std::invalid_argument("induced_candidate: chain size out of range");
    ETRCandidate c;
    c.vertices = chain.size();
    for (StateIndex v = 0; v < chain.size(); ++v) {
        VertexSet s = 0;
        for (const auto& tr : chain.successors(v)) s |= bit(tr.target);
        c.successors.push_back(s);
    }
    ModelChecker mc(chain);
    const VertexSet full = bit(chain.size()) - 1;
    for (const auto& g : f_subformulas(phi)) {
        VertexSet s = 0;
        if (g.kind() == FFormula::Kind::True) {
            s = full;
        } else if (g.kind() != FFormula::Kind::False) {
            const auto& sat = mc.sat(to_state_formula(g));
            for (StateIndex v = 0; v < chain.size(); ++v)
                if (sat.test(v)) s |= bit(v);
        }
        c.labels.push_back(s);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Encoding

ETRSystem encode(const ETRCandidate& c, const FFormula& phi) {
    Layout l = layout_of(phi);
    if (c.labels.size() != l.subs.size()) throw std::invalid_argument("encode: labeling does not match formula");
    ETRSystem sys;
    sys.vertices = c.vertices;
    for (std::size_t v = 0; v < c.vertices; ++v)
        for (std::size_t w = 0; w < c.vertices; ++w)
            if (c.successors[v] & bit(w)) sys.edges.emplace_back(v, w);
    for (const auto& body : l.bodies) {
        YBlock block;
        block.body = body;
        Roles r = roles_for(c.successors, c.labels[l.index.at(body.key())]);
        block.roles = std::move(r.roles);
        block.certain = std::move(r.certain);
        sys.blocks.push_back(std::move(block));
    }
    for (std::size_t i = 0; i < l.subs.size(); ++i) {
        const auto& g = l.subs[i];
        if (g.kind() != FFormula::Kind::Eventually) continue;
        auto& block = sys.blocks[l.body_slot[i]];
        for (std::size_t v = 0; v < c.vertices; ++v) {
            Relation rel = (c.labels[i] & bit(v)) ? g.relation() : negate(g.relation());
            block.bounds.push_back({v, rel, g.bound()});
        }
    }
    return sys;
}

std::size_t constraint_count(const ETRSystem& sys) {
    std::size_t n = sys.edges.size() + sys.vertices;
    for (const auto& b : sys.blocks) n += sys.vertices + b.bounds.size();
    return n;
}

bool interval_refutes(const ETRSystem& sys) {
    for (const auto& b : sys.blocks) {
        Roles r{b.roles, b.certain};
        std::vector<Interval> iv;
        for (std::size_t v = 0; v < sys.vertices; ++v) iv.push_back(range_of(r, v));
        for (const auto& bound : b.bounds) {
            iv[bound.vertex] = meet(iv[bound.vertex], region(bound.rel, bound.bound));
            if (iv[bound.vertex].empty()) return true;
        }
    }
    return false;
}

std::vector<std::vector<Rational>> block_values(const ETRSystem& sys, const std::vector<Rational>& x) {
    if (x.size() != sys.edges.size())
        throw std::invalid_argument("assignment has " + std::to_string(x.size()) + " values for " +
                                    std::to_string(sys.edges.size()) + " edges");
    std::vector<Rational> sums(sys.vertices);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0 || x[i] > 1) throw std::invalid_argument("x" + std::to_string(i) + " = " + pctl::to_string(x[i]) + " outside (0,1]");
        sums[sys.edges[i].first] += x[i];
    }
    for (std::size_t v = 0; v < sys.vertices; ++v)
        if (sums[v] != 1)
            throw std::invalid_argument("edges of v" + std::to_string(v + 1) + " sum to " + pctl::to_string(sums[v]));

    std::vector<std::vector<Rational>> out;
    for (const auto& b : sys.blocks) {
        std::vector<Rational> y(sys.vertices);
        std::vector<std::size_t> pos(sys.vertices, 0), others;
        for (std::size_t v = 0; v < sys.vertices; ++v) {
            if (b.roles[v] == YRole::Target) y[v] = 1;
            if (b.roles[v] == YRole::Other) {
                pos[v] = others.size();
                others.push_back(v);
            }
        }
        if (!others.empty()) {
            linalg::Matrix a(others.size(), others.size()), rhs(others.size(), 1);
            for (std::size_t k = 0; k < others.size(); ++k) a(k, k) = 1;
            for (std::size_t i = 0; i < sys.edges.size(); ++i) {
                auto [v, w] = sys.edges[i];
                if (b.roles[v] != YRole::Other) continue;
                if (b.roles[w] == YRole::Target) rhs(pos[v], 0) += x[i];
                if (b.roles[w] == YRole::Other) a(pos[v], pos[w]) -= x[i];
            }
            auto sol = linalg::solve(a, rhs);
            if (!sol) throw std::logic_error("reachability system is singular");
            for (std::size_t k = 0; k < others.size(); ++k) y[others[k]] = (*sol)(k, 0);
        }
        out.push_back(std::move(y));
    }
    return out;
}

bool check_assignment(const ETRSystem& sys, const std::vector<Rational>& x) {
    auto y = block_values(sys, x);
    for (std::size_t b = 0; b < sys.blocks.size(); ++b)
        for (const auto& bound : sys.blocks[b].bounds)
            if (!compare(y[b][bound.vertex], bound.rel, bound.bound)) return false;
    return true;
}

namespace {

std::string real_literal(const Rational& r) {
    Rational c = r;
    c.canonicalize();
    std::string num = Integer(abs(c.get_num())).get_str() + ".0";
    std::string lit = c.get_den() == 1 ? num : "(/ " + num + " " + c.get_den().get_str() + ".0)";
    return c < 0 ? "(- " + lit + ")" : lit;
}

std::string y_name(std::size_t b, std::size_t v) { return "y" + std::to_string(b) + "_" + std::to_string(v + 1); }

}  // namespace

std::string to_smtlib(const ETRSystem& sys) {
    std::ostringstream out;
    out << "(set-logic QF_NRA)\n";
    for (std::size_t i = 0; i < sys.edges.size(); ++i) out << "(declare-fun x" << i << " () Real)\n";
    for (std::size_t b = 0; b < sys.blocks.size(); ++b)
        for (std::size_t v = 0; v < sys.vertices; ++v) out << "(declare-fun " << y_name(b, v) << " () Real)\n";
    for (std::size_t i = 0; i < sys.edges.size(); ++i) {
        out << "; x" << i << ": v" << sys.edges[i].first + 1 << " -> v" << sys.edges[i].second + 1 << "\n";
        out << "(assert (and (< 0.0 x" << i << ") (<= x" << i << " 1.0)))\n";
    }
    for (std::size_t v = 0; v < sys.vertices; ++v) {
        std::vector<std::string> terms;
        for (std::size_t i = 0; i < sys.edges.size(); ++i)
            if (sys.edges[i].first == v) terms.push_back("x" + std::to_string(i));
        out << "(assert (= ";
        if (terms.size() == 1) {
            out << terms[0];
        } else {
            out << "(+";
            for (const auto& t : terms) out << " " << t;
            out << ")";
        }
        out << " 1.0))\n";
    }
    for (std::size_t b = 0; b < sys.blocks.size(); ++b) {
        const auto& block = sys.blocks[b];
        out << "; block " << b << ": F " << block.body.key() << "\n";
        for (std::size_t v = 0; v < sys.vertices; ++v) {
            const std::string y = y_name(b, v);
            switch (block.roles[v]) {
            case YRole::Target: out << "(assert (= " << y << " 1.0))\n"; break;
            case YRole::Out: out << "(assert (= " << y << " 0.0))\n"; break;
            case YRole::Other: {
                std::vector<std::string> terms;
                for (std::size_t i = 0; i < sys.edges.size(); ++i)
                    if (sys.edges[i].first == v)
                        terms.push_back("(* x" + std::to_string(i) + " " + y_name(b, sys.edges[i].second) + ")");
                out << "(assert (= " << y << " ";
                if (terms.size() == 1) {
                    out << terms[0];
                } else {
                    out << "(+";
                    for (const auto& t : terms) out << " " << t;
                    out << ")";
                }
                out << "))\n";
                break;
            }
            }
        }
        for (const auto& bound : block.bounds)
            out << "(assert (" << to_string(bound.rel) << " " << y_name(b, bound.vertex) << " "
                << real_literal(bound.bound) << "))\n";
    }
    out << "(check-sat)\n";
    if (!sys.edges.empty()) {
        out << "(get-value (";
        for (std::size_t i = 0; i < sys.edges.size(); ++i) out << (i ? " x" : "x") << i;
        out << "))\n";
    }
    return out.str();
}

MarkovChain reconstruct(const ETRCandidate& c, const FFormula& phi, const ETRSystem& sys,
                        const std::vector<Rational>& x) {
    Layout l = layout_of(phi);
    MarkovChain m;
    for (std::size_t v = 0; v < c.vertices; ++v) {
        std::set<std::string> labels;
        for (std::size_t i = 0; i < l.subs.size(); ++i) {
            const auto& g = l.subs[i];
            bool in = (c.labels[i] & bit(v)) != 0;
            if (g.kind() == FFormula::Kind::Atom && in) labels.insert(g.name());
            if (g.kind() == FFormula::Kind::NegAtom && !in) labels.insert(g.name());
        }
        m.add_state("v" + std::to_string(v + 1), std::move(labels));
    }
    for (std::size_t i = 0; i < sys.edges.size(); ++i) m.add_transition(sys.edges[i].first, sys.edges[i].second, x[i]);
    return m;
}

// ---------------------------------------------------------------------------
// Solver bridge

std::optional<SolverConfig> solver_from_env() {
    const char* cmd = std::getenv("PCTLSAT_SOLVER_CMD");
    if (!cmd || !*cmd) return std::nullopt;
    return SolverConfig{cmd};
}

namespace {

struct Sexp {
    std::string atom;
    std::vector<Sexp> list;
    bool is_list = false;
};

class SexpReader {
public:
    explicit SexpReader(const std::string& text) : text_(text) {}

    std::optional<Sexp> next() {
        skip();
        if (pos_ >= text_.size()) return std::nullopt;
        if (text_[pos_] == ')') throw BackendError("unbalanced solver output");
        if (text_[pos_] == '(') {
            ++pos_;
            Sexp s;
            s.is_list = true;
            for (;;) {
                skip();
                if (pos_ >= text_.size()) throw BackendError("truncated solver output");
                if (text_[pos_] == ')') {
                    ++pos_;
                    return s;
                }
                s.list.push_back(*next());
            }
        }
        std::size_t start = pos_;
        if (text_[pos_] == '"') {
            ++pos_;
            while (pos_ < text_.size() && text_[pos_] != '"') ++pos_;
            ++pos_;
        } else {
            while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
                   text_[pos_] != ')')
                ++pos_;
        }
        return Sexp{text_.substr(start, pos_ - start), {}, false};
    }

private:
    void skip() {
        while (pos_ < text_.size()) {
            if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            } else if (text_[pos_] == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }
    const std::string& text_;
    std::size_t pos_ = 0;
};

std::optional<Rational> value_of(const Sexp& s) {
    if (!s.is_list) return parse_rational(s.atom);
    if (s.list.empty() || s.list[0].is_list) return std::nullopt;
    const std::string& head = s.list[0].atom;
    if (head == "-" && s.list.size() == 2) {
        auto v = value_of(s.list[1]);
        if (v) return -*v;
        return std::nullopt;
    }
    if (head == "/" && s.list.size() == 3) {
        auto a = value_of(s.list[1]), b = value_of(s.list[2]);
        if (a && b && *b != 0) {
            Rational q = *a / *b;
            q.canonicalize();
            return q;
        }
    }
    return std::nullopt;  // root-obj and friends
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char ch : s) {
        if (ch == '\'')
            out += "'\\''";
        else
            out += ch;
    }
    return out + "'";
}

}  // namespace

SolverAnswer run_solver(const SolverConfig& config, const std::filesystem::path& file, const ETRSystem& sys) {
    std::string cmd = config.command;
    const std::string quoted = shell_quote(file.string());
    if (auto at = cmd.find("{file}"); at != std::string::npos)
        cmd.replace(at, 6, quoted);
    else
        cmd += " " + quoted;

    int fds[2];
    if (pipe(fds) != 0) throw BackendError(std::string("pipe: ") + std::strerror(errno));
    pid_t pid = fork();
    if (pid < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        setpgid(0, 0);
        dup2(fds[1], STDOUT_FILENO);
        dup2(fds[1], STDERR_FILENO);
        close(fds[0]);
        close(fds[1]);
        execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(fds[1]);

    SolverAnswer answer;
    const auto deadline = std::chrono::steady_clock::now() + config.timeout;
    bool timed_out = false;
    char buf[4096];
    for (;;) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            timed_out = true;
            break;
        }
        pollfd p{fds[0], POLLIN, 0};
        int r = poll(&p, 1, static_cast<int>(left.count()));
        if (r < 0 && errno == EINTR) continue;
        if (r == 0) {
            timed_out = true;
            break;
        }
        ssize_t got = read(fds[0], buf, sizeof buf);
        if (got <= 0) break;
        answer.output.append(buf, static_cast<std::size_t>(got));
    }
    close(fds[0]);
    if (timed_out) kill(-pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    if (timed_out) return answer;
    if (WIFEXITED(status) && WEXITSTATUS(status) == 127)
        throw BackendError("solver command failed to start: " + config.command);

    SexpReader reader(answer.output);
    auto first = reader.next();
    if (!first || first->is_list) throw BackendError("unexpected solver output: " + answer.output.substr(0, 200));
    if (first->atom == "unsat") {
        answer.verdict = SolverVerdict::Unsat;
    } else if (first->atom == "unknown" || first->atom == "timeout") {
        answer.verdict = SolverVerdict::Unknown;
    } else if (first->atom == "sat") {
        answer.verdict = SolverVerdict::Sat;
        std::vector<std::optional<Rational>> x(sys.edges.size());
        if (auto values = reader.next(); values && values->is_list) {
            for (const auto& pair : values->list) {
                if (!pair.is_list || pair.list.size() != 2 || pair.list[0].is_list) continue;
                const std::string& name = pair.list[0].atom;
                if (name.size() < 2 || name[0] != 'x') continue;
                std::size_t i = std::stoul(name.substr(1));
                if (i < x.size()) x[i] = value_of(pair.list[1]);
            }
        }
        if (std::all_of(x.begin(), x.end(), [](const auto& v) { return v.has_value(); })) {
            std::vector<Rational> xs;
            for (auto& v : x) xs.push_back(*v);
            answer.x = std::move(xs);
        }
    } else {
        throw BackendError("unexpected solver output: " + answer.output.substr(0, 200));
    }
    return answer;
}

const char* to_string(SatStatus status) {
    switch (status) {
    case SatStatus::Sat: return "sat";
    case SatStatus::UnsatUpToN: return "unsat-up-to-n";
    case SatStatus::Unknown: return "unknown";
    }
    return "?";
}

namespace {

// Nearby simple fractions, renormalized per vertex.
std::optional<std::vector<Rational>> repair(const ETRSystem& sys, const std::vector<Rational>& x) {
    const Rational tolerance(1, 1'000'000'000);
    std::vector<Rational> out;
    std::vector<Rational> sums(sys.vertices);
    for (std::size_t i = 0; i < x.size(); ++i) {
        Rational r = rationalize(x[i], tolerance);
        if (r <= 0) return std::nullopt;
        out.push_back(r);
        sums[sys.edges[i].first] += r;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] /= sums[sys.edges[i].first];
        out[i].canonicalize();
    }
    return out;
}

bool accepts(const ETRSystem& sys, const std::vector<Rational>& x) {
    try {
        return check_assignment(sys, x);
    } catch (const std::invalid_argument&) {
        return false;
    }
}

}  // namespace

SatResult solve_bounded_sat(const StateFormula& phi, std::size_t n, const SatOptions& options) {
    FFormula psi = f_normal_form(phi);
    SatResult result;

    std::filesystem::path dir;
    bool temporary = false;
    if (options.dump_dir) {
        dir = *options.dump_dir;
        std::filesystem::create_directories(dir);
    } else if (options.solver && !options.emit_only) {
        std::string pattern = (std::filesystem::temp_directory_path() / "pctlsat-XXXXXX").string();
        if (!mkdtemp(pattern.data())) throw BackendError(std::string("mkdtemp: ") + std::strerror(errno));
        dir = pattern;
        temporary = true;
    }

    std::optional<ETRCandidate> found;
    std::optional<ETRSystem> found_sys;
    std::vector<Rational> found_x;
    auto& st = result.stats;

    auto visit = [&](const ETRCandidate& c) {
        ++st.candidates;
        ETRSystem sys = encode(c, psi);
        if (interval_refutes(sys)) {
            ++st.refuted;
            return true;
        }
        auto accept = [&](std::vector<Rational> x) {
            found = c;
            found_sys = std::move(sys);
            found_x = std::move(x);
            return false;
        };
        if (options.uniform_probe && !options.emit_only) {
            std::vector<Rational> x;
            for (const auto& e : sys.edges) {
                Rational r(1, std::popcount(c.successors[e.first]));
                r.canonicalize();
                x.push_back(r);
            }
            if (accepts(sys, x)) return accept(std::move(x));
        }
        std::filesystem::path file;
        if (!dir.empty()) {
            file = dir / ("candidate-" + std::to_string(st.candidates) + ".smt2");
            std::ofstream(file) << to_smtlib(sys);
            if (options.dump_dir) ++st.emitted;
        }
        if (options.emit_only || !options.solver) {
            ++st.unknown;
            return true;
        }
        ++st.solver_calls;
        SolverAnswer answer = run_solver(*options.solver, file, sys);
        if (temporary) std::filesystem::remove(file);
        switch (answer.verdict) {
        case SolverVerdict::Unsat:
            ++st.solver_unsat;
            ++st.refuted;
            return true;
        case SolverVerdict::Unknown:
            ++st.unknown;
            return true;
        case SolverVerdict::Sat:
            if (answer.x) {
                if (accepts(sys, *answer.x)) return accept(*answer.x);
                if (auto fixed = repair(sys, *answer.x); fixed && accepts(sys, *fixed)) return accept(*fixed);
            }
            ++st.unknown;
            return true;
        }
        return true;
    };

    try {
        if (psi.kind() == FFormula::Kind::False) {
            result.status = SatStatus::UnsatUpToN;
        } else if (psi.kind() == FFormula::Kind::True) {
            MarkovChain m;
            m.add_state("v1");
            m.add_transition(0, 0, 1);
            result.model = std::move(m);
        } else {
            enumerate_candidates(psi, n, visit);
        }
    } catch (...) {
        if (temporary) std::filesystem::remove_all(dir);
        throw;
    }
    if (temporary) std::filesystem::remove_all(dir);

    if (found) result.model = reconstruct(*found, psi, *found_sys, found_x);
    if (result.model) {
        if (!validate(*result.model).empty() || !check(*result.model, 0, {phi}))
            throw std::logic_error("reconstructed model does not satisfy " + to_string(phi));
        result.status = SatStatus::Sat;
    } else if (psi.kind() != FFormula::Kind::False) {
        result.status = st.unknown > 0 ? SatStatus::Unknown : SatStatus::UnsatUpToN;
    }
    return result;
}

}  // namespace pctl::etr
