#include "pctl/formula.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace pctl {

struct StateFormula::Node {
    Kind kind;
    std::string name;
    std::vector<StateFormula> operands;
    PathOp op = PathOp::Eventually;
    Comparison cmp = Comparison::Geq;
    Rational bound;
    std::vector<StateFormula> body;  // exactly one element for Prob
    std::size_t hash = 0;
};

namespace {

std::size_t mix(std::size_t seed, std::size_t value) {
    return seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t rational_hash(const Rational& r) {
    return mix(std::hash<std::string>{}(r.get_num().get_str()),
               std::hash<std::string>{}(r.get_den().get_str()));
}

std::strong_ordering compare_rationals(const Rational& a, const Rational& b) {
    int c = cmp(a, b);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

}  // namespace

StateFormula StateFormula::atom(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Atom;
    n->hash = mix(1, std::hash<std::string>{}(name));
    n->name = std::move(name);
    return StateFormula(std::move(n));
}

StateFormula StateFormula::neg_atom(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::NegAtom;
    n->hash = mix(2, std::hash<std::string>{}(name));
    n->name = std::move(name);
    return StateFormula(std::move(n));
}

StateFormula StateFormula::conj(std::vector<StateFormula> operands) {
    if (operands.empty()) throw std::invalid_argument("empty conjunction");
    std::vector<StateFormula> flat;
    for (auto& f : operands) {
        if (f.kind() == Kind::And)
            flat.insert(flat.end(), f.operands().begin(), f.operands().end());
        else
            flat.push_back(std::move(f));
    }
    if (flat.size() == 1) return flat.front();
    auto n = std::make_shared<Node>();
    n->kind = Kind::And;
    n->hash = 3;
    for (const auto& f : flat) n->hash = mix(n->hash, f.hash());
    n->operands = std::move(flat);
    return StateFormula(std::move(n));
}

StateFormula StateFormula::disj(std::vector<StateFormula> operands) {
    if (operands.empty()) throw std::invalid_argument("empty disjunction");
    std::vector<StateFormula> flat;
    for (auto& f : operands) {
        if (f.kind() == Kind::Or)
            flat.insert(flat.end(), f.operands().begin(), f.operands().end());
        else
            flat.push_back(std::move(f));
    }
    if (flat.size() == 1) return flat.front();
    auto n = std::make_shared<Node>();
    n->kind = Kind::Or;
    n->hash = 4;
    for (const auto& f : flat) n->hash = mix(n->hash, f.hash());
    n->operands = std::move(flat);
    return StateFormula(std::move(n));
}

StateFormula StateFormula::prob(PathOp op, Comparison cmp, Rational bound, StateFormula body) {
    bound.canonicalize();
    if (bound < 0 || bound > 1)
        throw std::invalid_argument("probability bound " + to_string(bound) + " outside [0,1]");
    if (cmp == Comparison::Geq && bound == 0)
        throw std::invalid_argument("trivial probability constraint >=0");
    if (cmp == Comparison::Gt && bound == 1)
        throw std::invalid_argument("trivial probability constraint >1");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Prob;
    n->op = op;
    n->cmp = cmp;
    n->hash = mix(mix(mix(5, static_cast<std::size_t>(op)), static_cast<std::size_t>(cmp)),
                  mix(rational_hash(bound), body.hash()));
    n->bound = std::move(bound);
    n->body.push_back(std::move(body));
    return StateFormula(std::move(n));
}

StateFormula StateFormula::prob(const PathFormula& path, Comparison cmp, Rational bound) {
    return prob(path.op, cmp, std::move(bound), path.body);
}

StateFormula::Kind StateFormula::kind() const { return node_->kind; }

const std::string& StateFormula::name() const {
    if (!is_literal()) throw std::logic_error("name() on non-literal formula");
    return node_->name;
}

const std::vector<StateFormula>& StateFormula::operands() const {
    if (kind() != Kind::And && kind() != Kind::Or)
        throw std::logic_error("operands() on non-junction formula");
    return node_->operands;
}

PathFormula StateFormula::path() const { return PathFormula{op(), body()}; }

PathOp StateFormula::op() const {
    if (!is_prob()) throw std::logic_error("op() on non-probabilistic formula");
    return node_->op;
}

Comparison StateFormula::cmp() const {
    if (!is_prob()) throw std::logic_error("cmp() on non-probabilistic formula");
    return node_->cmp;
}

const Rational& StateFormula::bound() const {
    if (!is_prob()) throw std::logic_error("bound() on non-probabilistic formula");
    return node_->bound;
}

const StateFormula& StateFormula::body() const {
    if (!is_prob()) throw std::logic_error("body() on non-probabilistic formula");
    return node_->body.front();
}

bool StateFormula::is_almost_sure() const {
    return is_prob() && node_->cmp == Comparison::Geq && node_->bound == 1;
}

std::size_t StateFormula::hash() const { return node_->hash; }

bool operator==(const StateFormula& a, const StateFormula& b) {
    if (a.node_ == b.node_) return true;
    if (a.hash() != b.hash()) return false;
    return (a <=> b) == 0;
}

std::strong_ordering operator<=>(const StateFormula& a, const StateFormula& b) {
    if (a.node_ == b.node_) return std::strong_ordering::equal;
    const auto& x = *a.node_;
    const auto& y = *b.node_;
    if (auto c = x.kind <=> y.kind; c != 0) return c;
    switch (x.kind) {
    case StateFormula::Kind::Atom:
    case StateFormula::Kind::NegAtom:
        return x.name.compare(y.name) <=> 0;
    case StateFormula::Kind::And:
    case StateFormula::Kind::Or:
        return std::lexicographical_compare_three_way(x.operands.begin(), x.operands.end(),
                                                      y.operands.begin(), y.operands.end());
    case StateFormula::Kind::Prob:
        if (auto c = x.op <=> y.op; c != 0) return c;
        if (auto c = x.body.front() <=> y.body.front(); c != 0) return c;
        if (auto c = x.cmp <=> y.cmp; c != 0) return c;
        return compare_rationals(x.bound, y.bound);
    }
    return std::strong_ordering::equal;
}

std::size_t PathFormula::hash() const { return mix(static_cast<std::size_t>(op) + 11, body.hash()); }

std::strong_ordering operator<=>(const PathFormula& a, const PathFormula& b) {
    if (auto c = a.op <=> b.op; c != 0) return c;
    return a.body <=> b.body;
}

// ---------------------------------------------------------------------------
// Printing

std::string to_string(const StateFormula& f) {
    using Kind = StateFormula::Kind;
    switch (f.kind()) {
    case Kind::Atom:
        return f.name();
    case Kind::NegAtom:
        return "!" + f.name();
    case Kind::And: {
        std::string out;
        for (const auto& g : f.operands()) {
            if (!out.empty()) out += " & ";
            out += g.kind() == Kind::Or ? "(" + to_string(g) + ")" : to_string(g);
        }
        return out;
    }
    case Kind::Or: {
        std::string out;
        for (const auto& g : f.operands()) {
            if (!out.empty()) out += " | ";
            out += to_string(g);
        }
        return out;
    }
    case Kind::Prob: {
        std::string out = f.op() == PathOp::Eventually ? "F" : "G";
        if (f.is_almost_sure())
            out += "=1";
        else
            out += (f.cmp() == Comparison::Geq ? ">=" : ">") + to_string(f.bound());
        return out + "[" + to_string(f.body()) + "]";
    }
    }
    return {};
}

std::string to_string(const PathFormula& p) {
    return std::string(p.op == PathOp::Eventually ? "F" : "G") + "[" + to_string(p.body) + "]";
}

std::string to_string(const FormulaSet& set) {
    std::string out = "{";
    for (const auto& f : set) {
        if (out.size() > 1) out += ", ";
        out += to_string(f);
    }
    return out + "}";
}

std::string to_string(const PathSet& set) {
    std::string out = "{";
    for (const auto& p : set) {
        if (out.size() > 1) out += ", ";
        out += to_string(p);
    }
    return out + "}";
}

// ---------------------------------------------------------------------------
// Subformula machinery

namespace {

void collect_sub(const StateFormula& f, FormulaSet& out) {
    if (!out.insert(f).second) return;
    switch (f.kind()) {
    case StateFormula::Kind::And:
    case StateFormula::Kind::Or:
        for (const auto& g : f.operands()) collect_sub(g, out);
        break;
    case StateFormula::Kind::Prob:
        collect_sub(f.body(), out);
        break;
    default:
        break;
    }
}

}  // namespace

FormulaSet sub(const StateFormula& f) {
    FormulaSet out;
    collect_sub(f, out);
    return out;
}

FormulaSet sub(const FormulaSet& xs) {
    FormulaSet out;
    for (const auto& f : xs) collect_sub(f, out);
    return out;
}

PathSet psub(const StateFormula& f) {
    PathSet out;
    for (const auto& g : sub(f))
        if (g.is_prob()) out.insert(g.path());
    return out;
}

PathSet psub(const FormulaSet& xs) {
    PathSet out;
    for (const auto& g : sub(xs))
        if (g.is_prob()) out.insert(g.path());
    return out;
}

bool nested_in(const PathFormula& inner, const PathFormula& outer) {
    return psub(outer.body).contains(inner);
}

PathSet maximal_psub(const FormulaSet& xs) {
    PathSet all = psub(xs);
    PathSet out;
    for (const auto& candidate : all) {
        bool nested = false;
        for (const auto& other : all) {
            if (!(other == candidate) && nested_in(candidate, other)) {
                nested = true;
                break;
            }
        }
        if (!nested) out.insert(candidate);
    }
    return out;
}

PathSet path_formulas(const FormulaSet& xs) {
    PathSet out;
    for (const auto& f : xs)
        if (f.is_prob()) out.insert(f.path());
    return out;
}

FormulaSets formula_sets(const FormulaSet& xs) {
    FormulaSets out;
    out.sub = sub(xs);
    for (const auto& f : out.sub) {
        if (f.is_prob())
            out.psub.insert(f.path());
        else
            out.nsub.insert(f);
    }
    out.maximal_psub = maximal_psub(xs);
    out.p = path_formulas(xs);
    return out;
}

// ---------------------------------------------------------------------------
// Fragments

namespace {

using Kind = StateFormula::Kind;

template <typename Pred>
bool all_operands(const StateFormula& f, Pred pred) {
    for (const auto& g : f.operands())
        if (!pred(g)) return false;
    return true;
}

bool junction(const StateFormula& f) { return f.kind() == Kind::And || f.kind() == Kind::Or; }

bool l1_psi(const StateFormula& f) {
    if (f.is_literal()) return true;
    if (junction(f)) return all_operands(f, l1_psi);
    return f.op() == PathOp::Globally && l1_psi(f.body());
}

bool l1_phi(const StateFormula& f) {
    if (f.is_literal()) return true;
    if (junction(f)) return all_operands(f, l1_phi);
    return f.op() == PathOp::Eventually ? l1_phi(f.body()) : l1_psi(f.body());
}

bool l2_psi(const StateFormula& f) {
    if (f.is_literal()) return true;
    if (junction(f)) return all_operands(f, l2_psi);
    return f.op() == PathOp::Eventually && !f.is_almost_sure() && l2_psi(f.body());
}

bool l2_phi(const StateFormula& f) {
    if (f.is_literal()) return true;
    if (junction(f)) return all_operands(f, l2_phi);
    if (f.op() == PathOp::Eventually) return l2_phi(f.body());
    return f.is_almost_sure() && l2_psi(f.body());
}

bool l3_rho(const StateFormula& f) {
    if (f.is_literal()) return false;
    if (junction(f)) return all_operands(f, l3_rho);
    if (f.op() == PathOp::Eventually) return !f.is_almost_sure() && l2_psi(f.body());
    return f.is_almost_sure() && (l2_psi(f.body()) || l3_rho(f.body()));
}

bool l3_phi(const StateFormula& f) {
    if (f.is_literal()) return true;
    if (junction(f)) return all_operands(f, l3_phi);
    if (f.op() == PathOp::Eventually) return l3_phi(f.body());
    return f.is_almost_sure() && (l2_psi(f.body()) || l3_rho(f.body()));
}

bool positive_probability(const StateFormula& f) {
    return f.cmp() == Comparison::Gt && f.bound() == 0;
}

bool l4_psi(const StateFormula& f) {
    if (f.is_literal()) return true;
    if (junction(f)) return all_operands(f, l4_psi);
    if (f.op() == PathOp::Eventually) return positive_probability(f) && l4_psi(f.body());
    return f.is_almost_sure() && l4_psi(f.body());
}

bool l4_phi(const StateFormula& f) {
    if (f.is_literal()) return true;
    if (junction(f)) return all_operands(f, l4_phi);
    if (f.op() == PathOp::Eventually) return l4_phi(f.body());
    return f.is_almost_sure() && l4_psi(f.body());
}

}  // namespace

FragmentMembership fragment_classify(const StateFormula& f) {
    return {l1_phi(f), l2_phi(f), l3_phi(f), l4_phi(f)};
}

bool in_fragment(const StateFormula& f, Fragment fragment) {
    switch (fragment) {
    case Fragment::L1: return l1_phi(f);
    case Fragment::L2: return l2_phi(f);
    case Fragment::L3: return l3_phi(f);
    case Fragment::L4: return l4_phi(f);
    }
    return false;
}

}  // namespace pctl
