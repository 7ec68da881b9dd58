#pragma once

#include "pctl/rational.hpp"

#include <compare>
#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace pctl {

enum class PathOp : unsigned char { Eventually, Globally };
enum class Comparison : unsigned char { Geq, Gt };

class StateFormula;

// F body or G body.
struct PathFormula;

/// Core-form state formula: negation only on atoms, comparisons in {>=, >},
/// and never the trivial bounds >=0 or >1. Conjunction and disjunction are
/// n-ary and flattened (an And never has an And child).
///
/// Immutable; copies share structure.
class StateFormula {
public:
    enum class Kind : unsigned char { Atom, NegAtom, And, Or, Prob };

    static StateFormula atom(std::string name);
    static StateFormula neg_atom(std::string name);
    /// Flattens nested conjunctions; a single operand is returned unchanged.
    static StateFormula conj(std::vector<StateFormula> operands);
    static StateFormula disj(std::vector<StateFormula> operands);
    /// Throws std::invalid_argument for a bound outside [0,1] or a trivial bound.
    static StateFormula prob(PathOp op, Comparison cmp, Rational bound, StateFormula body);
    static StateFormula prob(const PathFormula& path, Comparison cmp, Rational bound);

    Kind kind() const;
    bool is_prob() const { return kind() == Kind::Prob; }
    bool is_literal() const { return kind() == Kind::Atom || kind() == Kind::NegAtom; }

    // Atom / NegAtom
    const std::string& name() const;
    // And / Or
    const std::vector<StateFormula>& operands() const;
    // Prob
    PathFormula path() const;
    PathOp op() const;
    Comparison cmp() const;
    const Rational& bound() const;
    const StateFormula& body() const;
    /// `>= 1`, written `=1`.
    bool is_almost_sure() const;

    std::size_t hash() const;

    friend bool operator==(const StateFormula& a, const StateFormula& b);
    friend std::strong_ordering operator<=>(const StateFormula& a, const StateFormula& b);

private:
    struct Node;
    explicit StateFormula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

struct PathFormula {
    PathOp op;
    StateFormula body;

    std::size_t hash() const;
    friend bool operator==(const PathFormula& a, const PathFormula& b) = default;
    friend std::strong_ordering operator<=>(const PathFormula& a, const PathFormula& b);
};

struct FormulaHash {
    std::size_t operator()(const StateFormula& f) const { return f.hash(); }
    std::size_t operator()(const PathFormula& p) const { return p.hash(); }
};

using FormulaSet = std::set<StateFormula>;
using PathSet = std::set<PathFormula>;

// Concrete syntax, e.g. `F>=1/2[a & F>=1/5[!a]]`; `>= 1` prints as `=1`.
std::string to_string(const StateFormula& f);
std::string to_string(const PathFormula& p);
std::string to_string(const FormulaSet& set);
std::string to_string(const PathSet& set);

struct FormulaSets {
    FormulaSet sub;         // all state subformulae
    FormulaSet nsub;        // members of sub that are not probabilistic
    PathSet psub;           // path formulae of probabilistic members of sub
    PathSet maximal_psub;   // members of psub not nested inside another member
    PathSet p;              // path formulae of probabilistic members of X itself
};

FormulaSet sub(const StateFormula& f);
FormulaSet sub(const FormulaSet& xs);
PathSet psub(const StateFormula& f);
PathSet psub(const FormulaSet& xs);
PathSet maximal_psub(const FormulaSet& xs);
PathSet path_formulas(const FormulaSet& xs);
FormulaSets formula_sets(const FormulaSet& xs);

/// True if `inner` occurs as a proper path subformula of `outer`.
bool nested_in(const PathFormula& inner, const PathFormula& outer);

struct FragmentMembership {
    bool in_l1 = false;
    bool in_l2 = false;
    bool in_l3 = false;
    bool in_l4 = false;
};

enum class Fragment { L1, L2, L3, L4 };

FragmentMembership fragment_classify(const StateFormula& f);
bool in_fragment(const StateFormula& f, Fragment fragment);

}  // namespace pctl
