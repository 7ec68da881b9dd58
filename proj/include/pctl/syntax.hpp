#pragma once

#include "pctl/formula.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pctl {

struct SourcePos {
    int line = 1;
    int column = 1;
};

class ParseError : public std::runtime_error {
public:
    ParseError(SourcePos pos, const std::string& message);
    SourcePos pos() const { return pos_; }

private:
    SourcePos pos_;
};

/// Raised when normalization would produce a trivial probability constraint.
class NormalizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SurfaceCmp { Geq, Gt, Leq, Lt, Eq };

/// Parse tree as written: negation on any subformula and all comparisons.
struct SurfaceFormula {
    enum class Kind { Atom, Not, And, Or, Prob };

    Kind kind = Kind::Atom;
    SourcePos pos;
    std::string name;
    std::vector<SurfaceFormula> operands;  // Not: one; And/Or: two or more; Prob: the body
    PathOp op = PathOp::Eventually;
    SurfaceCmp cmp = SurfaceCmp::Geq;
    Rational bound;
};

SurfaceFormula parse(std::string_view text);
StateFormula normalize(const SurfaceFormula& f);

/// parse followed by normalize.
StateFormula parse_formula(std::string_view text);

}  // namespace pctl
