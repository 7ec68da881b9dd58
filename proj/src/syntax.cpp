#include "pctl/syntax.hpp"

#include <cctype>

namespace pctl {

ParseError::ParseError(SourcePos pos, const std::string& message)
    : std::runtime_error("line " + std::to_string(pos.line) + ", column " + std::to_string(pos.column) +
                         ": " + message),
      pos_(pos) {}

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    SurfaceFormula parse_all() {
        auto f = disjunction();
        skip_space();
        if (!at_end()) fail("unexpected '" + std::string(1, peek()) + "'");
        return f;
    }

private:
    std::string_view text_;
    std::size_t offset_ = 0;
    SourcePos pos_;

    bool at_end() const { return offset_ >= text_.size(); }
    char peek(std::size_t ahead = 0) const {
        return offset_ + ahead < text_.size() ? text_[offset_ + ahead] : '\0';
    }

    void advance() {
        if (text_[offset_] == '\n') {
            ++pos_.line;
            pos_.column = 1;
        } else {
            ++pos_.column;
        }
        ++offset_;
    }

    void skip_space() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }

    [[noreturn]] void fail(const std::string& message) const { throw ParseError(pos_, message); }
    [[noreturn]] void fail_at(SourcePos pos, const std::string& message) const { throw ParseError(pos, message); }

    void expect(char c) {
        skip_space();
        if (peek() != c) {
            if (at_end()) fail(std::string("expected '") + c + "' but reached end of input");
            fail(std::string("expected '") + c + "' but found '" + peek() + "'");
        }
        advance();
    }

    SurfaceFormula disjunction() {
        auto first = conjunction();
        skip_space();
        if (peek() != '|') return first;
        SurfaceFormula out;
        out.kind = SurfaceFormula::Kind::Or;
        out.pos = first.pos;
        out.operands.push_back(std::move(first));
        while (true) {
            skip_space();
            if (peek() != '|') break;
            advance();
            out.operands.push_back(conjunction());
        }
        return out;
    }

    SurfaceFormula conjunction() {
        auto first = unit();
        skip_space();
        if (peek() != '&') return first;
        SurfaceFormula out;
        out.kind = SurfaceFormula::Kind::And;
        out.pos = first.pos;
        out.operands.push_back(std::move(first));
        while (true) {
            skip_space();
            if (peek() != '&') break;
            advance();
            out.operands.push_back(unit());
        }
        return out;
    }

    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    // True if the identifier just read is followed by a comparison operator.
    bool comparison_follows() {
        std::size_t i = offset_;
        while (i < text_.size() && std::isspace(static_cast<unsigned char>(text_[i]))) ++i;
        return i < text_.size() && (text_[i] == '>' || text_[i] == '<' || text_[i] == '=');
    }

    SurfaceFormula unit() {
        skip_space();
        SurfaceFormula out;
        out.pos = pos_;
        if (at_end()) fail("unexpected end of input");
        char c = peek();
        if (c == '!') {
            advance();
            out.kind = SurfaceFormula::Kind::Not;
            out.operands.push_back(unit());
            return out;
        }
        if (c == '(') {
            advance();
            auto inner = disjunction();
            expect(')');
            return inner;
        }
        if (!ident_start(c)) fail(std::string("unexpected '") + c + "'");
        std::string name;
        while (!at_end() && ident_char(peek())) {
            name += peek();
            advance();
        }
        if ((name == "F" || name == "G") && comparison_follows()) {
            out.kind = SurfaceFormula::Kind::Prob;
            out.op = name == "F" ? PathOp::Eventually : PathOp::Globally;
            out.cmp = comparison();
            out.bound = number(out.cmp);
            expect('[');
            out.operands.push_back(disjunction());
            expect(']');
            return out;
        }
        out.kind = SurfaceFormula::Kind::Atom;
        out.name = std::move(name);
        return out;
    }

    SurfaceCmp comparison() {
        skip_space();
        char c = peek();
        advance();
        if (c == '=') return SurfaceCmp::Eq;
        bool or_equal = peek() == '=';
        if (or_equal) advance();
        if (c == '>') return or_equal ? SurfaceCmp::Geq : SurfaceCmp::Gt;
        return or_equal ? SurfaceCmp::Leq : SurfaceCmp::Lt;
    }

    Rational number(SurfaceCmp cmp) {
        skip_space();
        SourcePos start = pos_;
        std::string literal;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '/')) {
            literal += peek();
            advance();
        }
        if (literal.empty()) fail("expected a probability bound");
        auto value = parse_rational(literal);
        if (!value) fail_at(start, "malformed rational '" + literal + "'");
        if (*value < 0 || *value > 1) fail_at(start, "bound " + literal + " outside [0,1]");
        if (cmp == SurfaceCmp::Eq && *value != 1) fail_at(start, "'=' is only allowed as '=1'");
        return *value;
    }
};

Comparison core_of(SurfaceCmp c) { return c == SurfaceCmp::Gt ? Comparison::Gt : Comparison::Geq; }

SurfaceCmp negate(SurfaceCmp c) {
    switch (c) {
    case SurfaceCmp::Geq: return SurfaceCmp::Lt;
    case SurfaceCmp::Gt: return SurfaceCmp::Leq;
    case SurfaceCmp::Leq: return SurfaceCmp::Gt;
    case SurfaceCmp::Lt: return SurfaceCmp::Geq;
    case SurfaceCmp::Eq: return SurfaceCmp::Lt;  // `=1` is sugar for `>=1`
    }
    return c;
}

StateFormula make_prob(PathOp op, Comparison cmp, const Rational& bound, StateFormula body) {
    if ((cmp == Comparison::Geq && bound == 0) || (cmp == Comparison::Gt && bound == 1)) {
        std::string shown = std::string(op == PathOp::Eventually ? "F" : "G") +
                            (cmp == Comparison::Geq ? ">=" : ">") + to_string(bound) + "[" + to_string(body) + "]";
        throw NormalizeError("normalization yields the trivial constraint " + shown +
                             "; trivial constraints >=0 and >1 are not allowed");
    }
    return StateFormula::prob(op, cmp, bound, std::move(body));
}

StateFormula nnf(const SurfaceFormula& f, bool negated) {
    using Kind = SurfaceFormula::Kind;
    switch (f.kind) {
    case Kind::Atom:
        return negated ? StateFormula::neg_atom(f.name) : StateFormula::atom(f.name);
    case Kind::Not:
        return nnf(f.operands.front(), !negated);
    case Kind::And:
    case Kind::Or: {
        std::vector<StateFormula> parts;
        for (const auto& g : f.operands) parts.push_back(nnf(g, negated));
        bool conj = (f.kind == Kind::And) != negated;
        return conj ? StateFormula::conj(std::move(parts)) : StateFormula::disj(std::move(parts));
    }
    case Kind::Prob: {
        SurfaceCmp cmp = f.cmp == SurfaceCmp::Eq ? SurfaceCmp::Geq : f.cmp;
        if (negated) cmp = negate(cmp);
        if (cmp == SurfaceCmp::Geq || cmp == SurfaceCmp::Gt)
            return make_prob(f.op, core_of(cmp), f.bound, nnf(f.operands.front(), false));
        // P(F phi) <= r  iff  P(G !phi) >= 1-r, and dually for G and for <.
        PathOp dual = f.op == PathOp::Eventually ? PathOp::Globally : PathOp::Eventually;
        Comparison dual_cmp = cmp == SurfaceCmp::Leq ? Comparison::Geq : Comparison::Gt;
        return make_prob(dual, dual_cmp, 1 - f.bound, nnf(f.operands.front(), true));
    }
    }
    throw std::logic_error("unreachable surface formula kind");
}

}  // namespace

SurfaceFormula parse(std::string_view text) {
    return Parser(text).parse_all();
}

StateFormula normalize(const SurfaceFormula& f) {
    return nnf(f, false);
}

StateFormula parse_formula(std::string_view text) {
    return normalize(parse(text));
}

}  // namespace pctl
