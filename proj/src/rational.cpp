#include "pctl/rational.hpp"

#include <cctype>

namespace pctl {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view text) {
    bool negative = false;
    if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    Rational result;
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        auto num = text.substr(0, slash);
        auto den = text.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) return std::nullopt;
        Integer d(std::string(den), 10);
        if (d == 0) return std::nullopt;
        result = Rational(Integer(std::string(num), 10), d);
    } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
        auto whole = text.substr(0, dot);
        auto frac = text.substr(dot + 1);
        if (whole.empty() && frac.empty()) return std::nullopt;
        if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)))
            return std::nullopt;
        std::string digits = std::string(whole) + std::string(frac);
        Integer scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
        result = Rational(Integer(digits.empty() ? "0" : digits, 10), scale);
    } else {
        if (!all_digits(text)) return std::nullopt;
        result = Rational(Integer(std::string(text), 10));
    }
    result.canonicalize();
    if (negative) result = -result;
    return result;
}

std::string to_string(const Rational& value) {
    Rational copy = value;
    copy.canonicalize();
    return copy.get_str();
}

Rational rationalize(const Rational& exact, const Rational& tolerance) {
    // Convergents h/k of the continued fraction of `exact`; stop at the first
    // one within tolerance.
    Integer h_prev = 1, h_prev2 = 0;
    Integer k_prev = 0, k_prev2 = 1;
    Rational rest = exact;
    for (int i = 0; i < 256; ++i) {
        Integer a;
        mpz_fdiv_q(a.get_mpz_t(), rest.get_num_mpz_t(), rest.get_den_mpz_t());
        Integer h = a * h_prev + h_prev2;
        Integer k = a * k_prev + k_prev2;
        h_prev2 = h_prev;
        h_prev = h;
        k_prev2 = k_prev;
        k_prev = k;
        Rational approx(h, k);
        approx.canonicalize();
        if (abs(approx - exact) <= tolerance) return approx;
        Rational frac = rest - Rational(a);
        if (frac == 0) return approx;
        rest = 1 / frac;
    }
    return exact;
}

}  // namespace pctl
