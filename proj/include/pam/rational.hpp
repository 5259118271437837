#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <string_view>

namespace pam {

// Exact rational arithmetic for every probability value in the library.
// No floating point is used anywhere on the verification path: anonymity
// is an exact equality of probabilities, so tolerances would create
// spurious verdicts.
using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

inline Rational rat(long long num, long long den = 1) {
    return Rational(Integer(num), Integer(den));
}

// Renders in lowest terms as "p/q", or "p" when the denominator is 1.
inline std::string to_string(const Rational& r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

// Parses "p", "-p" or "p/q" with arbitrary-precision components.
// Returns nullopt on malformed input or zero denominator.
inline std::optional<Rational> parse_rational(std::string_view text) {
    auto is_int = [](std::string_view s) {
        if (!s.empty() && (s[0] == '-' || s[0] == '+')) s.remove_prefix(1);
        if (s.empty()) return false;
        for (char c : s)
            if (c < '0' || c > '9') return false;
        return true;
    };
    auto slash = text.find('/');
    try {
        if (slash == std::string_view::npos) {
            if (!is_int(text)) return std::nullopt;
            return Rational(Integer(std::string(text)));
        }
        std::string_view ns = text.substr(0, slash);
        std::string_view ds = text.substr(slash + 1);
        if (!is_int(ns) || !is_int(ds)) return std::nullopt;
        Integer n{std::string(ns)}, d{std::string(ds)};
        if (d == 0) return std::nullopt;
        return Rational(n, d);
    } catch (...) {
        return std::nullopt;
    }
}

}  // namespace pam
