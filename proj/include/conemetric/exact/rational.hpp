#pragma once

#include <cctype>
#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "conemetric/error.hpp"

namespace conemetric::exact {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error("parse error: " + what) {}
};

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

/// Exact value of a finite double (every double is a dyadic rational).
inline Rational from_double(double x) {
    if (!std::isfinite(x)) throw ParseError("non-finite floating point value");
    if (x == 0.0) return Rational(0);
    int exponent = 0;
    const double mantissa = std::frexp(x, &exponent);
    // 53-bit integer mantissa
    const auto m = static_cast<std::int64_t>(std::ldexp(mantissa, 53));
    exponent -= 53;
    Rational out{Integer(m)};
    if (exponent > 0) {
        out *= Rational(Integer(1) << exponent);
    } else if (exponent < 0) {
        out /= Rational(Integer(1) << (-exponent));
    }
    return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

inline Integer parse_integer(std::string_view s) {
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    if (!all_digits(s)) throw ParseError("not an integer: '" + std::string(s) + "'");
    const auto first = s.find_first_not_of('0');
    Integer v{first == std::string_view::npos ? std::string("0") : std::string(s.substr(first))};
    return negative ? Integer(-v) : v;
}

inline Integer pow10(long k) {
    Integer p = 1;
    for (long i = 0; i < k; ++i) p *= 10;
    return p;
}

}  // namespace detail

/// Parses "p/q", an integer, or a decimal such as "-0.125" or "2.5e-3" into an exact rational.
inline Rational parse_rational(std::string_view text) {
    const std::string_view s = detail::trim(text);
    if (s.empty()) throw ParseError("empty rational");
    if (const auto slash = s.find('/'); slash != std::string_view::npos) {
        const Integer num = detail::parse_integer(detail::trim(s.substr(0, slash)));
        const Integer den = detail::parse_integer(detail::trim(s.substr(slash + 1)));
        if (den == 0) throw ParseError("zero denominator in '" + std::string(s) + "'");
        return Rational(num, den);
    }

    std::string_view body = s;
    bool negative = false;
    if (body.front() == '-' || body.front() == '+') {
        negative = body.front() == '-';
        body.remove_prefix(1);
    }
    long exponent = 0;
    if (const auto e = body.find_first_of("eE"); e != std::string_view::npos) {
        const Integer ev = detail::parse_integer(body.substr(e + 1));
        if (ev > 4000 || ev < -4000) throw ParseError("exponent out of range in '" + std::string(s) + "'");
        exponent = ev.convert_to<long>();
        body = body.substr(0, e);
    }
    std::string digits;
    long frac_digits = 0;
    if (const auto dot = body.find('.'); dot != std::string_view::npos) {
        const auto ip = body.substr(0, dot);
        const auto fp = body.substr(dot + 1);
        if ((!ip.empty() && !detail::all_digits(ip)) || (!fp.empty() && !detail::all_digits(fp)) ||
            (ip.empty() && fp.empty()))
            throw ParseError("not a number: '" + std::string(s) + "'");
        digits = std::string(ip) + std::string(fp);
        frac_digits = static_cast<long>(fp.size());
    } else {
        if (!detail::all_digits(body)) throw ParseError("not a number: '" + std::string(s) + "'");
        digits = std::string(body);
    }
    const auto first = digits.find_first_not_of('0');
    digits = first == std::string::npos ? "0" : digits.substr(first);
    Rational value{Integer(digits)};
    const long shift = exponent - frac_digits;
    if (shift > 0) value *= Rational(detail::pow10(shift));
    if (shift < 0) value /= Rational(detail::pow10(-shift));
    return negative ? Rational(-value) : value;
}

inline std::string to_string(const Rational& q) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(q);
    if (boost::multiprecision::denominator(q) != 1) os << '/' << boost::multiprecision::denominator(q);
    return os.str();
}

/// Element of Q(i).
struct GaussianRational {
    Rational re;
    Rational im;

    GaussianRational() = default;
    GaussianRational(int r) : re(r) {}  // NOLINT(google-explicit-constructor)
    GaussianRational(Rational r) : re(std::move(r)) {}  // NOLINT(google-explicit-constructor)
    GaussianRational(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

    [[nodiscard]] bool is_zero() const { return re == 0 && im == 0; }
    [[nodiscard]] GaussianRational conj() const { return {re, -im}; }
    /// |z|^2
    [[nodiscard]] Rational norm() const { return re * re + im * im; }
    [[nodiscard]] std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }

    GaussianRational& operator+=(const GaussianRational& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    GaussianRational& operator-=(const GaussianRational& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    GaussianRational& operator*=(const GaussianRational& o) {
        Rational r = re * o.re - im * o.im;
        im = re * o.im + im * o.re;
        re = std::move(r);
        return *this;
    }
    GaussianRational& operator/=(const GaussianRational& o) {
        const Rational n = o.norm();
        if (n == 0) throw std::domain_error("division by zero in Q(i)");
        *this *= o.conj();
        re /= n;
        im /= n;
        return *this;
    }

    friend GaussianRational operator+(GaussianRational a, const GaussianRational& b) { return a += b; }
    friend GaussianRational operator-(GaussianRational a, const GaussianRational& b) { return a -= b; }
    friend GaussianRational operator*(GaussianRational a, const GaussianRational& b) { return a *= b; }
    friend GaussianRational operator/(GaussianRational a, const GaussianRational& b) { return a /= b; }
    friend GaussianRational operator-(const GaussianRational& a) { return {-a.re, -a.im}; }
    friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
        return a.re == b.re && a.im == b.im;
    }
    friend bool operator!=(const GaussianRational& a, const GaussianRational& b) { return !(a == b); }

    friend std::ostream& operator<<(std::ostream& os, const GaussianRational& z) {
        os << to_string(z.re);
        if (z.im != 0) os << (z.im > 0 ? "+" : "-") << to_string(z.im > 0 ? z.im : Rational(-z.im)) << "i";
        return os;
    }
};

inline GaussianRational from_complex(std::complex<double> z) {
    return {from_double(z.real()), from_double(z.imag())};
}

inline bool is_zero(const Rational& q) { return q == 0; }
inline bool is_zero(const GaussianRational& z) { return z.is_zero(); }

}  // namespace conemetric::exact
