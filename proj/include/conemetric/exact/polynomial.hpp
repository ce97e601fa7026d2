#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "conemetric/exact/rational.hpp"

namespace conemetric::exact {

/// Dense univariate polynomial over a field F, coefficients stored low degree first.
/// The zero polynomial has no coefficients and degree -1.
template <class F>
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<F> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Polynomial constant(F v) { return Polynomial(std::vector<F>{std::move(v)}); }
    static Polynomial monomial(std::size_t k, F v = F(1)) {
        std::vector<F> c(k + 1);
        c[k] = std::move(v);
        return Polynomial(std::move(c));
    }
    /// t - r
    static Polynomial linear_root(const F& r) { return Polynomial(std::vector<F>{-r, F(1)}); }

    [[nodiscard]] int degree() const { return static_cast<int>(c_.size()) - 1; }
    [[nodiscard]] bool is_zero() const { return c_.empty(); }
    [[nodiscard]] const std::vector<F>& coeffs() const { return c_; }
    /// Coefficient of t^k (zero beyond the degree).
    [[nodiscard]] F coeff(std::size_t k) const { return k < c_.size() ? c_[k] : F{}; }
    [[nodiscard]] const F& leading() const { return c_.back(); }

    F operator()(const F& x) const {
        F acc{};
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
            acc *= x;
            acc += *it;
        }
        return acc;
    }

    Polynomial& operator+=(const Polynomial& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
        for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
        trim();
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
        for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
        trim();
        return *this;
    }
    Polynomial& operator*=(const F& s) {
        for (auto& x : c_) x *= s;
        trim();
        return *this;
    }
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, const F& s) { return a *= s; }
    friend Polynomial operator*(const F& s, Polynomial a) { return a *= s; }
    friend Polynomial operator-(Polynomial a) { return a *= F(-1); }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return {};
        std::vector<F> out(a.c_.size() + b.c_.size() - 1);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(out));
    }
    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.c_ == b.c_; }
    friend bool operator!=(const Polynomial& a, const Polynomial& b) { return !(a == b); }

    /// Euclidean division: *this = q * d + r with deg r < deg d.
    [[nodiscard]] std::pair<Polynomial, Polynomial> divmod(const Polynomial& d) const {
        if (d.is_zero()) throw std::domain_error("polynomial division by zero");
        if (degree() < d.degree()) return {Polynomial{}, *this};
        std::vector<F> rem = c_;
        std::vector<F> quo(c_.size() - d.c_.size() + 1);
        const F& lead = d.leading();
        for (int k = degree() - d.degree(); k >= 0; --k) {
            const F f = rem[k + d.degree()] / lead;
            quo[k] = f;
            for (int j = 0; j <= d.degree(); ++j) rem[k + j] -= f * d.c_[j];
        }
        rem.resize(d.c_.size() - 1);
        return {Polynomial(std::move(quo)), Polynomial(std::move(rem))};
    }

    /// Unique polynomial of degree < xs.size() through (xs[k], ys[k]); nodes must be distinct.
    static Polynomial interpolate(const std::vector<F>& xs, const std::vector<F>& ys) {
        if (xs.size() != ys.size()) throw std::invalid_argument("interpolate: size mismatch");
        Polynomial out;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            Polynomial basis = constant(F(1));
            F denom(1);
            for (std::size_t j = 0; j < xs.size(); ++j) {
                if (j == k) continue;
                if (xs[j] == xs[k]) throw std::invalid_argument("interpolate: repeated node");
                basis = basis * linear_root(xs[j]);
                denom *= xs[k] - xs[j];
            }
            out += basis * (ys[k] / denom);
        }
        return out;
    }

private:
    void trim() {
        while (!c_.empty() && is_zero_value(c_.back())) c_.pop_back();
    }
    static bool is_zero_value(const F& v) { return v == F{}; }

    std::vector<F> c_;
};

/// Determinant over a field by Gaussian elimination; the matrix is consumed.
template <class F>
F determinant(std::vector<std::vector<F>> m) {
    const std::size_t n = m.size();
    F det(1);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && m[pivot][col] == F{}) ++pivot;
        if (pivot == n) return F{};
        if (pivot != col) {
            std::swap(m[pivot], m[col]);
            det = -det;
        }
        det *= m[col][col];
        for (std::size_t r = col + 1; r < n; ++r) {
            if (m[r][col] == F{}) continue;
            const F f = m[r][col] / m[col][col];
            for (std::size_t k = col; k < n; ++k) m[r][k] -= f * m[col][k];
        }
    }
    return det;
}

/// Resultant of the binary forms of formal degrees (da, db) whose dehomogenizations are a and b.
/// Vanishes iff the forms share a root on P^1, the point at infinity included (a form of formal
/// degree da vanishes at infinity when deg a < da).
template <class F>
F homogeneous_resultant(const Polynomial<F>& a, int da, const Polynomial<F>& b, int db) {
    if (da < 0 || db < 0) throw std::invalid_argument("homogeneous_resultant: negative formal degree");
    if (a.degree() > da || b.degree() > db)
        throw std::invalid_argument("homogeneous_resultant: degree exceeds formal degree");
    const int size = da + db;
    if (size == 0) return F(1);
    std::vector<std::vector<F>> syl(size, std::vector<F>(size));
    // Sylvester rows: coefficients from formal top degree down.
    for (int r = 0; r < db; ++r)
        for (int k = 0; k <= da; ++k) syl[r][r + k] = a.coeff(static_cast<std::size_t>(da - k));
    for (int r = 0; r < da; ++r)
        for (int k = 0; k <= db; ++k) syl[db + r][r + k] = b.coeff(static_cast<std::size_t>(db - k));
    return determinant(std::move(syl));
}

}  // namespace conemetric::exact
