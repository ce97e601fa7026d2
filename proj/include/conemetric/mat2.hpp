#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

namespace conemetric {

using cplx = std::complex<double>;

/// 2x2 complex matrix [[a, b], [c, d]].
struct Mat2 {
    cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

    static constexpr Mat2 identity() { return {}; }
    static constexpr Mat2 zero() { return {0.0, 0.0, 0.0, 0.0}; }

    [[nodiscard]] cplx det() const { return a * d - b * c; }
    [[nodiscard]] cplx trace() const { return a + d; }
    [[nodiscard]] Mat2 adjoint() const { return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)}; }
    [[nodiscard]] Mat2 transpose() const { return {a, c, b, d}; }
    [[nodiscard]] Mat2 inverse() const {
        const cplx k = 1.0 / det();
        return {d * k, -b * k, -c * k, a * k};
    }
    [[nodiscard]] double frobenius_sq() const { return std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d); }
    [[nodiscard]] double frobenius() const { return std::sqrt(frobenius_sq()); }
    [[nodiscard]] double max_abs() const { return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)}); }

    Mat2& operator+=(const Mat2& o) {
        a += o.a;
        b += o.b;
        c += o.c;
        d += o.d;
        return *this;
    }
    Mat2& operator-=(const Mat2& o) {
        a -= o.a;
        b -= o.b;
        c -= o.c;
        d -= o.d;
        return *this;
    }
    Mat2& operator*=(cplx s) {
        a *= s;
        b *= s;
        c *= s;
        d *= s;
        return *this;
    }

    friend Mat2 operator+(Mat2 x, const Mat2& y) { return x += y; }
    friend Mat2 operator-(Mat2 x, const Mat2& y) { return x -= y; }
    friend Mat2 operator*(Mat2 x, cplx s) { return x *= s; }
    friend Mat2 operator*(cplx s, Mat2 x) { return x *= s; }
    friend Mat2 operator*(const Mat2& x, const Mat2& y) {
        return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
    }
};

inline double distance(const Mat2& x, const Mat2& y) { return (x - y).frobenius(); }

/// Largest singular value.
inline double spectral_norm(const Mat2& m) {
    const double f = m.frobenius_sq();
    const double dt = std::abs(m.det());
    const double disc = std::max(0.0, f * f - 4.0 * dt * dt);
    return std::sqrt(0.5 * (f + std::sqrt(disc)));
}

/// Eigenvalues of a 2x2 matrix.
inline std::pair<cplx, cplx> eigenvalues(const Mat2& m) {
    const cplx half_tr = 0.5 * m.trace();
    const cplx disc = std::sqrt(half_tr * half_tr - m.det());
    return {half_tr + disc, half_tr - disc};
}

}  // namespace conemetric
