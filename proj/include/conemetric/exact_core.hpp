#pragma once

// Exact certification of the rank-2 parabolic bundle E = O(1) + O(n-1) on P^1 attached to a
// cone configuration: weights, flags, line subbundles, parabolic degrees and stability.
//
// Conventions: a section of E over the affine chart is a polynomial pair (f, g) with
// deg f <= 1, deg g <= n-1, and the fiber E_x is identified with C^2 by evaluation. The first
// coordinate is the O(1) summand, the second the O(n-1) summand.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conemetric/error.hpp"
#include "conemetric/exact/polynomial.hpp"
#include "conemetric/exact/rational.hpp"

namespace conemetric::exact {

using Scalar = GaussianRational;
using Poly = Polynomial<Scalar>;

class InvalidConfiguration : public Error {
public:
    explicit InvalidConfiguration(const std::string& what) : Error("invalid configuration: " + what) {}
};

class AngleOutOfRange : public Error {
public:
    explicit AngleOutOfRange(std::size_t i)
        : Error("angle " + std::to_string(i + 1) + " outside (0, 1)"), index(i) {}
    std::size_t index;
};

class InvalidWeights : public Error {
public:
    explicit InvalidWeights(const std::string& what) : Error("invalid parabolic weights: " + what) {}
};

/// Property (i) fails: the flag line at `index` meets the O(n-1) summand.
class FlagDegenerate : public Error {
public:
    explicit FlagDegenerate(std::size_t i)
        : Error("flag line " + std::to_string(i + 1) + " lies in O(n-1)"), index(i) {}
    std::size_t index;
};

/// Property (ii) fails: some degree-1 subbundle contains every flag line.
class FlagContainedInLine : public Error {
public:
    FlagContainedInLine() : Error("flag lines all lie in a degree 1 subbundle") {}
};

class InvalidSubbundle : public Error {
public:
    explicit InvalidSubbundle(const std::string& what) : Error("invalid line subbundle: " + what) {}
};

class InconsistentDegree : public Error {
public:
    explicit InconsistentDegree(int d)
        : Error("subbundle of degree " + std::to_string(d) + " has nonzero O(1) component") {}
};

class ParityMismatch : public Error {
public:
    ParityMismatch(int degree, int square)
        : Error("degree " + std::to_string(degree) + " and section square " + std::to_string(square) +
                " have different parity") {}
};

// ---------------------------------------------------------------------------------------------
// Domain types

/// n >= 3 distinct finite points of Q(i) with cone angles 2*pi*alpha_i, 0 < alpha_i < 1.
class ConeConfiguration {
public:
    ConeConfiguration(std::vector<Scalar> points, std::vector<Rational> angles)
        : points_(std::move(points)), angles_(std::move(angles)) {
        if (points_.size() != angles_.size())
            throw InvalidConfiguration("number of points and angles differ");
        if (points_.size() < 3) throw InvalidConfiguration("need at least 3 points");
        for (std::size_t i = 0; i < angles_.size(); ++i)
            if (angles_[i] <= 0 || angles_[i] >= 1) throw AngleOutOfRange(i);
        for (std::size_t i = 0; i < points_.size(); ++i)
            for (std::size_t j = i + 1; j < points_.size(); ++j)
                if (points_[i] == points_[j])
                    throw InvalidConfiguration("points " + std::to_string(i + 1) + " and " +
                                               std::to_string(j + 1) + " coincide");
    }

    [[nodiscard]] std::size_t size() const { return points_.size(); }
    [[nodiscard]] const std::vector<Scalar>& points() const { return points_; }
    [[nodiscard]] const std::vector<Rational>& angles() const { return angles_; }
    [[nodiscard]] const Scalar& point(std::size_t i) const { return points_[i]; }
    [[nodiscard]] const Rational& angle(std::size_t i) const { return angles_[i]; }

private:
    std::vector<Scalar> points_;
    std::vector<Rational> angles_;
};

struct WeightPair {
    Rational a1;
    Rational a2;
};

/// Per-point weights with a1 + a2 = 1 and 0 < a1 < a2 < 1; alpha_i = a2 - a1.
class ParabolicWeights {
public:
    explicit ParabolicWeights(std::vector<WeightPair> w) : w_(std::move(w)) {
        for (std::size_t i = 0; i < w_.size(); ++i) {
            const auto& [a1, a2] = w_[i];
            if (a1 + a2 != 1) throw InvalidWeights("a1 + a2 != 1 at point " + std::to_string(i + 1));
            if (!(a1 > 0 && a1 < a2 && a2 < 1))
                throw InvalidWeights("need 0 < a1 < a2 < 1 at point " + std::to_string(i + 1));
        }
    }
    [[nodiscard]] std::size_t size() const { return w_.size(); }
    [[nodiscard]] const WeightPair& operator[](std::size_t i) const { return w_[i]; }
    [[nodiscard]] Rational alpha(std::size_t i) const { return w_[i].a2 - w_[i].a1; }
    [[nodiscard]] auto begin() const { return w_.begin(); }
    [[nodiscard]] auto end() const { return w_.end(); }

private:
    std::vector<WeightPair> w_;
};

struct BundleModel {
    int n;

    explicit BundleModel(int points) : n(points) {
        if (n < 3) throw InvalidConfiguration("bundle model needs n >= 3");
    }
    explicit BundleModel(const ConeConfiguration& c) : BundleModel(static_cast<int>(c.size())) {}

    [[nodiscard]] int degree() const { return n; }
    /// Homogenization degrees of (sigma_1, sigma_2) for a subbundle of degree d.
    [[nodiscard]] std::pair<int, int> component_degrees(int d) const { return {1 - d, n - 1 - d}; }
};

/// Phi = [[lambda1, 0], [P, lambda2]] acting on fibers by (s1, s2) -> (lambda1 s1, P(x) s1 + lambda2 s2).
struct Automorphism {
    Scalar lambda1{1};
    Scalar lambda2{1};
    Poly P;

    static Automorphism identity() { return {}; }

    Automorphism(Scalar l1 = Scalar(1), Scalar l2 = Scalar(1), Poly p = {})
        : lambda1(std::move(l1)), lambda2(std::move(l2)), P(std::move(p)) {
        if (lambda1.is_zero() || lambda2.is_zero()) throw std::invalid_argument("automorphism: zero diagonal entry");
    }

    void check(const BundleModel& m) const {
        if (P.degree() > m.n - 2) throw std::invalid_argument("automorphism: deg P > n - 2");
    }

    [[nodiscard]] std::pair<Scalar, Scalar> apply(const Scalar& x, const Scalar& v1, const Scalar& v2) const {
        return {lambda1 * v1, P(x) * v1 + lambda2 * v2};
    }

    /// (this o other)
    [[nodiscard]] Automorphism compose(const Automorphism& other) const {
        // [[l1,0],[P,l2]] [[m1,0],[R,m2]] = [[l1 m1, 0],[P m1 + l2 R, l2 m2]]
        return {lambda1 * other.lambda1, lambda2 * other.lambda2, P * other.lambda1 + other.P * lambda2};
    }

    [[nodiscard]] Automorphism inverse() const {
        // [[1/l1, 0], [-P/(l1 l2), 1/l2]]
        return {Scalar(1) / lambda1, Scalar(1) / lambda2, P * (-(Scalar(1) / (lambda1 * lambda2)))};
    }

    [[nodiscard]] bool is_scalar() const { return P.is_zero() && lambda1 == lambda2; }

    friend bool operator==(const Automorphism& a, const Automorphism& b) {
        return a.lambda1 == b.lambda1 && a.lambda2 == b.lambda2 && a.P == b.P;
    }
};

/// Line F_i in the fiber over point `index`, stored with first nonzero coordinate equal to 1.
struct FlagLine {
    std::size_t index;
    Scalar v1;
    Scalar v2;

    static FlagLine through(std::size_t index, const Scalar& a, const Scalar& b) {
        if (!a.is_zero()) return {index, Scalar(1), b / a};
        if (!b.is_zero()) return {index, Scalar(0), Scalar(1)};
        throw std::invalid_argument("flag line from the zero vector");
    }

    [[nodiscard]] bool transverse_to_second_summand() const { return !v1.is_zero(); }
    [[nodiscard]] bool contains(const Scalar& a, const Scalar& b) const { return v1 * b - v2 * a == Scalar{}; }

    friend bool operator==(const FlagLine& a, const FlagLine& b) {
        return a.index == b.index && a.v1 == b.v1 && a.v2 == b.v2;
    }
};

using Flag = std::vector<FlagLine>;

/// Inclusion L = O(d) -> O(1) + O(n-1) given by the pair (p, q) of homogeneous degrees (1-d, n-1-d),
/// stored dehomogenized in the affine chart.
struct LineSubbundle {
    int degree;
    Poly p;
    Poly q;

    /// The summand O(n-1).
    static LineSubbundle second_summand(const BundleModel& m) { return {m.n - 1, Poly{}, Poly::constant(1)}; }
    /// Phi(O(1)) for Phi with lambda1 = lambda2 = 1 and the given P.
    static LineSubbundle degree_one(Poly P) { return {1, Poly::constant(1), std::move(P)}; }
    static LineSubbundle first_summand() { return degree_one(Poly{}); }

    [[nodiscard]] std::pair<Scalar, Scalar> fiber_direction(const Scalar& x) const { return {p(x), q(x)}; }
};

// ---------------------------------------------------------------------------------------------
// Angle conditions

inline Rational angle_defect_sum(const ConeConfiguration& c) {
    Rational s = 0;
    for (const auto& a : c.angles()) s += 1 - a;
    return s;
}

/// Sum (1 - alpha_i) < 2.
inline bool check_gauss_bonnet(const ConeConfiguration& c) { return angle_defect_sum(c) < 2; }

/// For every j: 1 - alpha_j < sum_{i != j} (1 - alpha_i).
inline bool check_angle_stability(const ConeConfiguration& c) {
    const Rational total = angle_defect_sum(c);
    return std::all_of(c.angles().begin(), c.angles().end(), [&](const Rational& a) {
        const Rational mine = 1 - a;
        return mine < total - mine;
    });
}

/// First index violating the angle stability inequality, if any.
inline std::optional<std::size_t> angle_stability_violation(const ConeConfiguration& c) {
    const Rational total = angle_defect_sum(c);
    for (std::size_t j = 0; j < c.size(); ++j) {
        const Rational mine = 1 - c.angle(j);
        if (!(mine < total - mine)) return j;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------------------------
// Weights and degrees

inline ParabolicWeights weights_from_angles(const std::vector<Rational>& alphas) {
    std::vector<WeightPair> w;
    w.reserve(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (alphas[i] <= 0 || alphas[i] >= 1) throw AngleOutOfRange(i);
        w.push_back({(1 - alphas[i]) / 2, (1 + alphas[i]) / 2});
    }
    return ParabolicWeights(std::move(w));
}

inline ParabolicWeights weights_from_angles(const ConeConfiguration& c) { return weights_from_angles(c.angles()); }

/// deg E - sum (a_i1 + a_i2); identically zero.
inline Rational parabolic_degree_total(const BundleModel& m, const ParabolicWeights& w) {
    if (static_cast<int>(w.size()) != m.n) throw InvalidWeights("weight count differs from n");
    Rational s = m.degree();
    for (const auto& [a1, a2] : w) s -= a1 + a2;
    return s;
}

// ---------------------------------------------------------------------------------------------
// Flags

/// F_i = fiber of O(1) for i < n, F_n = span(1, 1).
inline Flag canonical_flag(const ConeConfiguration& c) {
    Flag f;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) f.push_back(FlagLine::through(i, 1, 0));
    f.push_back(FlagLine::through(c.size() - 1, 1, 1));
    return f;
}

inline FlagLine transform(const Automorphism& phi, const FlagLine& line, const ConeConfiguration& c) {
    auto [a, b] = phi.apply(c.point(line.index), line.v1, line.v2);
    return FlagLine::through(line.index, a, b);
}

inline void check_flag_shape(const Flag& flag, const ConeConfiguration& c) {
    if (flag.size() != c.size()) throw InvalidConfiguration("flag has wrong number of lines");
    for (std::size_t i = 0; i < flag.size(); ++i)
        if (flag[i].index != i) throw InvalidConfiguration("flag lines out of order");
}

/// Automorphism carrying a flag with properties (i) and (ii) onto the canonical flag. Unique up to
/// an overall scalar; normalized by lambda1 = 1.
inline Automorphism normalize_flag(const Flag& flag, const ConeConfiguration& c) {
    check_flag_shape(flag, c);
    for (const auto& line : flag)
        if (!line.transverse_to_second_summand()) throw FlagDegenerate(line.index);

    const std::size_t n = c.size();
    std::vector<Scalar> xs;
    std::vector<Scalar> ys;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        xs.push_back(c.point(i));
        ys.push_back(-flag[i].v2 / flag[i].v1);
    }
    const Poly P = Poly::interpolate(xs, ys);

    const Scalar& a = flag[n - 1].v1;
    const Scalar b = flag[n - 1].v2 + P(c.point(n - 1)) * a;
    if (b.is_zero()) throw FlagContainedInLine();
    const Scalar lambda2 = a / b;
    return Automorphism(Scalar(1), lambda2, P * lambda2);
}

// ---------------------------------------------------------------------------------------------
// Line subbundles

/// Throws unless (p, q) define a line subbundle of degree L.degree: components fit their
/// homogeneous degrees and have no common zero on P^1.
inline void validate_subbundle(const LineSubbundle& L, const BundleModel& m) {
    const auto [dp, dq] = m.component_degrees(L.degree);
    if (L.p.is_zero() && L.q.is_zero()) throw InvalidSubbundle("both components vanish");
    if (!L.p.is_zero() && L.p.degree() > dp) {
        if (L.degree > 1) throw InconsistentDegree(L.degree);
        throw InvalidSubbundle("first component exceeds degree " + std::to_string(dp));
    }
    if (!L.q.is_zero() && L.q.degree() > dq) throw InvalidSubbundle("second component exceeds degree " + std::to_string(dq));
    // A component with negative homogeneous degree is forced to vanish; the other must then be
    // a nowhere-zero form, i.e. a nonzero constant of degree 0.
    if (dp < 0) {
        if (dq != 0) throw InvalidSubbundle("O(n-1) component has zeros");
        return;
    }
    if (dq < 0) {
        if (dp != 0) throw InvalidSubbundle("O(1) component has zeros");
        return;
    }
    if (homogeneous_resultant(L.p, dp, L.q, dq).is_zero()) throw InvalidSubbundle("components share a zero on P^1");
}

struct SubbundleClass {
    enum class Kind { IsSecondSummand, ImageOfO1, LowDegree };
    Kind kind;
    std::optional<Automorphism> phi;  // set for ImageOfO1
};

inline SubbundleClass classify_line_subbundle(const LineSubbundle& L, const BundleModel& m) {
    validate_subbundle(L, m);
    if (L.degree > 1) {
        if (!L.p.is_zero()) throw InconsistentDegree(L.degree);
        if (L.degree != m.n - 1) throw InvalidSubbundle("positive degree subbundle other than O(n-1)");
        return {SubbundleClass::Kind::IsSecondSummand, std::nullopt};
    }
    if (L.degree == 1) {
        // p is a nonzero constant here; P = q / p.
        const Scalar& p0 = L.p.leading();
        return {SubbundleClass::Kind::ImageOfO1, Automorphism(Scalar(1), Scalar(1), L.q * (Scalar(1) / p0))};
    }
    return {SubbundleClass::Kind::LowDegree, std::nullopt};
}

/// Indices i with F_i contained in L.
inline std::vector<std::size_t> contained_flag_lines(const LineSubbundle& L, const Flag& flag,
                                                     const ConeConfiguration& c) {
    std::vector<std::size_t> out;
    for (const auto& line : flag) {
        auto [a, b] = L.fiber_direction(c.point(line.index));
        if (line.contains(a, b)) out.push_back(line.index);
    }
    return out;
}

/// deg L - sum_{F_i in L} a_i1 - sum_{F_i not in L} a_i2.
inline Rational line_parabolic_degree(const LineSubbundle& L, const Flag& flag, const ParabolicWeights& w,
                                      const ConeConfiguration& c) {
    const BundleModel m(c);
    validate_subbundle(L, m);
    check_flag_shape(flag, c);
    if (w.size() != c.size()) throw InvalidWeights("weight count differs from n");
    Rational d = L.degree;
    for (const auto& line : flag) {
        auto [a, b] = L.fiber_direction(c.point(line.index));
        d -= line.contains(a, b) ? w[line.index].a1 : w[line.index].a2;
    }
    return d;
}

struct DestabilizingWitness {
    enum class Kind { LowDegreeBound, SecondSummand, DegreeOne };
    Kind kind;
    std::optional<LineSubbundle> subbundle;  // empty for the analytic low-degree bound
    std::vector<std::size_t> contained;      // flag lines inside the witness
};

struct DestabilizingResult {
    Rational value;
    DestabilizingWitness witness;
};

/// Supremum of the parabolic degree over all line subbundles, with a witness.
///
/// Degree <= 0 subbundles are bounded by -sum a_i1. Degree d in (1, n-1) does not occur and
/// degree n-1 is the summand O(n-1). Degree 1 subbundles are Phi(O(1)); the ones through n-1
/// prescribed flag lines are the interpolants omitting one index, and by monotonicity in the
/// contained set these dominate all others (the full set shows up when an interpolant happens to
/// pass through the omitted line as well).
inline DestabilizingResult max_destabilizing_degree(const Flag& flag, const ParabolicWeights& w,
                                                    const ConeConfiguration& c) {
    check_flag_shape(flag, c);
    for (const auto& line : flag)
        if (!line.transverse_to_second_summand()) throw FlagDegenerate(line.index);
    const BundleModel m(c);
    const std::size_t n = c.size();

    std::optional<DestabilizingResult> best;
    auto consider = [&](Rational value, DestabilizingWitness witness) {
        if (!best || value > best->value) best = DestabilizingResult{std::move(value), std::move(witness)};
    };

    {
        const auto L = LineSubbundle::second_summand(m);
        consider(line_parabolic_degree(L, flag, w, c),
                 {DestabilizingWitness::Kind::SecondSummand, L, contained_flag_lines(L, flag, c)});
    }
    for (std::size_t omit = n; omit-- > 0;) {
        std::vector<Scalar> xs;
        std::vector<Scalar> ys;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == omit) continue;
            xs.push_back(c.point(i));
            ys.push_back(flag[i].v2 / flag[i].v1);
        }
        const auto L = LineSubbundle::degree_one(Poly::interpolate(xs, ys));
        consider(line_parabolic_degree(L, flag, w, c),
                 {DestabilizingWitness::Kind::DegreeOne, L, contained_flag_lines(L, flag, c)});
    }
    {
        Rational bound = 0;
        for (const auto& [a1, a2] : w) bound -= a1;
        consider(bound, {DestabilizingWitness::Kind::LowDegreeBound, std::nullopt, {}});
    }
    return std::move(*best);
}

inline bool is_parabolically_stable(const Flag& flag, const ParabolicWeights& w, const ConeConfiguration& c) {
    return max_destabilizing_degree(flag, w, c).value < 0;
}

// ---------------------------------------------------------------------------------------------
// Intersection arithmetic on the Hirzebruch surface

/// Tan(F, C) = C^2 - C.T_F with T_F = -(n-2) f.
inline long tangency_count(long self_intersection, long fiber_intersection, long n) {
    return self_intersection + (n - 2) * fiber_intersection;
}

/// Splitting type (a, b), a <= b, of a rank-2 bundle of the given degree whose projectivization
/// has minimal section square -(b - a).
inline std::pair<int, int> splitting_type_from_invariants(int degree, int min_section_square) {
    const int gap = min_section_square < 0 ? -min_section_square : min_section_square;
    if ((degree - gap) % 2 != 0) throw ParityMismatch(degree, min_section_square);
    const int a = (degree - gap) / 2;
    return {a, a + gap};
}

}  // namespace conemetric::exact
