#include <gtest/gtest.h>

#include <random>
#include <set>

#include "conemetric/exact_core.hpp"

using namespace conemetric::exact;

namespace {

Rational q(long a, long b = 1) { return Rational(a, b); }

std::vector<Rational> angles(std::initializer_list<std::pair<long, long>> l) {
    std::vector<Rational> out;
    for (auto [a, b] : l) out.push_back(q(a, b));
    return out;
}

ConeConfiguration config(std::vector<Rational> a) {
    std::vector<Scalar> pts;
    for (std::size_t i = 0; i < a.size(); ++i) pts.emplace_back(Rational(static_cast<long>(i)));
    return ConeConfiguration(std::move(pts), std::move(a));
}

ConeConfiguration standard3() {
    return ConeConfiguration({Scalar(0), Scalar(1), Scalar(-1)}, angles({{1, 2}, {1, 2}, {1, 2}}));
}

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    long uniform(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(gen); }
    Rational rational(long range = 9) { return q(uniform(-range, range), uniform(1, range)); }
    Scalar gaussian() { return {rational(), rational()}; }
    Scalar nonzero_gaussian() {
        for (;;) {
            Scalar s = gaussian();
            if (!s.is_zero()) return s;
        }
    }
    Rational angle() { return q(uniform(1, 29), 30); }
};

ConeConfiguration random_config(Rng& rng, std::size_t n) {
    for (;;) {
        std::vector<Scalar> pts;
        std::vector<Rational> as;
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back(rng.gaussian());
            as.push_back(rng.angle());
        }
        try {
            return ConeConfiguration(std::move(pts), std::move(as));
        } catch (const InvalidConfiguration&) {
        }
    }
}

/// Independent enumeration of every flag-line subset a degree-1 subbundle can contain.
Rational brute_force_supremum(const Flag& flag, const ParabolicWeights& w, const ConeConfiguration& c) {
    const std::size_t n = c.size();
    Rational best = 0;
    for (const auto& p : w) best -= p.a1;  // degree <= 0 bound
    {
        Rational v = c.size() - 1;  // O(n-1) contains no transverse line
        for (const auto& p : w) v -= p.a2;
        best = std::max(best, v);
    }
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<Scalar> xs, ys;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) {
                xs.push_back(c.point(i));
                ys.push_back(flag[i].v2 / flag[i].v1);
            }
        bool realizable = true;
        if (xs.size() == n) {
            std::vector<Scalar> xh(xs.begin(), xs.end() - 1), yh(ys.begin(), ys.end() - 1);
            realizable = Poly::interpolate(xh, yh)(xs.back()) == ys.back();
        }
        if (!realizable) continue;
        Rational v = 1;
        for (std::size_t i = 0; i < n; ++i) v -= (mask & (1u << i)) ? w[i].a1 : w[i].a2;
        best = std::max(best, v);
    }
    return best;
}

Flag random_transverse_flag(Rng& rng, const ConeConfiguration& c) {
    Flag f;
    for (std::size_t i = 0; i < c.size(); ++i) f.push_back(FlagLine::through(i, rng.nonzero_gaussian(), rng.gaussian()));
    return f;
}

Automorphism random_automorphism(Rng& rng, int n) {
    std::vector<Scalar> coeffs;
    for (int k = 0; k <= n - 2; ++k) coeffs.push_back(rng.gaussian());
    return Automorphism(rng.nonzero_gaussian(), rng.nonzero_gaussian(), Poly(coeffs));
}

}  // namespace

TEST(Rational, ParsesFractionsAndDecimals) {
    EXPECT_EQ(parse_rational("3/4"), q(3, 4));
    EXPECT_EQ(parse_rational(" -6/8 "), q(-3, 4));
    EXPECT_EQ(parse_rational("0.125"), q(1, 8));
    EXPECT_EQ(parse_rational("-2.5e-1"), q(-1, 4));
    EXPECT_EQ(parse_rational("12"), q(12));
    EXPECT_THROW(parse_rational("1/0"), ParseError);
    EXPECT_THROW(parse_rational("abc"), ParseError);
    EXPECT_EQ(from_double(0.375), q(3, 8));
    EXPECT_EQ(from_double(-3.0), q(-3));
}

TEST(Polynomial, HomogeneousResultantDetectsRootsAtInfinity) {
    const Poly t = Poly::monomial(1);
    const Poly one = Poly::constant(1);
    EXPECT_TRUE(homogeneous_resultant(t, 1, t, 1).is_zero());
    EXPECT_FALSE(homogeneous_resultant(t, 1, one, 1).is_zero());
    // both forms vanish at infinity
    EXPECT_TRUE(homogeneous_resultant(one, 1, one, 2).is_zero());
    EXPECT_FALSE(homogeneous_resultant(one, 0, one, 2).is_zero());
    // t^2 - 1 against t + 1 share t = -1
    const Poly a(std::vector<Scalar>{-1, 0, 1});
    EXPECT_TRUE(homogeneous_resultant(a, 2, Poly::linear_root(Scalar(-1)), 1).is_zero());
    EXPECT_FALSE(homogeneous_resultant(a, 2, Poly::linear_root(Scalar(2)), 1).is_zero());
}

TEST(Polynomial, InterpolationHitsNodes) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Scalar> xs, ys;
        for (int k = 0; k < 5; ++k) {
            xs.push_back(Scalar(Rational(k), Rational(trial % 3)));
            ys.push_back(rng.gaussian());
        }
        const Poly p = Poly::interpolate(xs, ys);
        EXPECT_LE(p.degree(), 4);
        for (int k = 0; k < 5; ++k) EXPECT_EQ(p(xs[k]), ys[k]);
    }
    const auto [quo, rem] = (Poly(std::vector<Scalar>{-1, 0, 1})).divmod(Poly::linear_root(Scalar(1)));
    EXPECT_EQ(quo, Poly(std::vector<Scalar>{1, 1}));
    EXPECT_TRUE(rem.is_zero());
}

TEST(ConeConfiguration, RejectsInvalidInput) {
    EXPECT_THROW(ConeConfiguration({0, 1}, angles({{1, 2}, {1, 2}})), InvalidConfiguration);
    EXPECT_THROW(ConeConfiguration({0, 1, 1}, angles({{1, 2}, {1, 2}, {1, 2}})), InvalidConfiguration);
    EXPECT_THROW(ConeConfiguration({0, 1, 2}, angles({{1, 2}, {1, 1}, {1, 2}})), AngleOutOfRange);
    EXPECT_THROW(ConeConfiguration({0, 1, 2}, angles({{0, 1}, {1, 2}, {1, 2}})), AngleOutOfRange);
}

TEST(AngleConditions, GaussBonnet) {
    EXPECT_TRUE(check_gauss_bonnet(config(angles({{1, 2}, {1, 2}, {1, 2}}))));
    EXPECT_FALSE(check_gauss_bonnet(config(angles({{1, 4}, {1, 4}, {1, 4}}))));
    EXPECT_TRUE(check_gauss_bonnet(config(angles({{3, 4}, {3, 4}, {3, 4}, {3, 4}}))));
}

TEST(AngleConditions, Stability) {
    EXPECT_TRUE(check_angle_stability(config(angles({{1, 2}, {1, 2}, {1, 2}}))));
    const auto bad = config(angles({{1, 10}, {9, 10}, {9, 10}}));
    EXPECT_FALSE(check_angle_stability(bad));
    EXPECT_EQ(angle_stability_violation(bad), std::optional<std::size_t>(0));
    EXPECT_TRUE(check_angle_stability(config(angles({{3, 4}, {3, 4}, {3, 4}, {3, 4}}))));
}

TEST(Weights, FromAngles) {
    const auto w = weights_from_angles(angles({{1, 2}, {3, 4}}));
    EXPECT_EQ(w[0].a1, q(1, 4));
    EXPECT_EQ(w[0].a2, q(3, 4));
    EXPECT_EQ(w[1].a1, q(1, 8));
    EXPECT_EQ(w[1].a2, q(7, 8));
    EXPECT_EQ(w.alpha(1), q(3, 4));
    EXPECT_THROW(weights_from_angles(angles({{0, 1}})), AngleOutOfRange);
}

TEST(Weights, ParabolicDegreeTotalIsZero) {
    EXPECT_EQ(parabolic_degree_total(BundleModel(3), weights_from_angles(angles({{1, 2}, {1, 3}, {5, 7}}))), 0);
    EXPECT_EQ(parabolic_degree_total(BundleModel(5), weights_from_angles(angles({{1, 2}, {1, 3}, {5, 7}, {1, 9}, {8, 9}}))),
              0);
    // a1 + a2 = 1 + eps
    EXPECT_THROW(ParabolicWeights({{q(1, 4), q(3, 4) + q(1, 1000)}}), InvalidWeights);
    EXPECT_THROW(ParabolicWeights({{q(3, 4), q(1, 4)}}), InvalidWeights);
}

TEST(Flag, Canonical) {
    const auto f3 = canonical_flag(standard3());
    ASSERT_EQ(f3.size(), 3u);
    EXPECT_EQ(f3[0], FlagLine::through(0, 1, 0));
    EXPECT_EQ(f3[1], FlagLine::through(1, 1, 0));
    EXPECT_EQ(f3[2], FlagLine::through(2, 1, 1));
    for (const auto& line : f3) EXPECT_TRUE(line.transverse_to_second_summand());
    const auto f4 = canonical_flag(config(angles({{3, 4}, {3, 4}, {3, 4}, {3, 4}})));
    EXPECT_EQ(f4[2], FlagLine::through(2, 1, 0));
    EXPECT_EQ(f4[3], FlagLine::through(3, 1, 1));
}

TEST(Flag, NormalizeCanonicalIsIdentity) {
    const auto c = standard3();
    const auto phi = normalize_flag(canonical_flag(c), c);
    EXPECT_EQ(phi, Automorphism::identity());
}

TEST(Flag, NormalizeWorkedExample) {
    // P(0) = -1, P(1) = -2 by hand: P(t) = -1 - t; at x_3 = -1 the image of (1,1) is (1, 1 + 0) already on span(1,1).
    const auto c = standard3();
    const Flag f{FlagLine::through(0, 1, 1), FlagLine::through(1, 1, 2), FlagLine::through(2, 1, 1)};
    const auto phi = normalize_flag(f, c);
    EXPECT_EQ(phi.lambda1, Scalar(1));
    EXPECT_EQ(phi.lambda2, Scalar(1));
    EXPECT_EQ(phi.P, Poly(std::vector<Scalar>{-1, -1}));
    const auto canon = canonical_flag(c);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(transform(phi, f[i], c), canon[i]);
}

TEST(Flag, NormalizeErrors) {
    const auto c = standard3();
    const Flag degenerate{FlagLine::through(0, 0, 1), FlagLine::through(1, 1, 0), FlagLine::through(2, 1, 1)};
    try {
        normalize_flag(degenerate, c);
        FAIL() << "expected FlagDegenerate";
    } catch (const FlagDegenerate& e) {
        EXPECT_EQ(e.index, 0u);
    }
    // All three lines on O(1): property (ii) fails.
    const Flag in_line{FlagLine::through(0, 1, 0), FlagLine::through(1, 1, 0), FlagLine::through(2, 1, 0)};
    EXPECT_THROW(normalize_flag(in_line, c), FlagContainedInLine);
}

TEST(Flag, RoundTripAndUniqueness) {
    Rng rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 3 + trial % 4;
        const auto c = random_config(rng, n);
        const auto canon = canonical_flag(c);
        const auto g = random_automorphism(rng, static_cast<int>(n));
        // F' = g^{-1}(canonical) satisfies (i) and (ii)
        Flag f;
        for (const auto& line : canon) f.push_back(transform(g.inverse(), line, c));
        const auto phi = normalize_flag(f, c);
        for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(transform(phi, f[i], c), canon[i]);
        EXPECT_TRUE(phi.compose(g.inverse()).is_scalar());
    }
}

TEST(Subbundle, Classification) {
    const BundleModel m(3);
    const auto second = classify_line_subbundle(LineSubbundle::second_summand(m), m);
    EXPECT_EQ(second.kind, SubbundleClass::Kind::IsSecondSummand);

    const Poly P(std::vector<Scalar>{2, Scalar(Rational(0), Rational(1))});
    const auto one = classify_line_subbundle(LineSubbundle::degree_one(P), m);
    ASSERT_EQ(one.kind, SubbundleClass::Kind::ImageOfO1);
    EXPECT_EQ(one.phi->P, P);

    const Poly t = Poly::monomial(1);
    EXPECT_THROW(classify_line_subbundle(LineSubbundle{0, t, t}, m), InvalidSubbundle);
    EXPECT_THROW(classify_line_subbundle(LineSubbundle{2, Poly::constant(1), Poly::constant(1)}, m), InconsistentDegree);

    const auto low = classify_line_subbundle(LineSubbundle{0, t, Poly::constant(1)}, m);
    EXPECT_EQ(low.kind, SubbundleClass::Kind::LowDegree);
}

TEST(Subbundle, ClassifyRecoversImageOfFirstSummand) {
    Rng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + trial % 5;
        const auto g = random_automorphism(rng, n);
        // Phi(O(1)) = {(lambda1 s, P s)}
        const LineSubbundle L{1, Poly::constant(g.lambda1), g.P};
        const auto cls = classify_line_subbundle(L, BundleModel(n));
        ASSERT_EQ(cls.kind, SubbundleClass::Kind::ImageOfO1);
        EXPECT_EQ(cls.phi->P * g.lambda1, g.P);
    }
}

TEST(ParabolicDegree, Examples) {
    const auto c = standard3();
    const auto w = weights_from_angles(c);
    const auto flag = canonical_flag(c);
    EXPECT_EQ(line_parabolic_degree(LineSubbundle::second_summand(BundleModel(c)), flag, w, c), q(-1, 4));
    // O(1) contains F_1, F_2 only: 1 - 1/4 - 1/4 - 3/4
    EXPECT_EQ(line_parabolic_degree(LineSubbundle::first_summand(), flag, w, c), q(-1, 4));
    EXPECT_EQ(contained_flag_lines(LineSubbundle::first_summand(), flag, c), (std::vector<std::size_t>{0, 1}));
    // degree 0 subbundle (t + 5, 1) through no flag line
    const LineSubbundle low{0, Poly::linear_root(Scalar(-5)), Poly::constant(1)};
    EXPECT_TRUE(contained_flag_lines(low, flag, c).empty());
    EXPECT_EQ(line_parabolic_degree(low, flag, w, c), q(-9, 4));
}

TEST(ParabolicDegree, AddingAContainedLineAddsAlpha) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + trial % 4;
        const auto c = random_config(rng, n);
        const auto w = weights_from_angles(c);
        std::vector<Scalar> coeffs;
        for (std::size_t k = 0; k + 2 <= n; ++k) coeffs.push_back(rng.gaussian());
        const auto L = LineSubbundle::degree_one(Poly(coeffs));
        const std::size_t i = static_cast<std::size_t>(rng.uniform(0, static_cast<long>(n) - 1));
        Flag f = random_transverse_flag(rng, c);
        auto [a, b] = L.fiber_direction(c.point(i));
        f[i] = FlagLine::through(i, a, b);
        const Rational with = line_parabolic_degree(L, f, w, c);
        f[i] = FlagLine::through(i, a, b + 1);
        const Rational without = line_parabolic_degree(L, f, w, c);
        EXPECT_EQ(with - without, c.angle(i));
    }
}

TEST(Stability, MaxDestabilizingExamples) {
    const auto c = standard3();
    const auto r = max_destabilizing_degree(canonical_flag(c), weights_from_angles(c), c);
    EXPECT_EQ(r.value, q(-1, 4));
    EXPECT_TRUE(is_parabolically_stable(canonical_flag(c), weights_from_angles(c), c));

    const auto bad = ConeConfiguration({0, 1, -1}, angles({{1, 10}, {9, 10}, {9, 10}}));
    const auto rb = max_destabilizing_degree(canonical_flag(bad), weights_from_angles(bad), bad);
    EXPECT_GE(rb.value, 0);
    EXPECT_EQ(rb.witness.kind, DestabilizingWitness::Kind::DegreeOne);
    EXPECT_FALSE(is_parabolically_stable(canonical_flag(bad), weights_from_angles(bad), bad));

    const auto flat = ConeConfiguration({0, 1, -1}, angles({{1, 4}, {1, 4}, {1, 4}}));
    const auto rf = max_destabilizing_degree(canonical_flag(flat), weights_from_angles(flat), flat);
    EXPECT_EQ(rf.witness.kind, DestabilizingWitness::Kind::SecondSummand);
    EXPECT_EQ(rf.value, q(1, 8));
}

TEST(Stability, FullSetNotRealizableForCanonicalFlag) {
    const auto c = standard3();
    const auto flag = canonical_flag(c);
    std::vector<Scalar> xs{c.point(0), c.point(1)}, ys{0, 0};
    EXPECT_NE(Poly::interpolate(xs, ys)(c.point(2)), flag[2].v2 / flag[2].v1);
}

TEST(Stability, MatchesBruteForceOnRandomFlags) {
    Rng rng(17);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t n = 3 + trial % 4;
        const auto c = random_config(rng, n);
        const auto w = weights_from_angles(c);
        Flag f = random_transverse_flag(rng, c);
        if (trial % 5 == 0) {
            // force the full set onto one degree-1 subbundle
            std::vector<Scalar> coeffs;
            for (std::size_t k = 0; k + 2 <= n; ++k) coeffs.push_back(rng.gaussian());
            const Poly P(coeffs);
            for (std::size_t i = 0; i < n; ++i) f[i] = FlagLine::through(i, 1, P(c.point(i)));
        }
        const auto r = max_destabilizing_degree(f, w, c);
        EXPECT_EQ(r.value, brute_force_supremum(f, w, c));
        if (r.witness.subbundle) {
            EXPECT_EQ(line_parabolic_degree(*r.witness.subbundle, f, w, c), r.value);
        }
    }
}

TEST(Stability, RandomDegreeOneSubbundlesNeverExceedMaximum) {
    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 3 + trial % 3;
        const auto c = random_config(rng, n);
        const auto w = weights_from_angles(c);
        const auto f = random_transverse_flag(rng, c);
        const Rational top = max_destabilizing_degree(f, w, c).value;
        for (int k = 0; k < 20; ++k) {
            // random interpolant through a random subset of the flag
            std::vector<Scalar> xs, ys;
            for (std::size_t i = 0; i < n && xs.size() + 2 < n; ++i)
                if (rng.uniform(0, 1)) {
                    xs.push_back(c.point(i));
                    ys.push_back(f[i].v2 / f[i].v1);
                }
            xs.push_back(rng.gaussian() + Scalar(100));
            ys.push_back(rng.gaussian());
            EXPECT_LE(line_parabolic_degree(LineSubbundle::degree_one(Poly::interpolate(xs, ys)), f, w, c), top);
        }
    }
}

TEST(Stability, CanonicalFlagAgreesWithAngleInequalities) {
    Rng rng(29);
    int stable = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto c = random_config(rng, 3 + static_cast<std::size_t>(trial % 5));
        const bool expected = check_gauss_bonnet(c) && check_angle_stability(c);
        EXPECT_EQ(is_parabolically_stable(canonical_flag(c), weights_from_angles(c), c), expected);
        stable += expected;
    }
    EXPECT_GT(stable, 20);
    EXPECT_LT(stable, 280);
}

TEST(Stability, DegenerateFlagRejected) {
    const auto c = standard3();
    Flag f = canonical_flag(c);
    f[1] = FlagLine::through(1, 0, 1);
    EXPECT_THROW(max_destabilizing_degree(f, weights_from_angles(c), c), FlagDegenerate);
}

TEST(Intersection, TangencyCount) {
    for (long n = 3; n <= 50; ++n) EXPECT_EQ(tangency_count(-(n - 2), 1, n), 0);
    EXPECT_EQ(tangency_count(4, 1, 6), 8);
    EXPECT_EQ(tangency_count(0, 0, 7), 0);
}

TEST(Intersection, SplittingType) {
    EXPECT_EQ(splitting_type_from_invariants(4, -2), std::make_pair(1, 3));
    EXPECT_EQ(splitting_type_from_invariants(0, 0), std::make_pair(0, 0));
    EXPECT_THROW(splitting_type_from_invariants(3, -2), ParityMismatch);
    for (int n = 3; n <= 50; ++n) EXPECT_EQ(splitting_type_from_invariants(n, -(n - 2)), std::make_pair(1, n - 1));
}
