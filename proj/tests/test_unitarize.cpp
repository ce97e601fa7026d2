#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "conemetric/unitarize.hpp"

using namespace conemetric;

namespace {

Mat2 random_su2(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    double q[4];
    double n = 0.0;
    for (double& v : q) {
        v = g(rng);
        n += v * v;
    }
    n = std::sqrt(n);
    const cplx a(q[0] / n, q[1] / n), b(q[2] / n, q[3] / n);
    return {a, b, -std::conj(b), std::conj(a)};
}

Mat2 random_sl2c(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mat2 S{cplx(1.0 + u(rng), u(rng)), cplx(u(rng), u(rng)), cplx(u(rng), u(rng)), cplx(1.0 + u(rng), u(rng))};
    return (1.0 / std::sqrt(S.det())) * S;
}

// Series exp for comparison.
Mat2 exp_series(const Mat2& X) {
    Mat2 term = Mat2::identity(), sum = Mat2::identity();
    for (int k = 1; k < 40; ++k) {
        term = (1.0 / k) * (term * X);
        sum += term;
    }
    return sum;
}

std::vector<Mat2> hyperbolic_pair() {
    const Mat2 A{2.0, 0.0, 0.0, 0.5};
    const double t = 0.7;
    const Mat2 R{std::cos(t), -std::sin(t), std::sin(t), std::cos(t)};
    return {A, R * A * R.inverse()};
}

}  // namespace

TEST(Hermitian, ExpAndSqrt) {
    for (auto [a, b, c] : {std::array<double, 3>{0.3, -0.2, 0.5}, {0.0, 0.0, 0.0}, {1e-9, 2e-9, 0.0}, {2.0, 1.0, -1.5}}) {
        const Mat2 X = traceless_hermitian(a, b, c);
        const Mat2 E = exp_traceless_hermitian(X);
        EXPECT_LT(distance(E, exp_series(X)), 1e-12 * (1.0 + E.frobenius()));
        EXPECT_NEAR(std::abs(E.det() - 1.0), 0.0, 1e-12);
        const Mat2 G = sqrt_unimodular_positive(E);
        EXPECT_LT(distance(G * G, E), 1e-12 * E.frobenius());
        EXPECT_LT(distance(G, G.adjoint()), 1e-14 * G.frobenius());
    }
}

TEST(Hermitian, FormNormalization) {
    const auto h = HermitianForm::from_matrix({4.0, cplx(1.0, 1.0), cplx(1.0, -1.0), 2.0});
    EXPECT_NEAR(h.matrix().det().real(), 1.0, 1e-14);
    EXPECT_NEAR(HermitianForm{}.max_eigenvalue(), 1.0, 1e-15);
    EXPECT_THROW(HermitianForm::from_matrix({1.0, 2.0, 2.0, 1.0}), Error);
    EXPECT_THROW(HermitianForm::from_matrix({-1.0, 0.0, 0.0, -1.0}), Error);
}

TEST(Defect, UnitaryRepresentationHasZeroDefectAtIdentity) {
    std::mt19937_64 rng(1);
    std::vector<Mat2> gens{random_su2(rng), random_su2(rng), random_su2(rng)};
    EXPECT_LT(defect_at(HermitianForm{}, gens), 1e-28);
}

TEST(Unitarize, ConjugatedSU2RecoversForm) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        const Mat2 S = random_sl2c(rng);
        std::vector<Mat2> gens;
        for (int k = 0; k < 3; ++k) gens.push_back(S * random_su2(rng) * S.inverse());
        const auto Si = S.inverse();
        const auto expect = HermitianForm::from_matrix(Si.adjoint() * Si);
        const auto m = minimize_over_h(gens);
        EXPECT_LT(m.defect, 1e-16);
        EXPECT_LT(distance(m.form.matrix(), expect.matrix()), 1e-7 * expect.matrix().frobenius());
        const auto cert = certify(gens, m.form);
        EXPECT_LT(cert.max_unitary_error, 1e-8);
        EXPECT_GE(cert.unitarity_constant, 1.0);
    }
}

TEST(Unitarize, HyperbolicPairStaysAway) {
    const auto gens = hyperbolic_pair();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int restart = 0; restart < 10; ++restart) {
        const auto start = HermitianForm::exp_of(u(rng), u(rng), u(rng));
        const auto m = minimize_defect(gens, start);
        EXPECT_TRUE(m.converged);
        EXPECT_GE(m.defect, 1e-3);
    }
}

TEST(Unitarize, IterationCap) {
    std::mt19937_64 rng(8);
    const Mat2 S = random_sl2c(rng);
    std::vector<Mat2> gens{S * random_su2(rng) * S.inverse(), S * random_su2(rng) * S.inverse()};
    EXPECT_THROW(minimize_over_h(gens, {}, {.max_iterations = 1}), NoConvergence);
}

TEST(Unitarize, GaugeGivesUnitaryMatrices) {
    std::mt19937_64 rng(9);
    const Mat2 S = random_sl2c(rng);
    std::vector<Mat2> gens{S * random_su2(rng) * S.inverse(), S * random_su2(rng) * S.inverse()};
    const auto m = minimize_over_h(gens);
    for (const auto& U : gauge_to_unitary(gens, m.form)) {
        EXPECT_LT(distance(U.adjoint() * U, Mat2::identity()), 1e-8);
    }
}

TEST(NelderMead, Rosenbrock) {
    auto f = [](const std::vector<double>& x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    const auto r = nelder_mead(f, {-1.2, 1.0}, {.initial_step = 0.5, .x_tolerance = 1e-12, .f_tolerance = 1e-30,
                                                 .max_evaluations = 10000});
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
    EXPECT_NEAR(r.x[1], 1.0, 1e-6);
}

TEST(Solve, ThreePoints) {
    using exact::Rational;
    using exact::Scalar;
    const exact::ConeConfiguration c({Scalar(0), Scalar(1), Scalar(-1)}, {Rational(1, 2), Rational(1, 2), Rational(1, 2)});
    const auto sol = solve_unitarizing_parameters(c);
    EXPECT_LT(sol.certificate.defect, 1e-8);
    EXPECT_EQ(sol.seeds.size(), 1u);
    EXPECT_EQ(sol.agreeing_seeds, 1);
    EXPECT_LT(sol.certificate.max_unitary_error, 1e-6);
    EXPECT_GT(sol.certificate.commutator_norm, 1e-3);
}

TEST(Solve, RefusesInadmissibleAngles) {
    using exact::Rational;
    using exact::Scalar;
    const exact::ConeConfiguration gb({Scalar(0), Scalar(1), Scalar(-1)},
                                      {Rational(1, 4), Rational(1, 4), Rational(1, 4)});
    EXPECT_THROW(solve_unitarizing_parameters(gb), NotUnitarizable);
    const exact::ConeConfiguration unstable({Scalar(0), Scalar(1), Scalar(-1)},
                                            {Rational(1, 10), Rational(9, 10), Rational(9, 10)});
    EXPECT_THROW(solve_unitarizing_parameters(unstable), NotUnitarizable);
}

TEST(Solve, SymmetricFourPointObjective) {
    // rotation invariance z -> iz forces beta_k = -(7/32)/x_k, so beta_4 = -(7/32) i at x_4 = -i
    const std::vector<cplx> poles{1.0, cplx(0, 1), -1.0, cplx(0, -1)};
    const std::vector<double> angles(4, 0.75);
    UnitarizeOptions opt;
    const double at = accessory_objective(poles, angles, {cplx(0.0, -7.0 / 32)}, opt);
    const double off = accessory_objective(poles, angles, {cplx(0.01, -7.0 / 32)}, opt);
    EXPECT_LT(at, 1e-16);
    EXPECT_GT(off, 1e3 * at);
    const auto d = solve_accessory_constraints(poles, angles, {cplx(0.0, -7.0 / 32)});
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(d.accessory()[k] + (7.0 / 32) / poles[k]), 0.0, 1e-14);
}
