#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "conemetric/error.hpp"
#include "conemetric/exact_core.hpp"
#include "conemetric/fuchsian.hpp"
#include "conemetric/mat2.hpp"

namespace conemetric {

class NoConvergence : public Error {
public:
    explicit NoConvergence(const std::string& what) : Error("no convergence: " + what) {}
};

class NotUnitarizable : public Error {
public:
    NotUnitarizable(const std::string& what, double best_defect)
        : Error("not unitarizable: " + what), best_defect(best_defect) {}
    double best_defect;
};

/// Traceless Hermitian [[a, b + ic], [b - ic, -a]].
inline Mat2 traceless_hermitian(double a, double b, double c) { return {a, cplx(b, c), cplx(b, -c), -a}; }

/// exp of a traceless Hermitian matrix: cosh(r) I + sinh(r)/r X with r^2 = -det X.
inline Mat2 exp_traceless_hermitian(const Mat2& X) {
    const double r = std::sqrt(std::max(0.0, -X.det().real()));
    const double sh = r < 1e-8 ? 1.0 + r * r / 6.0 : std::sinh(r) / r;
    Mat2 out = sh * X;
    out.a += std::cosh(r);
    out.d += std::cosh(r);
    return out;
}

/// Square root of a positive definite Hermitian matrix with determinant 1.
inline Mat2 sqrt_unimodular_positive(const Mat2& H) {
    const double s = std::sqrt(H.trace().real() + 2.0);
    Mat2 G = H;
    G.a += 1.0;
    G.d += 1.0;
    return (1.0 / s) * G;
}

/// Positive definite Hermitian form normalized to det = 1.
class HermitianForm {
public:
    HermitianForm() = default;

    /// Symmetrizes and rescales; throws if not positive definite.
    static HermitianForm from_matrix(const Mat2& m) {
        const double a = m.a.real(), d = m.d.real();
        const cplx b = 0.5 * (m.b + std::conj(m.c));
        const double det = a * d - std::norm(b);
        if (!(a > 0.0 && det > 0.0)) throw Error("Hermitian form is not positive definite");
        const double k = 1.0 / std::sqrt(det);
        HermitianForm h;
        h.m_ = {a * k, b * k, std::conj(b) * k, d * k};
        return h;
    }
    static HermitianForm exp_of(double a, double b, double c) {
        HermitianForm h;
        h.m_ = exp_traceless_hermitian(traceless_hermitian(a, b, c));
        return h;
    }

    [[nodiscard]] const Mat2& matrix() const { return m_; }
    [[nodiscard]] Mat2 sqrt() const { return sqrt_unimodular_positive(m_); }
    /// Largest eigenvalue; equals 1 exactly when the form is the identity.
    [[nodiscard]] double max_eigenvalue() const {
        const double half_tr = 0.5 * m_.trace().real();
        return half_tr + std::sqrt(std::max(0.0, half_tr * half_tr - 1.0));
    }
    [[nodiscard]] double condition_number() const {
        const double l = max_eigenvalue();
        return l * l;
    }

private:
    Mat2 m_ = Mat2::identity();
};

inline double defect_at(const HermitianForm& h, const std::vector<Mat2>& gens) {
    double s = 0.0;
    for (const auto& M : gens) s += (M.adjoint() * h.matrix() * M - h.matrix()).frobenius_sq();
    return s;
}

struct HMinimum {
    HermitianForm form;
    double defect = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct LMOptions {
    double gradient_tolerance = 1e-12;
    double defect_floor = 1e-32;
    int max_iterations = 10000;
};

namespace detail {

inline std::array<double, 4> hermitian_components(const Mat2& R) {
    constexpr double r2 = 1.4142135623730951;
    return {R.a.real(), R.d.real(), r2 * R.b.real(), r2 * R.b.imag()};
}

inline bool solve3(std::array<std::array<double, 3>, 3> A, std::array<double, 3>& x) {
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        if (A[piv][col] == 0.0) return false;
        std::swap(A[piv], A[col]);
        std::swap(x[piv], x[col]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = A[r][col] / A[col][col];
            for (int k = col; k < 3; ++k) A[r][k] -= f * A[col][k];
            x[r] -= f * x[col];
        }
    }
    for (int r = 2; r >= 0; --r) {
        for (int k = r + 1; k < 3; ++k) x[r] -= A[r][k] * x[k];
        x[r] /= A[r][r];
    }
    return true;
}

}  // namespace detail

/// Levenberg-Marquardt on det H = 1 in the chart H(x) = G exp(X(x)) G about the current iterate
/// H = G^2, where the residual is linear to first order with an exact Jacobian at x = 0.
inline HMinimum minimize_defect(const std::vector<Mat2>& gens, const HermitianForm& start = {},
                                const LMOptions& opt = {}) {
    HMinimum res;
    res.form = start;
    res.defect = defect_at(start, gens);
    double mu = 1e-3;
    const std::array<Mat2, 3> basis{traceless_hermitian(1, 0, 0), traceless_hermitian(0, 1, 0),
                                    traceless_hermitian(0, 0, 1)};
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        if (res.defect <= opt.defect_floor) {
            res.converged = true;
            return res;
        }
        const Mat2 H = res.form.matrix();
        const Mat2 G = res.form.sqrt();
        std::array<std::array<double, 3>, 3> JtJ{};
        std::array<double, 3> Jtr{};
        for (const auto& M : gens) {
            const Mat2 Md = M.adjoint();
            const auto r = detail::hermitian_components(Md * H * M - H);
            std::array<std::array<double, 4>, 3> cols{};
            for (int k = 0; k < 3; ++k) {
                const Mat2 dH = G * basis[k] * G;
                cols[k] = detail::hermitian_components(Md * dH * M - dH);
            }
            for (int k = 0; k < 3; ++k) {
                for (int j = 0; j < 3; ++j)
                    for (int e = 0; e < 4; ++e) JtJ[k][j] += cols[k][e] * cols[j][e];
                for (int e = 0; e < 4; ++e) Jtr[k] += cols[k][e] * r[e];
            }
        }
        res.gradient_norm = 2.0 * std::sqrt(Jtr[0] * Jtr[0] + Jtr[1] * Jtr[1] + Jtr[2] * Jtr[2]);
        if (res.gradient_norm <= opt.gradient_tolerance) {
            res.converged = true;
            return res;
        }
        bool improved = false;
        while (mu < 1e20) {
            auto A = JtJ;
            for (int k = 0; k < 3; ++k) A[k][k] += mu * (1.0 + JtJ[k][k]);
            std::array<double, 3> dx{-Jtr[0], -Jtr[1], -Jtr[2]};
            if (!detail::solve3(A, dx)) {
                mu *= 4.0;
                continue;
            }
            HermitianForm trial;
            try {
                trial = HermitianForm::from_matrix(G * exp_traceless_hermitian(traceless_hermitian(dx[0], dx[1], dx[2])) * G);
            } catch (const Error&) {
                mu *= 4.0;
                continue;
            }
            const double dt = defect_at(trial, gens);
            if (dt < res.defect) {
                res.form = trial;
                res.defect = dt;
                mu = std::max(mu / 3.0, 1e-15);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if (!improved) {
            // no descent direction left at working precision
            res.converged = true;
            return res;
        }
    }
    return res;
}

/// Like minimize_defect, but throws NoConvergence when the iteration cap is reached.
inline HMinimum minimize_over_h(const std::vector<Mat2>& gens, const HermitianForm& start = {},
                                const LMOptions& opt = {}) {
    auto r = minimize_defect(gens, start, opt);
    if (!r.converged)
        throw NoConvergence("defect minimization stopped after " + std::to_string(r.iterations) + " iterations");
    return r;
}

/// Conjugate into U(2): U_i = G M_i G^{-1} with G = H^{1/2}.
inline std::vector<Mat2> gauge_to_unitary(const std::vector<Mat2>& gens, const HermitianForm& h) {
    const Mat2 G = h.sqrt();
    const Mat2 Gi = G.inverse();
    std::vector<Mat2> out;
    out.reserve(gens.size());
    for (const auto& M : gens) out.push_back(G * M * Gi);
    return out;
}

struct UnitarityCertificate {
    HermitianForm form;
    double defect = 0.0;
    /// Largest eigenvalue of H (det H = 1), bounding the distortion of the unitarizing gauge.
    double unitarity_constant = 1.0;
    std::vector<Mat2> unitary_generators;
    double max_unitary_error = 0.0;
    /// ||M_1 M_2 - M_2 M_1||_F; small values suggest a reducible representation.
    double commutator_norm = 0.0;
};

inline UnitarityCertificate certify(const std::vector<Mat2>& gens, const HermitianForm& h) {
    UnitarityCertificate c;
    c.form = h;
    c.defect = defect_at(h, gens);
    c.unitarity_constant = h.max_eigenvalue();
    c.unitary_generators = gauge_to_unitary(gens, h);
    for (const auto& U : c.unitary_generators)
        c.max_unitary_error = std::max(c.max_unitary_error, distance(U.adjoint() * U, Mat2::identity()));
    if (gens.size() >= 2) c.commutator_norm = (gens[0] * gens[1] - gens[1] * gens[0]).frobenius();
    return c;
}

/// Minimized defect for a representation, starting at the identity form.
inline UnitarityCertificate unitarity_defect(const std::vector<Mat2>& gens, const LMOptions& opt = {}) {
    return certify(gens, minimize_over_h(gens, {}, opt).form);
}

// ---------------------------------------------------------------------------------------------
// Outer search over accessory parameters

struct NelderMeadOptions {
    double initial_step = 0.25;
    double x_tolerance = 1e-11;
    double f_tolerance = 1e-26;
    int max_evaluations = 4000;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int evaluations = 0;
};

template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, const NelderMeadOptions& opt = {}) {
    const std::size_t dim = x0.size();
    NelderMeadResult out;
    if (dim == 0) {
        out.x = x0;
        out.f = f(x0);
        out.evaluations = 1;
        return out;
    }
    std::vector<std::vector<double>> pts(dim + 1, x0);
    std::vector<double> vals(dim + 1);
    for (std::size_t k = 0; k < dim; ++k) pts[k + 1][k] += opt.initial_step;
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(x);
    };
    for (std::size_t k = 0; k <= dim; ++k) vals[k] = eval(pts[k]);

    std::vector<std::size_t> idx(dim + 1);
    while (evals < opt.max_evaluations) {
        for (std::size_t k = 0; k <= dim; ++k) idx[k] = k;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = idx[0], worst = idx[dim], second = idx[dim - 1];
        double size = 0.0;
        for (std::size_t k = 0; k <= dim; ++k)
            for (std::size_t j = 0; j < dim; ++j) size = std::max(size, std::abs(pts[k][j] - pts[best][j]));
        if (vals[best] <= opt.f_tolerance || size <= opt.x_tolerance) break;

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t k = 0; k <= dim; ++k)
            if (k != worst)
                for (std::size_t j = 0; j < dim; ++j) centroid[j] += pts[k][j] / static_cast<double>(dim);
        auto along = [&](double t) {
            std::vector<double> x(dim);
            for (std::size_t j = 0; j < dim; ++j) x[j] = centroid[j] + t * (pts[worst][j] - centroid[j]);
            return x;
        };
        const auto xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < vals[best]) {
            const auto xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const auto xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t k = 0; k <= dim; ++k) {
            if (k == best) continue;
            for (std::size_t j = 0; j < dim; ++j) pts[k][j] = pts[best][j] + 0.5 * (pts[k][j] - pts[best][j]);
            vals[k] = eval(pts[k]);
        }
    }
    const auto it = std::min_element(vals.begin(), vals.end());
    out.x = pts[static_cast<std::size_t>(it - vals.begin())];
    out.f = *it;
    out.evaluations = evals;
    return out;
}

struct UnitarizeOptions {
    std::uint64_t seed = 0;
    int random_seeds = 4;
    int grid_points_per_axis = 3;
    int max_grid_seeds = 8;
    double seed_box = 1.0;
    double defect_target = 1e-6;
    double agreement_tolerance = 1e-5;
    NelderMeadOptions nelder_mead;
    LMOptions inner;
    MonodromyOptions monodromy;
};

struct SeedRun {
    std::vector<cplx> start;
    std::vector<cplx> result;
    double defect = 0.0;
    int evaluations = 0;
};

struct UnitarizingSolution {
    SchwarzianData data;
    MonodromyRep monodromy;
    UnitarityCertificate certificate;
    std::vector<SeedRun> seeds;
    /// Seeds that reached the defect target and agree with the selected parameters.
    int agreeing_seeds = 0;
};

namespace detail {

inline std::vector<cplx> to_complex_params(const std::vector<double>& x) {
    std::vector<cplx> out(x.size() / 2);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = {x[2 * k], x[2 * k + 1]};
    return out;
}

inline std::vector<double> to_real_params(const std::vector<cplx>& p) {
    std::vector<double> out;
    for (const auto& z : p) {
        out.push_back(z.real());
        out.push_back(z.imag());
    }
    return out;
}

inline double param_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

}  // namespace detail

/// Exact admissibility gate: Gauss-Bonnet and angle stability on exactly represented angles.
inline void require_admissible(const exact::ConeConfiguration& cfg) {
    if (!exact::check_gauss_bonnet(cfg)) throw NotUnitarizable("Gauss-Bonnet inequality fails", 0.0);
    if (!exact::check_angle_stability(cfg)) throw NotUnitarizable("angle stability fails", 0.0);
}

/// Minimized defect of the monodromy for given free accessory parameters; infinite when the
/// transport or the inner minimization breaks down.
inline double accessory_objective(const std::vector<cplx>& poles, const std::vector<double>& angles,
                                  const std::vector<cplx>& free, const UnitarizeOptions& opt) {
    try {
        const auto d = solve_accessory_constraints(poles, angles, free);
        const auto rep = monodromy_generators(d, opt.monodromy);
        return minimize_defect(rep.generators, {}, opt.inner).defect;
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

inline UnitarizingSolution solve_unitarizing_parameters(const exact::ConeConfiguration& cfg,
                                                        const UnitarizeOptions& opt = {}) {
    require_admissible(cfg);
    std::vector<cplx> poles;
    std::vector<double> angles;
    for (std::size_t i = 0; i < cfg.size(); ++i) {
        poles.push_back(cfg.point(i).to_complex());
        angles.push_back(exact::to_double(cfg.angles()[i]));
    }
    const std::size_t dim = 2 * (poles.size() - 3);

    std::vector<std::vector<double>> starts{std::vector<double>(dim, 0.0)};
    if (dim > 0) {
        const int g = std::max(2, opt.grid_points_per_axis);
        std::size_t total = 1;
        for (std::size_t k = 0; k < dim && total <= static_cast<std::size_t>(opt.max_grid_seeds) + 1; ++k)
            total *= static_cast<std::size_t>(g);
        int added = 0;
        for (std::size_t code = 0; code < total && added < opt.max_grid_seeds; ++code) {
            std::vector<double> x(dim, 0.0);
            std::size_t c = code;
            bool zero = true;
            for (std::size_t k = 0; k < dim; ++k) {
                const auto digit = static_cast<double>(c % static_cast<std::size_t>(g));
                c /= static_cast<std::size_t>(g);
                x[k] = opt.seed_box * (2.0 * digit / (g - 1) - 1.0);
                zero = zero && x[k] == 0.0;
            }
            if (zero) continue;
            starts.push_back(std::move(x));
            ++added;
        }
        std::mt19937_64 rng(opt.seed);
        std::uniform_real_distribution<double> u(-opt.seed_box, opt.seed_box);
        for (int r = 0; r < opt.random_seeds; ++r) {
            std::vector<double> x(dim);
            for (auto& v : x) v = u(rng);
            starts.push_back(std::move(x));
        }
    }

    std::vector<SeedRun> runs;
    for (const auto& x0 : starts) {
        auto nm = nelder_mead(
            [&](const std::vector<double>& x) {
                return accessory_objective(poles, angles, detail::to_complex_params(x), opt);
            },
            x0, opt.nelder_mead);
        runs.push_back({detail::to_complex_params(x0), detail::to_complex_params(nm.x), nm.f, nm.evaluations});
    }
    const auto best = std::min_element(runs.begin(), runs.end(),
                                       [](const SeedRun& a, const SeedRun& b) { return a.defect < b.defect; });
    if (!(best->defect < opt.defect_target))
        throw NotUnitarizable("best defect " + std::to_string(best->defect) + " above target", best->defect);

    auto data = solve_accessory_constraints(poles, angles, best->result);
    auto rep = monodromy_generators(data, opt.monodromy);
    auto hmin = minimize_over_h(rep.generators, {}, opt.inner);
    UnitarizingSolution sol{data, rep, certify(rep.generators, hmin.form), runs, 0};
    for (const auto& r : runs)
        if (r.defect < opt.defect_target &&
            detail::param_distance(r.result, best->result) <= opt.agreement_tolerance)
            ++sol.agreeing_seeds;
    return sol;
}

}  // namespace conemetric
