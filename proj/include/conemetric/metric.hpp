#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "conemetric/error.hpp"
#include "conemetric/fuchsian.hpp"
#include "conemetric/mat2.hpp"
#include "conemetric/unitarize.hpp"

namespace conemetric {

class StencilTooCloseToPole : public Error {
public:
    StencilTooCloseToPole(cplx z, double clearance)
        : Error("curvature stencil at (" + std::to_string(z.real()) + ", " + std::to_string(z.imag()) +
                ") has pole clearance " + std::to_string(clearance)) {}
};

class ConeRadiusTooLarge : public Error {
public:
    explicit ConeRadiusTooLarge(double r) : Error("cone-angle radius " + std::to_string(r) + " too large") {}
};

class QuadratureNotConverged : public Error {
public:
    QuadratureNotConverged(double fine, double coarse)
        : Error("area quadrature not converged: " + std::to_string(fine) + " vs " + std::to_string(coarse)) {}
};

enum class Chart { F, InvF };

inline const char* chart_name(Chart c) { return c == Chart::F ? "f" : "1/f"; }

/// Spherical conformal factor 2|f'| / (1 + |f|^2).
inline double conformal_factor(cplx f, cplx fprime) { return 2.0 * std::abs(fprime) / (1.0 + std::norm(f)); }

/// Solution pair and derivatives at an endpoint, in the unitary gauge, with W = y1' y2 - y1 y2'.
struct DevelopedFrame {
    cplx z;
    cplx y1, y2, dy1, dy2;
    Chart chart = Chart::F;
    cplx value;       // f = y1/y2 or 1/f = y2/y1
    cplx derivative;  // W/y2^2 or -W/y1^2
    cplx wronskian;
    std::string path_id;

    [[nodiscard]] cplx f() const { return chart == Chart::F ? value : 1.0 / value; }
};

/// Frame from a solution row (y1, y2) and its derivative row, choosing the chart with |value| <= 1.
inline DevelopedFrame make_frame(cplx z, cplx y1, cplx y2, cplx dy1, cplx dy2, std::string path_id = {}) {
    DevelopedFrame fr{z, y1, y2, dy1, dy2, Chart::F, 0.0, 0.0, dy1 * y2 - y1 * dy2, std::move(path_id)};
    if (std::abs(y1) <= std::abs(y2)) {
        fr.value = y1 / y2;
        fr.derivative = fr.wronskian / (y2 * y2);
    } else {
        fr.chart = Chart::InvF;
        fr.value = y2 / y1;
        fr.derivative = -fr.wronskian / (y1 * y1);
    }
    return fr;
}

inline double conformal_factor(const DevelopedFrame& fr) { return conformal_factor(fr.value, fr.derivative); }

struct MetricSample {
    cplx z;
    double lambda;
    std::string path_id;
    Chart chart;
};

/// Everything needed to develop: Schwarzian data, basepoint, and the unitarizing gauge G = H^{1/2}.
class MetricContext {
public:
    MetricContext(SchwarzianData data, cplx basepoint, const HermitianForm& form, TransportOptions transport = {})
        : data_(std::move(data)), basepoint_(basepoint), transport_(transport) {
        const Mat2 P{0.0, 1.0, 1.0, 0.0};
        initial_ = form.sqrt().inverse() * P;
        r_min_ = default_min_clearance(data_.poles());
        for (std::size_t i = 0; i < data_.size(); ++i) loop_radius_.push_back(0.4 * isolation_radius(data_.poles(), i));
    }

    MetricContext(const UnitarizingSolution& sol, TransportOptions transport = {})
        : MetricContext(sol.data, sol.monodromy.basepoint, sol.certificate.form, transport) {}

    [[nodiscard]] const SchwarzianData& data() const { return data_; }
    [[nodiscard]] const std::vector<cplx>& poles() const { return data_.poles(); }
    [[nodiscard]] cplx basepoint() const { return basepoint_; }
    [[nodiscard]] double r_min() const { return r_min_; }
    [[nodiscard]] double loop_radius(std::size_t i) const { return loop_radius_[i]; }
    [[nodiscard]] const TransportOptions& transport_options() const { return transport_; }
    /// Fundamental matrix at the basepoint in the unitary gauge, G^{-1} P.
    [[nodiscard]] const Mat2& initial_frame() const { return initial_; }

    [[nodiscard]] DevelopedFrame frame(cplx z, const Mat2& propagator, std::string path_id = {}) const {
        const Mat2 Y = propagator * initial_;
        return make_frame(z, Y.a, Y.b, Y.c, Y.d, std::move(path_id));
    }

private:
    SchwarzianData data_;
    cplx basepoint_;
    TransportOptions transport_;
    Mat2 initial_;
    double r_min_ = 0.0;
    std::vector<double> loop_radius_;
};

struct RoutedPath {
    TransportPath path;
    std::string id;
};

namespace detail {

inline double wrap_angle(double t) {
    t = std::remainder(t, 2.0 * std::numbers::pi);
    return t <= -std::numbers::pi ? t + 2.0 * std::numbers::pi : t;
}

}  // namespace detail

/// Deterministic route from the basepoint to z.
///
/// Inside the loop disk of a pole: the loop stem, an arc of the loop circle (short way round), then
/// radially inward. Elsewhere: the straight segment when it keeps clearance min(r_min, d(z)/2),
/// otherwise an arc of the basepoint circle about the origin followed by a straight segment, trying
/// directions closest to arg z first.
inline RoutedPath default_path(const MetricContext& ctx, cplx z) {
    const auto& poles = ctx.poles();
    const cplx z0 = ctx.basepoint();
    std::size_t near = 0;
    for (std::size_t i = 1; i < poles.size(); ++i)
        if (std::abs(z - poles[i]) < std::abs(z - poles[near])) near = i;
    const double t = std::abs(z - poles[near]);
    const double rho = ctx.loop_radius(near);
    if (t < rho && t > 0.0) {
        const cplx x = poles[near];
        const cplx u = (z0 - x) / std::abs(z0 - x);
        TransportPath p(z0);
        p.line_to(x + rho * u);
        const double sweep = detail::wrap_angle(std::arg(z - x) - std::arg(u));
        if (sweep != 0.0) p.arc_about(x, sweep);
        p.line_to(z);
        return {p, "pole-" + std::to_string(near + 1)};
    }
    const double want = std::min(ctx.r_min(), 0.5 * distance_to_set(z, poles));
    TransportPath direct(z0);
    direct.line_to(z);
    double best_c = direct.clearance(poles);
    if (best_c >= want) return {direct, "direct"};
    RoutedPath best{direct, "direct"};

    constexpr int K = 64;
    std::vector<int> ks(K);
    for (int k = 0; k < K; ++k) ks[k] = k;
    const double target = std::arg(z);
    auto theta = [&](int k) { return 2.0 * std::numbers::pi * k / K; };
    std::stable_sort(ks.begin(), ks.end(), [&](int a, int b) {
        return std::abs(detail::wrap_angle(theta(a) - target)) < std::abs(detail::wrap_angle(theta(b) - target));
    });
    for (int k : ks) {
        TransportPath p(z0);
        const double sweep = detail::wrap_angle(theta(k) - std::arg(z0));
        if (sweep != 0.0) p.arc_about(0.0, sweep);
        p.line_to(z);
        const double c = p.clearance(poles);
        if (c >= want) return {p, "arc-" + std::to_string(k)};
        if (c > best_c) {
            best_c = c;
            best = {p, "arc-" + std::to_string(k)};
        }
    }
    return best;
}

/// Frame at z along `path` (which must start at the basepoint and end at z).
inline DevelopedFrame develop_along(const MetricContext& ctx, const TransportPath& path, double min_clearance,
                                    std::string path_id = "custom") {
    TransportOptions opt = ctx.transport_options();
    opt.min_clearance = min_clearance;
    return ctx.frame(path.end(), transport(ctx.data(), path, opt), std::move(path_id));
}

/// Frame at z along the default path; z must keep clearance `min_clearance` (default r_min).
inline DevelopedFrame develop(const MetricContext& ctx, cplx z, double min_clearance = -1.0) {
    const double need = min_clearance >= 0.0 ? min_clearance : ctx.r_min();
    const double d = distance_to_set(z, ctx.poles());
    if (d < need) throw PathTooClose(d, need);
    if (z == ctx.basepoint()) return ctx.frame(z, Mat2::identity(), "basepoint");
    auto routed = default_path(ctx, z);
    return develop_along(ctx, routed.path, 0.5 * std::min(need, d), routed.id);
}

inline MetricSample sample(const MetricContext& ctx, cplx z, double min_clearance = -1.0) {
    const auto fr = develop(ctx, z, min_clearance);
    return {z, conformal_factor(fr), fr.path_id, fr.chart};
}

/// lambda as a function of z for the generic checks below.
inline auto lambda_provider(const MetricContext& ctx, double min_clearance = 0.0) {
    return [&ctx, min_clearance](cplx z) { return conformal_factor(develop(ctx, z, min_clearance)); };
}

// ---------------------------------------------------------------------------------------------
// Curvature

/// K = -Laplacian(log lambda) / lambda^2 from a five-point stencil of spacing h. The harmonic
/// function `harmonic` is subtracted from log lambda first, which leaves the exact Laplacian unchanged
/// and removes its contribution to the truncation error.
template <class LambdaFn, class HarmonicFn>
double stencil_curvature(LambdaFn&& lambda, cplx z, double h, HarmonicFn&& harmonic) {
    auto u = [&](cplx w) { return std::log(lambda(w)) - harmonic(w); };
    const double c = std::log(lambda(z));
    const double uc = c - harmonic(z);
    const double s = u(z + h) + u(z - h) + u(z + cplx(0.0, h)) + u(z - cplx(0.0, h));
    const double lap = (s - 4.0 * uc) / (h * h);
    const double l = std::exp(c);
    return -lap / (l * l);
}

template <class LambdaFn>
double stencil_curvature(LambdaFn&& lambda, cplx z, double h) {
    return stencil_curvature(lambda, z, h, [](cplx) { return 0.0; });
}

/// sum (alpha_i - 1) log|z - x_i|, the singular part of log lambda at the cone points.
inline double cone_log_singularity(const std::vector<cplx>& poles, const std::vector<double>& alphas, cplx z) {
    double s = 0.0;
    for (std::size_t i = 0; i < poles.size(); ++i) s += (alphas[i] - 1.0) * std::log(std::abs(z - poles[i]));
    return s;
}

/// Curvature from the developed frame at z, with stencil neighbours transported from z.
inline double curvature_at(const MetricContext& ctx, cplx z, double h) {
    const auto routed = default_path(ctx, z);
    TransportOptions opt = ctx.transport_options();
    opt.min_clearance = 0.0;
    const Mat2 U = transport(ctx.data(), routed.path, opt);
    auto lam = [&](cplx w) {
        if (w == z) return conformal_factor(ctx.frame(z, U));
        TransportPath step(z);
        step.line_to(w);
        return conformal_factor(ctx.frame(w, transport(ctx.data(), step, opt) * U));
    };
    return stencil_curvature(lam, z, h,
                             [&](cplx w) { return cone_log_singularity(ctx.poles(), ctx.data().angles(), w); });
}

struct GridSpec {
    cplx lower{-1.0, -1.0};
    cplx upper{1.0, 1.0};
    int nx = 21;
    int ny = 21;
    /// Points closer than this to a pole are left out.
    double clearance = 0.1;
};

/// Row-major lattice points of the grid (including both corners) that keep the clearance.
inline std::vector<cplx> grid_points(const GridSpec& g, const std::vector<cplx>& poles) {
    std::vector<cplx> pts;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.nx == 1 ? g.lower.real()
                                       : g.lower.real() + (g.upper.real() - g.lower.real()) * i / (g.nx - 1);
            const double y = g.ny == 1 ? g.lower.imag()
                                       : g.lower.imag() + (g.upper.imag() - g.lower.imag()) * j / (g.ny - 1);
            const cplx z{x, y};
            if (distance_to_set(z, poles) >= g.clearance) pts.push_back(z);
        }
    return pts;
}

struct CurvatureResult {
    double max_deviation = 0.0;
    cplx worst{};
    std::size_t points = 0;
};

/// max |K - 1| over the points; stencils must stay `stencil_clearance` (default 10 h) from poles.
template <class CurvatureFn>
CurvatureResult curvature_check(CurvatureFn&& curvature, const std::vector<cplx>& points,
                                const std::vector<cplx>& poles, double h, double stencil_clearance = -1.0) {
    const double need = stencil_clearance >= 0.0 ? stencil_clearance : 10.0 * h;
    for (const auto& z : points) {
        const double d = distance_to_set(z, poles);
        if (d < need) throw StencilTooCloseToPole(z, d);
    }
    CurvatureResult r;
    for (const auto& z : points) {
        const double dev = std::abs(curvature(z, h) - 1.0);
        if (dev > r.max_deviation || r.points == 0) {
            r.max_deviation = dev;
            r.worst = z;
        }
        ++r.points;
    }
    return r;
}

inline CurvatureResult curvature_check(const MetricContext& ctx, const std::vector<cplx>& points, double h) {
    return curvature_check([&](cplx z, double hh) { return curvature_at(ctx, z, hh); }, points, ctx.poles(), h);
}

// ---------------------------------------------------------------------------------------------
// Quadrature helpers

namespace detail {

constexpr std::size_t gauss_order = 20;

/// Gauss-Legendre nodes and weights on [a, b] split into `panels` equal panels.
inline std::vector<std::pair<double, double>> gauss_panels(double a, double b, int panels) {
    using rule = boost::math::quadrature::gauss<double, gauss_order>;
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    std::vector<std::pair<double, double>> out;
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * width, half = 0.5 * width;
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (x[k] == 0.0) {
                out.emplace_back(mid, half * w[k]);
                continue;
            }
            out.emplace_back(mid - half * x[k], half * w[k]);
            out.emplace_back(mid + half * x[k], half * w[k]);
        }
    }
    return out;
}

/// C-infinity step: 1 for s <= 1/2, 0 for s >= 1.
inline double bump(double s) {
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    auto h = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
    const double a = h(1.0 - s), b = h(s - 0.5);
    return a / (a + b);
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Cone angles

struct ConeAngleOptions {
    /// Radii relative to the isolation radius of the pole, largest first.
    std::vector<double> relative_radii{2e-4, 1e-4};
    int circle_nodes = 128;
    int ray_panels = 4;
    /// Unit direction of the ray used for s(r).
    cplx ray_direction{1.0, 0.0};
};

struct ConeAngleEstimate {
    std::vector<double> radii;
    std::vector<double> raw;  // L(r) / (2 pi s(r))
    double exponent = 1.0;    // Richardson order
    double estimate = 0.0;
};

/// Estimate alpha at x from L(r) / (2 pi s(r)) with Richardson extrapolation in r. `alpha` is the
/// expected exponent and only shapes the ray quadrature t = r v^{1/alpha}.
template <class LambdaFn>
ConeAngleEstimate cone_angle_estimate(LambdaFn&& lambda, cplx x, double alpha, const std::vector<double>& radii,
                                      double max_radius, const ConeAngleOptions& opt = {}) {
    if (radii.empty()) throw Error("cone-angle estimate needs at least one radius");
    ConeAngleEstimate out;
    for (double r : radii) {
        if (!(r > 0.0) || r >= max_radius) throw ConeRadiusTooLarge(r);
        double L = 0.0;
        for (int k = 0; k < opt.circle_nodes; ++k) {
            const double th = 2.0 * std::numbers::pi * (k + 0.5) / opt.circle_nodes;
            L += lambda(x + std::polar(r, th));
        }
        L *= 2.0 * std::numbers::pi * r / opt.circle_nodes;
        double s = 0.0;
        for (const auto& [v, w] : detail::gauss_panels(0.0, 1.0, opt.ray_panels)) {
            const double t = r * std::pow(v, 1.0 / alpha);
            const double dt = r / alpha * std::pow(v, 1.0 / alpha - 1.0);
            s += w * dt * lambda(x + t * opt.ray_direction);
        }
        out.radii.push_back(r);
        out.raw.push_back(L / (2.0 * std::numbers::pi * s));
    }
    out.estimate = out.raw.back();
    if (out.raw.size() >= 2) {
        const std::size_t m = out.raw.size();
        const double q = out.radii[m - 2] / out.radii[m - 1];
        out.exponent = std::min(1.0, 2.0 * out.raw.back());
        const double k = std::pow(q, out.exponent);
        out.estimate = (k * out.raw[m - 1] - out.raw[m - 2]) / (k - 1.0);
    }
    return out;
}

/// Cone angle at pole i of the developed metric, with the ray pointing at the basepoint.
inline ConeAngleEstimate cone_angle_estimate(const MetricContext& ctx, std::size_t i, ConeAngleOptions opt = {}) {
    const cplx x = ctx.poles().at(i);
    const double d = isolation_radius(ctx.poles(), i);
    opt.ray_direction = (ctx.basepoint() - x) / std::abs(ctx.basepoint() - x);
    std::vector<double> radii;
    for (double q : opt.relative_radii) radii.push_back(q * d);
    return cone_angle_estimate(lambda_provider(ctx), x, ctx.data().angles()[i], radii, 0.5 * ctx.loop_radius(i), opt);
}

// ---------------------------------------------------------------------------------------------
// Area

struct AreaOptions {
    int radial_panels = 8;
    int angular_nodes = 128;
    /// Allowed difference between the full and the half-resolution result.
    double tolerance = 1e-3;
    /// Further mesh halvings tried when the first comparison fails.
    int max_refinements = 1;
    /// Cone exponent at infinity (1 for a regular point).
    double alpha_infinity = 1.0;
};

struct AreaEstimate {
    double area = 0.0;
    double coarse = 0.0;
    std::size_t evaluations = 0;
};

/// lambda at the nodes c + r e^{i (k + 1/2) 2 pi / nodes}, k = 0..nodes-1, one point at a time.
template <class LambdaFn>
auto ring_from_points(LambdaFn&& lambda) {
    return [&lambda](cplx c, double r, int nodes) {
        std::vector<double> out(static_cast<std::size_t>(nodes));
        for (int k = 0; k < nodes; ++k) out[k] = lambda(c + std::polar(r, (k + 0.5) * 2.0 * std::numbers::pi / nodes));
        return out;
    };
}

namespace detail {

template <class RingFn>
double area_pass(RingFn&& ring, const std::vector<cplx>& poles, const std::vector<double>& alphas,
                 const AreaOptions& opt, int panels, int nodes, std::size_t& evals) {
    const std::size_t n = poles.size();
    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) rho[i] = 0.4 * std::min(isolation_radius(poles, i), 2.5);
    auto weight_outside = [&](cplx z) {
        double w = 1.0;
        for (std::size_t i = 0; i < n; ++i) w -= bump(std::abs(z - poles[i]) / rho[i]);
        return w;
    };
    const double dth = 2.0 * std::numbers::pi / nodes;
    auto sum_sq = [&](const std::vector<double>& l) {
        evals += l.size();
        double s = 0.0;
        for (double x : l) s += x * x;
        return s;
    };
    double total = 0.0;

    // cone neighbourhoods, t = rho v^{1/alpha}
    for (std::size_t i = 0; i < n; ++i) {
        const double a = alphas[i];
        const double vh = std::pow(0.5, a);
        auto part = [&](double v0, double v1) {
            double s = 0.0;
            for (const auto& [v, w] : gauss_panels(v0, v1, std::max(1, panels / 2))) {
                const double t = rho[i] * std::pow(v, 1.0 / a);
                const double jac = rho[i] * rho[i] / a * std::pow(v, 2.0 / a - 1.0);
                const double psi = bump(t / rho[i]);
                if (psi == 0.0) continue;
                s += w * jac * psi * sum_sq(ring(poles[i], t, nodes)) * dth;
            }
            return s;
        };
        total += part(0.0, vh) + part(vh, 1.0);
    }

    // the rest inside |z - c| <= R
    cplx c = 0.0;
    for (const auto& p : poles) c += p;
    c /= static_cast<double>(n);
    double R = 0.0;
    for (std::size_t i = 0; i < n; ++i) R = std::max(R, std::abs(poles[i] - c) + rho[i]);
    R *= 1.25;
    std::vector<double> wts(static_cast<std::size_t>(nodes));
    for (const auto& [r, w] : gauss_panels(0.0, R, panels)) {
        bool any = false;
        for (int k = 0; k < nodes; ++k) {
            wts[k] = std::max(0.0, weight_outside(c + std::polar(r, (k + 0.5) * dth)));
            any = any || wts[k] > 0.0;
        }
        if (!any) continue;
        const auto l = ring(c, r, nodes);
        evals += l.size();
        double acc = 0.0;
        for (int k = 0; k < nodes; ++k) acc += wts[k] * l[k] * l[k];
        total += w * r * acc * dth;
    }

    // exterior through w = 1/(z - c), |w| < 1/R, s = (1/R) v^{1/alpha_inf}; the w-circle |w| = s is
    // the z-circle of radius 1/s with reversed orientation, which leaves the node sum unchanged
    const double ai = opt.alpha_infinity;
    for (const auto& [v, w] : gauss_panels(0.0, 1.0, std::max(1, panels / 2))) {
        const double s = std::pow(v, 1.0 / ai) / R;
        const double jac = 1.0 / (R * R * ai) * std::pow(v, 2.0 / ai - 1.0);
        const double scale = 1.0 / (s * s * s * s);
        total += w * jac * scale * sum_sq(ring(c, 1.0 / s, nodes)) * dth;
    }
    return total;
}

}  // namespace detail

/// Integral of lambda^2 over the plane via a partition of unity: polar cone neighbourhoods with an
/// integrable-singularity substitution, a central disk, and the exterior in the chart w = 1/(z - c).
/// The mesh is halved until two successive results agree within the tolerance. `ring(c, r, nodes)`
/// returns lambda on the circle |z - c| = r at the angles (k + 1/2) 2 pi / nodes.
template <class RingFn>
AreaEstimate area_estimate_rings(RingFn&& ring, const std::vector<cplx>& poles, const std::vector<double>& alphas,
                                 const AreaOptions& opt = {}) {
    AreaEstimate out;
    int panels = std::max(1, opt.radial_panels / 2), nodes = std::max(4, opt.angular_nodes / 2);
    out.coarse = detail::area_pass(ring, poles, alphas, opt, panels, nodes, out.evaluations);
    for (int level = 0; level <= opt.max_refinements; ++level) {
        panels *= 2;
        nodes *= 2;
        out.area = detail::area_pass(ring, poles, alphas, opt, panels, nodes, out.evaluations);
        if (std::abs(out.area - out.coarse) <= opt.tolerance) return out;
        if (level < opt.max_refinements) out.coarse = out.area;
    }
    throw QuadratureNotConverged(out.area, out.coarse);
}

template <class LambdaFn>
AreaEstimate area_estimate(LambdaFn&& lambda, const std::vector<cplx>& poles, const std::vector<double>& alphas,
                           const AreaOptions& opt = {}) {
    return area_estimate_rings(ring_from_points(lambda), poles, alphas, opt);
}

/// lambda around a circle, developing once to the first node and then continuing along the circle.
/// Circles passing closer than `min_clearance` to a pole fall back to one development per node.
inline std::vector<double> ring_lambdas(const MetricContext& ctx, cplx c, double r, int nodes,
                                        double min_clearance = 1e-6) {
    const double dth = 2.0 * std::numbers::pi / nodes;
    double clearance = std::numeric_limits<double>::infinity();
    for (const auto& p : ctx.poles()) clearance = std::min(clearance, std::abs(std::abs(p - c) - r));
    std::vector<double> out(static_cast<std::size_t>(nodes));
    if (clearance < min_clearance * std::max(1.0, r)) {
        for (int k = 0; k < nodes; ++k) out[k] = conformal_factor(develop(ctx, c + std::polar(r, (k + 0.5) * dth), 0.0));
        return out;
    }
    const cplx z0 = c + std::polar(r, 0.5 * dth);
    const auto routed = default_path(ctx, z0);
    TransportOptions opt = ctx.transport_options();
    opt.min_clearance = 0.0;
    Mat2 U = transport(ctx.data(), routed.path, opt);
    out[0] = conformal_factor(ctx.frame(z0, U));
    for (int k = 1; k < nodes; ++k) {
        TransportPath arc(c + std::polar(r, (k - 0.5) * dth));
        arc.arc_about(c, dth);
        U = transport(ctx.data(), arc, opt) * U;
        out[k] = conformal_factor(ctx.frame(arc.end(), U));
    }
    return out;
}

inline AreaEstimate area_estimate(const MetricContext& ctx, const AreaOptions& opt = {}) {
    return area_estimate_rings([&](cplx c, double r, int nodes) { return ring_lambdas(ctx, c, r, nodes); },
                               ctx.poles(), ctx.data().angles(), opt);
}

/// Gauss-Bonnet area 2 pi (2 - sum (1 - alpha_i)).
inline double gauss_bonnet_area(const std::vector<double>& alphas) {
    double s = 0.0;
    for (double a : alphas) s += 1.0 - a;
    return 2.0 * std::numbers::pi * (2.0 - s);
}

// ---------------------------------------------------------------------------------------------
// Transversality and path independence

struct TransversalityResult {
    double min_lambda = std::numeric_limits<double>::infinity();
    cplx argmin{};
    double floor = 1e-6;
    [[nodiscard]] bool passed() const { return min_lambda > floor; }
};

template <class LambdaFn>
TransversalityResult transversality_check(LambdaFn&& lambda, const std::vector<cplx>& probes, double floor = 1e-6) {
    TransversalityResult r;
    r.floor = floor;
    for (const auto& z : probes) {
        const double l = lambda(z);
        if (l < r.min_lambda) {
            r.min_lambda = l;
            r.argmin = z;
        }
    }
    return r;
}

inline TransversalityResult transversality_check(const MetricContext& ctx, const std::vector<cplx>& probes,
                                                 double floor = 1e-6) {
    return transversality_check(lambda_provider(ctx), probes, floor);
}

/// Largest relative change of lambda when the route first runs once around each monodromy loop.
inline double path_independence_residual(const MetricContext& ctx, const std::vector<cplx>& probes) {
    double worst = 0.0;
    const auto& poles = ctx.poles();
    for (const auto& z : probes) {
        const auto base = develop(ctx, z);
        const double l0 = conformal_factor(base);
        const auto routed = default_path(ctx, z);
        for (std::size_t j = 0; j < poles.size(); ++j) {
            auto p = loop_path(ctx.basepoint(), poles[j], ctx.loop_radius(j));
            p.append(routed.path);
            const double l1 = conformal_factor(develop_along(ctx, p, 0.5 * std::min(ctx.r_min(), distance_to_set(z, poles))));
            worst = std::max(worst, std::abs(l1 - l0) / l0);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------------------------
// Verification

struct VerifyOptions {
    double curvature_step = 1e-3;
    double grid_clearance = 0.1;
    int grid_size = 21;
    double curvature_tolerance = 1e-4;
    double angle_tolerance = 1e-3;
    double area_tolerance = 1e-2;
    double path_tolerance = 1e-8;
    double lambda_floor = 1e-6;
    std::size_t path_probes = 12;
    ConeAngleOptions cone;
    AreaOptions area;
};

struct AngleCheck {
    double expected = 0.0;
    double from_trace = 0.0;
    ConeAngleEstimate estimate;
    double relative_error = 0.0;
};

struct VerificationReport {
    GridSpec grid;
    CurvatureResult curvature;
    std::vector<AngleCheck> angles;
    AreaEstimate area;
    double area_target = 0.0;
    double path_residual = 0.0;
    TransversalityResult transversality;
    VerifyOptions tolerances;

    [[nodiscard]] bool curvature_ok() const { return curvature.max_deviation < tolerances.curvature_tolerance; }
    [[nodiscard]] bool angles_ok() const {
        return std::all_of(angles.begin(), angles.end(),
                           [&](const AngleCheck& a) { return a.relative_error < tolerances.angle_tolerance; });
    }
    [[nodiscard]] bool area_ok() const { return std::abs(area.area - area_target) < tolerances.area_tolerance; }
    [[nodiscard]] bool path_ok() const { return path_residual < tolerances.path_tolerance; }
    [[nodiscard]] bool passed() const {
        return curvature_ok() && angles_ok() && area_ok() && path_ok() && transversality.passed();
    }
};

/// Square grid about the pole centroid covering every loop disk.
inline GridSpec default_grid(const std::vector<cplx>& poles, int size, double clearance) {
    cplx c = 0.0;
    for (const auto& p : poles) c += p;
    c /= static_cast<double>(poles.size());
    double R = 0.0;
    for (const auto& p : poles) R = std::max(R, std::abs(p - c));
    R += 0.5;
    return {c - cplx(R, R), c + cplx(R, R), size, size, clearance};
}

inline VerificationReport verify_metric(const MetricContext& ctx, const std::vector<Mat2>& generators,
                                        const VerifyOptions& opt = {}) {
    VerificationReport rep;
    rep.tolerances = opt;
    rep.grid = default_grid(ctx.poles(), opt.grid_size, opt.grid_clearance);
    const auto pts = grid_points(rep.grid, ctx.poles());
    rep.curvature = curvature_check(ctx, pts, opt.curvature_step);
    for (std::size_t i = 0; i < ctx.poles().size(); ++i) {
        AngleCheck a;
        a.expected = ctx.data().angles()[i];
        a.from_trace = i < generators.size() ? angle_from_trace(generators[i]) : a.expected;
        a.estimate = cone_angle_estimate(ctx, i, opt.cone);
        a.relative_error = std::abs(a.estimate.estimate - a.expected) / a.expected;
        rep.angles.push_back(std::move(a));
    }
    rep.area = area_estimate(ctx, opt.area);
    rep.area_target = gauss_bonnet_area(ctx.data().angles());
    std::vector<cplx> probes;
    const std::size_t stride = std::max<std::size_t>(1, pts.size() / std::max<std::size_t>(1, opt.path_probes));
    for (std::size_t k = 0; k < pts.size() && probes.size() < opt.path_probes; k += stride) probes.push_back(pts[k]);
    rep.path_residual = path_independence_residual(ctx, probes);
    rep.transversality = transversality_check(ctx, pts, opt.lambda_floor);
    return rep;
}

}  // namespace conemetric
