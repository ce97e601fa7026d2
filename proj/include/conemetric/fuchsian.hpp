#pragma once

// Projective realization of the logarithmic connection: the Schwarzian equation
//
//     y'' + (Q/2) y = 0,    Q(z) = sum_i [ (1 - alpha_i^2) / (2 (z - x_i)^2) + beta_i / (z - x_i) ],
//
// whose local exponents at x_i are (1 -+ alpha_i)/2, continued along paths in the punctured plane.
// The accessory parameters beta_i obey three linear relations that make infinity a regular point.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "conemetric/error.hpp"
#include "conemetric/exact_core.hpp"
#include "conemetric/mat2.hpp"

namespace conemetric {

class InvalidSchwarzianData : public Error {
public:
    explicit InvalidSchwarzianData(const std::string& what) : Error("invalid Schwarzian data: " + what) {}
};

class SingularConstraintSystem : public Error {
public:
    SingularConstraintSystem() : Error("accessory constraint system is singular") {}
};

class EvaluationAtPole : public Error {
public:
    explicit EvaluationAtPole(std::size_t i) : Error("Q evaluated at pole " + std::to_string(i + 1)), index(i) {}
    std::size_t index;
};

class PathTooClose : public Error {
public:
    PathTooClose(double clearance, double required)
        : Error("transport path clearance " + std::to_string(clearance) + " below " + std::to_string(required)),
          clearance(clearance) {}
    double clearance;
};

class ToleranceNotMet : public Error {
public:
    explicit ToleranceNotMet(const std::string& what) : Error("transport tolerance not met: " + what) {}
};

// ---------------------------------------------------------------------------------------------

inline double min_pairwise_distance(const std::vector<cplx>& pts) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::min(d, std::abs(pts[i] - pts[j]));
    return d;
}

/// Distance from x_i to the nearest other point.
inline double isolation_radius(const std::vector<cplx>& pts, std::size_t i) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j)
        if (j != i) d = std::min(d, std::abs(pts[i] - pts[j]));
    return d;
}

inline double distance_to_set(cplx z, const std::vector<cplx>& pts) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) d = std::min(d, std::abs(z - p));
    return d;
}

/// Pole clearance used as the default transport threshold: 1/20 of the closest pole pair.
inline double default_min_clearance(const std::vector<cplx>& poles) { return min_pairwise_distance(poles) / 20.0; }

/// Poles, angles and accessory parameters of a rational Schwarzian derivative.
class SchwarzianData {
public:
    static constexpr double constraint_tolerance = 1e-12;

    /// Validated construction: distinct poles, 0 < alpha < 1, constraints within tolerance.
    static SchwarzianData make(std::vector<cplx> poles, std::vector<double> angles, std::vector<cplx> accessory) {
        SchwarzianData d(std::move(poles), std::move(angles), std::move(accessory));
        d.validate();
        return d;
    }

    /// No invariant checks; for degenerate or deliberately tampered inputs.
    static SchwarzianData unchecked(std::vector<cplx> poles, std::vector<double> angles, std::vector<cplx> accessory) {
        if (poles.size() != angles.size() || poles.size() != accessory.size())
            throw InvalidSchwarzianData("size mismatch");
        return SchwarzianData(std::move(poles), std::move(angles), std::move(accessory));
    }

    [[nodiscard]] std::size_t size() const { return poles_.size(); }
    [[nodiscard]] const std::vector<cplx>& poles() const { return poles_; }
    [[nodiscard]] const std::vector<double>& angles() const { return angles_; }
    [[nodiscard]] const std::vector<cplx>& accessory() const { return accessory_; }

    /// Double-pole coefficient (1 - alpha_i^2)/2.
    [[nodiscard]] double leading(std::size_t i) const { return 0.5 * (1.0 - angles_[i] * angles_[i]); }

    /// Residuals of sum beta_i, sum (beta_i x_i + c_i), sum (beta_i x_i^2 + 2 c_i x_i), each divided by
    /// 1 + the sum of the absolute values of its terms.
    [[nodiscard]] std::array<double, 3> constraint_residuals() const {
        cplx r0 = 0.0, r1 = 0.0, r2 = 0.0;
        double s0 = 1.0, s1 = 1.0, s2 = 1.0;
        for (std::size_t i = 0; i < size(); ++i) {
            const cplx x = poles_[i], b = accessory_[i];
            const double c = leading(i);
            r0 += b;
            s0 += std::abs(b);
            r1 += b * x + c;
            s1 += std::abs(b * x) + std::abs(c);
            r2 += b * x * x + 2.0 * c * x;
            s2 += std::abs(b * x * x) + std::abs(2.0 * c * x);
        }
        return {std::abs(r0) / s0, std::abs(r1) / s1, std::abs(r2) / s2};
    }

    [[nodiscard]] double max_constraint_residual() const {
        const auto r = constraint_residuals();
        return *std::max_element(r.begin(), r.end());
    }

private:
    SchwarzianData(std::vector<cplx> poles, std::vector<double> angles, std::vector<cplx> accessory)
        : poles_(std::move(poles)), angles_(std::move(angles)), accessory_(std::move(accessory)) {}

    void validate() const {
        if (poles_.size() != angles_.size() || poles_.size() != accessory_.size())
            throw InvalidSchwarzianData("size mismatch");
        if (poles_.size() < 3) throw InvalidSchwarzianData("need at least 3 poles");
        for (std::size_t i = 0; i < size(); ++i)
            if (!(angles_[i] > 0.0 && angles_[i] < 1.0))
                throw InvalidSchwarzianData("angle " + std::to_string(i + 1) + " outside (0, 1)");
        if (!(min_pairwise_distance(poles_) > 0.0)) throw InvalidSchwarzianData("repeated pole");
        if (max_constraint_residual() > constraint_tolerance)
            throw InvalidSchwarzianData("accessory constraints violated");
    }

    std::vector<cplx> poles_;
    std::vector<double> angles_;
    std::vector<cplx> accessory_;
};

/// Accessory parameters with beta_4..beta_n fixed to `free` and beta_1..beta_3 solved from the
/// regularity-at-infinity relations (a Vandermonde system in x_1, x_2, x_3).
inline SchwarzianData solve_accessory_constraints(const std::vector<cplx>& poles, const std::vector<double>& angles,
                                                  const std::vector<cplx>& free) {
    const std::size_t n = poles.size();
    if (n < 3 || angles.size() != n) throw InvalidSchwarzianData("need n >= 3 poles with matching angles");
    if (free.size() != n - 3) throw InvalidSchwarzianData("expected n - 3 free parameters");

    std::array<cplx, 3> rhs{};
    for (std::size_t i = 0; i < n; ++i) {
        const double c = 0.5 * (1.0 - angles[i] * angles[i]);
        rhs[1] -= c;
        rhs[2] -= 2.0 * c * poles[i];
    }
    for (std::size_t k = 3; k < n; ++k) {
        const cplx b = free[k - 3], x = poles[k];
        rhs[0] -= b;
        rhs[1] -= b * x;
        rhs[2] -= b * x * x;
    }
    std::array<std::array<cplx, 4>, 3> m{};
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t col = 0; col < 3; ++col) m[r][col] = std::pow(poles[col], static_cast<int>(r));
        m[r][3] = rhs[r];
    }
    const double scale = 1.0 + std::max({std::abs(poles[0]), std::abs(poles[1]), std::abs(poles[2])});
    for (std::size_t col = 0; col < 3; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-14 * scale * scale) throw SingularConstraintSystem();
        std::swap(m[piv], m[col]);
        for (std::size_t r = 0; r < 3; ++r) {
            if (r == col) continue;
            const cplx f = m[r][col] / m[col][col];
            for (std::size_t k = col; k < 4; ++k) m[r][k] -= f * m[col][k];
        }
    }
    std::vector<cplx> beta(n);
    for (std::size_t i = 0; i < 3; ++i) beta[i] = m[i][3] / m[i][i];
    for (std::size_t k = 3; k < n; ++k) beta[k] = free[k - 3];
    return SchwarzianData::make(poles, angles, std::move(beta));
}

/// The free parameters (beta_4..beta_n) of a data set.
inline std::vector<cplx> free_parameters(const SchwarzianData& d) {
    return {d.accessory().begin() + 3, d.accessory().end()};
}

inline cplx q_coefficient(const SchwarzianData& d, cplx z) {
    cplx q = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const cplx w = z - d.poles()[i];
        if (w == 0.0) throw EvaluationAtPole(i);
        const cplx inv = 1.0 / w;
        q += inv * (d.leading(i) * inv + d.accessory()[i]);
    }
    return q;
}

/// Diagonal local model at a pole: exponents (a_i1, a_i2), the flag line is the a_i1-eigenline,
/// and in the projective coordinate y = y2/y1 leaves are y = c t^alpha.
struct LocalModel {
    std::size_t index;
    double rho_minus;  // a_i1
    double rho_plus;   // a_i2
    double leaf_exponent;

    /// Eigenvalues e^{2 pi i rho} of the local monodromy.
    [[nodiscard]] std::pair<cplx, cplx> monodromy_eigenvalues() const {
        using std::numbers::pi;
        return {std::polar(1.0, 2.0 * pi * rho_minus), std::polar(1.0, 2.0 * pi * rho_plus)};
    }
    [[nodiscard]] bool non_resonant() const {
        const double diff = rho_plus - rho_minus;
        return std::abs(diff - std::round(diff)) > 0.0;
    }
};

inline LocalModel local_model(const SchwarzianData& d, std::size_t i) {
    const double a = d.angles().at(i);
    return {i, 0.5 * (1.0 - a), 0.5 * (1.0 + a), a};
}

/// sum (a_i1 + a_i2), which must equal deg E = n.
inline exact::Rational residue_degree_check(const exact::ParabolicWeights& w) {
    exact::Rational s = 0;
    for (const auto& [a1, a2] : w) s += a1 + a2;
    if (s != static_cast<long>(w.size())) throw exact::InvalidWeights("residue sum differs from n");
    return s;
}

// ---------------------------------------------------------------------------------------------
// Paths

/// Straight segment or circular arc, parametrized by arc length.
struct PathSegment {
    enum class Kind { Line, Arc };
    Kind kind = Kind::Line;
    cplx from{}, to{};
    cplx center{};
    double radius = 0.0, theta0 = 0.0, sweep = 0.0;

    static PathSegment line(cplx a, cplx b) { return {Kind::Line, a, b, {}, 0.0, 0.0, 0.0}; }
    static PathSegment arc(cplx center, double radius, double theta0, double sweep) {
        return {Kind::Arc, center + std::polar(radius, theta0), center + std::polar(radius, theta0 + sweep),
                center, radius, theta0, sweep};
    }

    [[nodiscard]] double length() const { return kind == Kind::Line ? std::abs(to - from) : radius * std::abs(sweep); }
    /// Point at elapsed length s with remaining length rem = length() - s; lines are located from the
    /// nearer end so positions next to an endpoint keep full relative precision.
    [[nodiscard]] cplx point(double s, double rem) const {
        if (kind == Kind::Line && rem < s) {
            const double L = length();
            return L == 0.0 ? to : to - (to - from) * (rem / L);
        }
        return point(s);
    }
    [[nodiscard]] cplx point(double s) const {
        if (kind == Kind::Line) {
            const double L = length();
            return L == 0.0 ? from : from + (to - from) * (s / L);
        }
        return center + std::polar(radius, theta0 + std::copysign(s / radius, sweep));
    }
    /// dz/ds
    [[nodiscard]] cplx tangent(double s) const {
        if (kind == Kind::Line) {
            const double L = length();
            return L == 0.0 ? cplx(0.0) : (to - from) / L;
        }
        const double th = theta0 + std::copysign(s / radius, sweep);
        return cplx(0.0, std::copysign(1.0, sweep)) * std::polar(1.0, th);
    }
    [[nodiscard]] PathSegment reversed() const {
        if (kind == Kind::Line) return line(to, from);
        return arc(center, radius, theta0 + sweep, -sweep);
    }
    [[nodiscard]] double distance_to(cplx p) const {
        if (kind == Kind::Line) {
            const cplx d = to - from;
            const double L2 = std::norm(d);
            if (L2 == 0.0) return std::abs(p - from);
            const double t = std::clamp(((p - from) * std::conj(d)).real() / L2, 0.0, 1.0);
            return std::abs(p - (from + t * d));
        }
        const cplx rel = p - center;
        const double r = std::abs(rel);
        if (r > 0.0 && std::abs(sweep) < 2.0 * std::numbers::pi) {
            // is the direction of p inside the swept range?
            double phi = std::arg(rel) - theta0;
            if (sweep < 0.0) phi = -phi;
            phi = std::fmod(phi, 2.0 * std::numbers::pi);
            if (phi < 0.0) phi += 2.0 * std::numbers::pi;
            if (phi > std::abs(sweep)) return std::min(std::abs(p - from), std::abs(p - to));
        }
        return std::abs(r - radius);
    }
};

/// Piecewise line/arc path in C.
class TransportPath {
public:
    explicit TransportPath(cplx start) : start_(start), end_(start) {}

    TransportPath& line_to(cplx z) {
        if (z != end_) segments_.push_back(PathSegment::line(end_, z));
        end_ = z;
        return *this;
    }
    /// Arc about `center` from the current end point, counterclockwise when sweep > 0.
    TransportPath& arc_about(cplx center, double sweep) {
        const cplx rel = end_ - center;
        const auto seg = PathSegment::arc(center, std::abs(rel), std::arg(rel), sweep);
        segments_.push_back(seg);
        end_ = seg.to;
        return *this;
    }
    TransportPath& append(const TransportPath& other) {
        line_to(other.start_);
        for (const auto& s : other.segments_) segments_.push_back(s);
        end_ = other.end_;
        return *this;
    }

    [[nodiscard]] TransportPath reversed() const {
        TransportPath out(end_);
        for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) out.segments_.push_back(it->reversed());
        out.end_ = start_;
        return out;
    }

    [[nodiscard]] cplx start() const { return start_; }
    [[nodiscard]] cplx end() const { return end_; }
    [[nodiscard]] const std::vector<PathSegment>& segments() const { return segments_; }
    [[nodiscard]] double length() const {
        double L = 0.0;
        for (const auto& s : segments_) L += s.length();
        return L;
    }
    [[nodiscard]] double clearance(const std::vector<cplx>& poles) const {
        double c = distance_to_set(start_, poles);
        for (const auto& s : segments_)
            for (const auto& p : poles) c = std::min(c, s.distance_to(p));
        return c;
    }

private:
    cplx start_;
    cplx end_;
    std::vector<PathSegment> segments_;
};

// ---------------------------------------------------------------------------------------------
// Transport

struct TransportOptions {
    /// Local error allowed per unit of path length, lengths measured in units of min(1, distance to
    /// the nearest pole).
    double tol = 1e-10;
    /// Required path clearance; negative selects default_min_clearance(poles).
    double min_clearance = -1.0;
    std::size_t max_steps = 2'000'000;
    /// Smallest step relative to the local length unit before giving up.
    double relative_step_floor = 1e-9;
};

namespace detail {

struct TransportState {
    Mat2 U;
    double h;  // step carried between segments; 0 = choose fresh
    std::size_t steps = 0;
};

/// Offsets z - x_i along a segment, measured from anchors that were formed once, so that close to
/// a pole the offset keeps full relative precision.
class SegmentOffsets {
public:
    SegmentOffsets(const SchwarzianData& d, const PathSegment& seg) : seg_(seg) {
        for (const auto& x : d.poles()) {
            from_.push_back(seg.from - x);
            to_.push_back(seg.to - x);
            center_.push_back(seg.center - x);
        }
        const double L = seg.length();
        dir_ = L == 0.0 ? cplx(0.0) : (seg.to - seg.from) / L;
    }

    /// Fills w with z - x_i at elapsed length s, remaining length rem.
    void at(double s, double rem, std::vector<cplx>& w) const {
        w.resize(from_.size());
        if (seg_.kind == PathSegment::Kind::Line) {
            if (rem < s)
                for (std::size_t i = 0; i < w.size(); ++i) w[i] = to_[i] - dir_ * rem;
            else
                for (std::size_t i = 0; i < w.size(); ++i) w[i] = from_[i] + dir_ * s;
            return;
        }
        const cplx e = std::polar(seg_.radius, seg_.theta0 + std::copysign(s / seg_.radius, seg_.sweep));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = center_[i] + e;
    }

private:
    const PathSegment& seg_;
    std::vector<cplx> from_, to_, center_;
    cplx dir_;
};

inline cplx q_from_offsets(const SchwarzianData& d, const std::vector<cplx>& w) {
    cplx q = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0) throw EvaluationAtPole(i);
        const cplx inv = 1.0 / w[i];
        q += inv * (d.leading(i) * inv + d.accessory()[i]);
    }
    return q;
}

inline Mat2 rhs(cplx q, cplx dz, const Mat2& U) {
    const cplx k = -0.5 * q * dz;
    return {dz * U.c, dz * U.d, k * U.a, k * U.b};
}

inline double max_abs_diff(const Mat2& x) { return x.max_abs(); }

/// Dormand-Prince 5(4) across one segment.
inline void integrate_segment(const SchwarzianData& d, const PathSegment& seg, TransportState& st,
                              const TransportOptions& opt) {
    const double L = seg.length();
    if (L == 0.0) return;
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // difference between the 5th and embedded 4th order weights
    constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                     e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                     e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    // the stage at offset c*h from (s, rem)
    const SegmentOffsets offsets(d, seg);
    std::vector<cplx> w;
    auto f = [&](double s, double rem, double ch, const Mat2& U) {
        offsets.at(s + ch, rem - ch, w);
        return rhs(q_from_offsets(d, w), seg.tangent(s + ch), U);
    };
    auto unit = [&](double s, double rem) {
        offsets.at(s, rem, w);
        double m = 1.0;
        for (const auto& x : w) m = std::min(m, std::abs(x));
        return m;
    };

    double s = 0.0, rem = L;
    double h = st.h > 0.0 ? st.h : 0.01 * unit(0.0, L);
    Mat2 k1 = f(s, rem, 0.0, st.U);
    while (rem > 0.0) {
        const double ell = unit(s, rem);
        if (h < opt.relative_step_floor * ell) {
            const cplx z = seg.point(s, rem);
            throw ToleranceNotMet("step size underflow near z = " + std::to_string(z.real()) + "+" +
                                  std::to_string(z.imag()) + "i");
        }
        if (++st.steps > opt.max_steps) throw ToleranceNotMet("step limit exceeded");
        const bool last = h >= rem;
        const double hs = last ? rem : h;
        const Mat2& U = st.U;
        const Mat2 k2 = f(s, rem, c2 * hs, U + (a21 * hs) * k1);
        const Mat2 k3 = f(s, rem, c3 * hs, U + hs * (a31 * k1 + a32 * k2));
        const Mat2 k4 = f(s, rem, c4 * hs, U + hs * (a41 * k1 + a42 * k2 + a43 * k3));
        const Mat2 k5 = f(s, rem, c5 * hs, U + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Mat2 k6 = f(s, rem, hs, U + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Mat2 next = U + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Mat2 k7 = f(s, rem, hs, next);
        const Mat2 err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double scale = 1.0 + std::max(U.max_abs(), next.max_abs());
        const double allowed = opt.tol * (hs / ell) * scale;
        const double e = max_abs_diff(err);
        double factor = e == 0.0 ? 5.0 : 0.9 * std::pow(allowed / e, 0.25);
        factor = std::clamp(factor, 0.2, 5.0);
        if (e <= allowed) {
            s += hs;
            rem = last ? 0.0 : rem - hs;
            st.U = next;
            k1 = k7;
            if (!last) h *= factor;
        } else {
            h = hs * std::min(factor, 0.9);
        }
    }
    st.h = h;
}

}  // namespace detail

/// Propagator U along the path for the first-order system Y' = [[0, 1], [-Q/2, 0]] Y, so a solution
/// column (y, y') at the start becomes U (y, y') at the end.
inline Mat2 transport(const SchwarzianData& d, const TransportPath& path, const TransportOptions& opt = {}) {
    const double required = opt.min_clearance >= 0.0 ? opt.min_clearance : default_min_clearance(d.poles());
    const double clearance = path.clearance(d.poles());
    if (!(clearance > 0.0) || clearance < required) throw PathTooClose(clearance, required);
    detail::TransportState st{Mat2::identity(), 0.0};
    for (const auto& seg : path.segments()) detail::integrate_segment(d, seg, st, opt);
    return st.U;
}

// ---------------------------------------------------------------------------------------------
// Monodromy

struct MonodromyOptions {
    std::optional<cplx> basepoint;
    TransportOptions transport;
};

/// Generators of the monodromy for loops "stem + circle + stem" from a common basepoint.
///
/// Convention: continuing the fundamental matrix Phi (Phi(z0) = I) around loop i gives Phi * M_i, and
/// M_i equals the transport propagator of loop i. Loops are ordered by increasing argument of
/// x_i - z0 measured from the direction -z0; with that order the loop traversed first encloses the
/// first pole, so the propagator of the loop around all poles is M_{order[n-1]} ... M_{order[0]}.
struct MonodromyRep {
    cplx basepoint;
    std::vector<std::size_t> order;
    std::vector<double> loop_radius;  // indexed by pole
    std::vector<Mat2> generators;     // indexed by pole

    [[nodiscard]] Mat2 ordered_product() const {
        Mat2 p = Mat2::identity();
        for (std::size_t k : order) p = generators[k] * p;
        return p;
    }
};

struct MonodromyDiagnostics {
    double max_det_error = 0.0;
    double max_trace_error = 0.0;
    double product_error = 0.0;

    [[nodiscard]] bool within(double eps) const {
        return max_det_error < eps && max_trace_error < eps && product_error < eps;
    }
};

/// Expected trace of the canonical lift at a cone point: -2 cos(pi alpha).
inline double expected_trace(double alpha) { return -2.0 * std::cos(std::numbers::pi * alpha); }

inline MonodromyDiagnostics check_monodromy(const MonodromyRep& rep, const std::vector<double>& angles) {
    MonodromyDiagnostics diag;
    for (std::size_t i = 0; i < rep.generators.size(); ++i) {
        diag.max_det_error = std::max(diag.max_det_error, std::abs(rep.generators[i].det() - 1.0));
        diag.max_trace_error =
            std::max(diag.max_trace_error, std::abs(rep.generators[i].trace() - expected_trace(angles[i])));
    }
    diag.product_error = distance(rep.ordered_product(), Mat2::identity());
    return diag;
}

/// Angle read back from a generator's trace, alpha = arccos(-tr/2)/pi.
inline double angle_from_trace(const Mat2& m) {
    const double t = std::clamp(-0.5 * m.trace().real(), -1.0, 1.0);
    return std::acos(t) / std::numbers::pi;
}

namespace detail {

inline double stem_clearance(cplx z0, const std::vector<cplx>& poles) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poles.size(); ++i) {
        const auto stem = PathSegment::line(z0, poles[i]);
        for (std::size_t j = 0; j < poles.size(); ++j)
            if (j != i) best = std::min(best, stem.distance_to(poles[j]));
    }
    return best;
}

}  // namespace detail

/// Default basepoint: radius max|x_i| + 1, on the positive real axis when straight stems from there
/// keep a quarter of the minimal pole distance from every other pole, otherwise at the first of 64
/// equally spaced directions maximizing the stem clearance.
inline cplx default_basepoint(const std::vector<cplx>& poles) {
    double R = 0.0;
    for (const auto& p : poles) R = std::max(R, std::abs(p));
    R += 1.0;
    const double dmin = min_pairwise_distance(poles);
    if (detail::stem_clearance(R, poles) >= 0.25 * dmin) return R;
    cplx best = R;
    double best_score = -1.0;
    for (int k = 0; k < 64; ++k) {
        const cplx z0 = std::polar(R, 2.0 * std::numbers::pi * k / 64.0);
        const double score = detail::stem_clearance(z0, poles);
        if (score > best_score + 1e-12) {
            best_score = score;
            best = z0;
        }
    }
    return best;
}

/// Loop order by increasing argument of x_i - z0 relative to the direction -z0.
inline std::vector<std::size_t> loop_order(cplx z0, const std::vector<cplx>& poles) {
    std::vector<std::size_t> order(poles.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const cplx ref = z0 == 0.0 ? cplx(-1.0) : -z0;
    auto key = [&](std::size_t i) { return std::arg((poles[i] - z0) / ref); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ka = key(a), kb = key(b);
        if (ka != kb) return ka < kb;
        return std::abs(poles[a] - z0) < std::abs(poles[b] - z0);
    });
    return order;
}

/// Stem from z0 to the circle of radius r about x, one counterclockwise turn, and back.
inline TransportPath loop_path(cplx z0, cplx x, double r) {
    const cplx u = (z0 - x) / std::abs(z0 - x);
    TransportPath p(z0);
    p.line_to(x + r * u).arc_about(x, 2.0 * std::numbers::pi).line_to(z0);
    return p;
}

inline MonodromyRep monodromy_generators(const SchwarzianData& d, const MonodromyOptions& opt = {}) {
    const auto& poles = d.poles();
    MonodromyRep rep;
    rep.basepoint = opt.basepoint.value_or(default_basepoint(poles));
    rep.order = loop_order(rep.basepoint, poles);
    rep.loop_radius.resize(poles.size());
    rep.generators.resize(poles.size());
    for (std::size_t i = 0; i < poles.size(); ++i) {
        rep.loop_radius[i] = 0.4 * isolation_radius(poles, i);
        rep.generators[i] = transport(d, loop_path(rep.basepoint, poles[i], rep.loop_radius[i]), opt.transport);
    }
    return rep;
}

}  // namespace conemetric
