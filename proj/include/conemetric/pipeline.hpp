#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "conemetric/exact_core.hpp"
#include "conemetric/fuchsian.hpp"
#include "conemetric/metric.hpp"
#include "conemetric/unitarize.hpp"

namespace conemetric {

using json = nlohmann::json;

inline constexpr const char* version_string = "0.1.0";

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

struct GridOptions {
    int width = 101;
    int height = 101;
    cplx lower{-1.0, -1.0};
    cplx upper{1.0, 1.0};
    /// Grid nodes this close to a pole are dropped.
    double pole_skip = 1e-6;
};

struct JobConfig {
    std::vector<exact::Scalar> points;  // after Mobius normalization
    std::vector<exact::Rational> angles;
    std::vector<std::string> point_labels;
    std::optional<exact::Scalar> mobius_center;
    UnitarizeOptions solver;
    VerifyOptions verify;
    GridOptions grid;
    std::string hash;

    [[nodiscard]] exact::ConeConfiguration configuration() const { return {points, angles}; }
};

/// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

inline exact::Rational json_rational(const json& v, const std::string& what) {
    if (v.is_string()) return exact::parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return exact::Rational(v.get<long long>());
    if (v.is_number()) return exact::from_double(v.get<double>());
    throw ConfigError(what + " must be a rational string or a number");
}

inline cplx json_complex(const json& v, const std::string& what) {
    if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
    if (v.is_number()) return {v.get<double>(), 0.0};
    throw ConfigError(what + " must be a number or [re, im]");
}

/// Deterministic Mobius center: the first of 0, 1, -1, 2, -2, ... at distance >= 1/2 from all points.
inline exact::Scalar mobius_center(const std::vector<exact::Scalar>& finite) {
    for (long k = 0;; ++k) {
        const long c = k % 2 == 0 ? -(k / 2) : (k + 1) / 2;
        const exact::Scalar z{exact::Rational(c)};
        bool ok = true;
        for (const auto& p : finite)
            if ((p - z).norm() < exact::Rational(1, 4)) ok = false;
        if (ok) return z;
    }
}

}  // namespace detail

/// Parse a JSON job description:
///
///   points   list of "p/q" / decimal strings, [re, im] pairs of those, or "inf" (at most once)
///   angles   list of exact rationals alpha_i
///   solver   { seed, random_seeds, defect_target, tol }
///   grid     { width, height, lower: [re, im], upper: [re, im] }
///   verify   { curvature_step, grid_clearance, grid_size }
inline JobConfig parse_job_config(const json& j) {
    if (!j.is_object()) throw ConfigError("top level must be an object");
    if (!j.contains("points") || !j["points"].is_array()) throw ConfigError("missing points list");
    if (!j.contains("angles") || !j["angles"].is_array()) throw ConfigError("missing angles list");
    JobConfig cfg;
    cfg.hash = fnv1a_hex(j.dump());

    std::vector<std::optional<exact::Scalar>> raw;
    int infinite = 0;
    for (std::size_t i = 0; i < j["points"].size(); ++i) {
        const auto& p = j["points"][i];
        const std::string what = "point " + std::to_string(i + 1);
        if (p.is_string() && (p.get<std::string>() == "inf" || p.get<std::string>() == "infinity")) {
            ++infinite;
            raw.emplace_back();
            cfg.point_labels.push_back("inf");
            continue;
        }
        if (p.is_array()) {
            if (p.size() != 2) throw ConfigError(what + " must be [re, im]");
            raw.emplace_back(exact::Scalar{detail::json_rational(p[0], what), detail::json_rational(p[1], what)});
        } else {
            raw.emplace_back(exact::Scalar{detail::json_rational(p, what)});
        }
        cfg.point_labels.push_back(p.dump());
    }
    if (infinite > 1) throw ConfigError("at most one point may be at infinity");
    if (infinite == 1) {
        std::vector<exact::Scalar> finite;
        for (const auto& r : raw)
            if (r) finite.push_back(*r);
        const auto c = detail::mobius_center(finite);
        cfg.mobius_center = c;
        for (const auto& r : raw) {
            if (!r) {
                cfg.points.emplace_back(0);
                continue;
            }
            const auto diff = *r - c;
            if (diff.is_zero()) throw exact::InvalidConfiguration("point coincides with the Mobius center");
            cfg.points.push_back(exact::Scalar(1) / diff);
        }
    } else {
        for (const auto& r : raw) cfg.points.push_back(*r);
    }
    for (std::size_t i = 0; i < j["angles"].size(); ++i) {
        const auto& a = j["angles"][i];
        if (!a.is_string() && !a.is_number_integer())
            throw ConfigError("angle " + std::to_string(i + 1) + " must be an exact rational string");
        cfg.angles.push_back(detail::json_rational(a, "angle " + std::to_string(i + 1)));
    }

    if (j.contains("solver")) {
        const auto& s = j["solver"];
        cfg.solver.seed = s.value("seed", cfg.solver.seed);
        cfg.solver.random_seeds = s.value("random_seeds", cfg.solver.random_seeds);
        cfg.solver.defect_target = s.value("defect_target", cfg.solver.defect_target);
        cfg.solver.monodromy.transport.tol = s.value("tol", cfg.solver.monodromy.transport.tol);
        if (!(cfg.solver.defect_target > 0.0) || !(cfg.solver.monodromy.transport.tol > 0.0))
            throw ConfigError("solver tolerances must be positive");
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        cfg.grid.width = g.value("width", cfg.grid.width);
        cfg.grid.height = g.value("height", cfg.grid.height);
        if (g.contains("lower")) cfg.grid.lower = detail::json_complex(g["lower"], "grid.lower");
        if (g.contains("upper")) cfg.grid.upper = detail::json_complex(g["upper"], "grid.upper");
        if (cfg.grid.width < 1 || cfg.grid.height < 1) throw ConfigError("grid size must be positive");
    }
    if (j.contains("verify")) {
        const auto& v = j["verify"];
        cfg.verify.curvature_step = v.value("curvature_step", cfg.verify.curvature_step);
        cfg.verify.grid_clearance = v.value("grid_clearance", cfg.verify.grid_clearance);
        cfg.verify.grid_size = v.value("grid_size", cfg.verify.grid_size);
        if (!(cfg.verify.curvature_step > 0.0) || !(cfg.verify.grid_clearance > 0.0))
            throw ConfigError("verification tolerances must be positive");
    }
    (void)cfg.configuration();  // validates points and angles
    return cfg;
}

inline JobConfig load_job_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_job_config(j);
}

// ---------------------------------------------------------------------------------------------
// JSON helpers

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }
inline cplx complex_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
inline json to_json(const Mat2& m) { return json::array({to_json(m.a), to_json(m.b), to_json(m.c), to_json(m.d)}); }
inline Mat2 mat2_from_json(const json& j) {
    return {complex_from_json(j.at(0)), complex_from_json(j.at(1)), complex_from_json(j.at(2)),
            complex_from_json(j.at(3))};
}
inline json to_json(const exact::Scalar& z) {
    return json::array({exact::to_string(z.re), exact::to_string(z.im)});
}

inline const char* witness_name(exact::DestabilizingWitness::Kind k) {
    switch (k) {
        case exact::DestabilizingWitness::Kind::LowDegreeBound: return "low-degree bound";
        case exact::DestabilizingWitness::Kind::SecondSummand: return "O(n-1) summand";
        case exact::DestabilizingWitness::Kind::DegreeOne: return "degree-1 subbundle";
    }
    return "?";
}

// ---------------------------------------------------------------------------------------------
// Stages

struct ExactSection {
    bool gauss_bonnet = false;
    bool angle_stability = false;
    bool stable = false;
    json body;
    [[nodiscard]] bool admissible() const { return gauss_bonnet && angle_stability; }
};

inline ExactSection run_exact(const JobConfig& cfg) {
    const auto conf = cfg.configuration();
    const auto w = exact::weights_from_angles(conf);
    const exact::BundleModel model(conf);
    const auto flag = exact::canonical_flag(conf);
    const auto destab = exact::max_destabilizing_degree(flag, w, conf);

    ExactSection s;
    s.gauss_bonnet = exact::check_gauss_bonnet(conf);
    s.angle_stability = exact::check_angle_stability(conf);
    s.stable = destab.value < 0;

    json witness{{"kind", witness_name(destab.witness.kind)}, {"parabolic_degree", exact::to_string(destab.value)}};
    if (destab.witness.subbundle) witness["degree"] = destab.witness.subbundle->degree;
    json contained = json::array();
    for (auto i : destab.witness.contained) contained.push_back(i + 1);
    witness["contained_flag_lines"] = contained;

    const auto violation = exact::angle_stability_violation(conf);
    const auto phi = exact::normalize_flag(flag, conf);
    s.body = {
        {"gauss_bonnet", {{"holds", s.gauss_bonnet}, {"defect_sum", exact::to_string(exact::angle_defect_sum(conf))}}},
        {"angle_stability",
         {{"holds", s.angle_stability}, {"violating_point", violation ? json(*violation + 1) : json(nullptr)}}},
        {"parabolic_degree_total", exact::to_string(exact::parabolic_degree_total(model, w))},
        {"residue_sum", exact::to_string(residue_degree_check(w))},
        {"stable", s.stable},
        {"max_destabilizing", witness},
        {"flag_certificate", {{"canonical", true}, {"normalizer_is_identity", phi.is_scalar()}}},
        {"splitting_type", {1, static_cast<int>(conf.size()) - 1}},
        {"tangency_count", exact::tangency_count(-(static_cast<long>(conf.size()) - 2), 1,
                                                 static_cast<long>(conf.size()))},
        {"admissible", s.admissible()},
    };
    return s;
}

inline json monodromy_json(const MonodromyRep& rep, const std::vector<double>& angles) {
    const auto diag = check_monodromy(rep, angles);
    json traces = json::array(), expected = json::array(), gens = json::array(), order = json::array();
    for (std::size_t i = 0; i < rep.generators.size(); ++i) {
        traces.push_back(to_json(rep.generators[i].trace()));
        expected.push_back(expected_trace(angles[i]));
        gens.push_back(to_json(rep.generators[i]));
    }
    for (auto k : rep.order) order.push_back(k + 1);
    return {{"basepoint", to_json(rep.basepoint)},
            {"order", order},
            {"generators", gens},
            {"traces", traces},
            {"expected_traces", expected},
            {"max_det_error", diag.max_det_error},
            {"max_trace_error", diag.max_trace_error},
            {"product_error", diag.product_error}};
}

struct SolveSection {
    UnitarizingSolution solution;
    json body;
};

inline SolveSection run_solve(const JobConfig& cfg) {
    auto sol = solve_unitarizing_parameters(cfg.configuration(), cfg.solver);
    json beta = json::array(), seeds = json::array(), unitary = json::array();
    for (const auto& b : sol.data.accessory()) beta.push_back(to_json(b));
    for (const auto& r : sol.seeds) {
        json start = json::array(), result = json::array();
        for (const auto& z : r.start) start.push_back(to_json(z));
        for (const auto& z : r.result) result.push_back(to_json(z));
        seeds.push_back({{"start", start}, {"result", result}, {"defect", r.defect}, {"evaluations", r.evaluations}});
    }
    for (const auto& U : sol.certificate.unitary_generators) unitary.push_back(to_json(U));
    json body{{"accessory", beta},
              {"defect", sol.certificate.defect},
              {"hermitian_form", to_json(sol.certificate.form.matrix())},
              {"unitarity_constant", sol.certificate.unitarity_constant},
              {"unitary_generators", unitary},
              {"max_unitary_error", sol.certificate.max_unitary_error},
              {"commutator_norm", sol.certificate.commutator_norm},
              {"monodromy", monodromy_json(sol.monodromy, sol.data.angles())},
              {"seeds", seeds},
              {"agreeing_seeds", sol.agreeing_seeds}};
    return {std::move(sol), std::move(body)};
}

/// Persisted solver output (full double precision).
inline json solved_artifact(const JobConfig& cfg, const UnitarizingSolution& sol) {
    json poles = json::array(), beta = json::array();
    for (const auto& p : sol.data.poles()) poles.push_back(to_json(p));
    for (const auto& b : sol.data.accessory()) beta.push_back(to_json(b));
    return {{"config_hash", cfg.hash},
            {"poles", poles},
            {"angles", sol.data.angles()},
            {"accessory", beta},
            {"basepoint", to_json(sol.monodromy.basepoint)},
            {"hermitian_form", to_json(sol.certificate.form.matrix())},
            {"defect", sol.certificate.defect}};
}

struct LoadedSolution {
    SchwarzianData data;
    cplx basepoint;
    HermitianForm form;
};

/// Reads a solved artifact without enforcing the accessory constraints, so that tampered data can
/// still be verified (and fail).
inline LoadedSolution load_solved(const json& j) {
    try {
        std::vector<cplx> poles, beta;
        for (const auto& p : j.at("poles")) poles.push_back(complex_from_json(p));
        for (const auto& b : j.at("accessory")) beta.push_back(complex_from_json(b));
        auto angles = j.at("angles").get<std::vector<double>>();
        return {SchwarzianData::unchecked(poles, angles, beta), complex_from_json(j.at("basepoint")),
                HermitianForm::from_matrix(mat2_from_json(j.at("hermitian_form")))};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed solved artifact: ") + e.what());
    }
}

struct VerifySection {
    bool passed = false;
    json body;
};

inline json verification_json(const VerificationReport& v) {
    json angles = json::array();
    for (const auto& a : v.angles)
        angles.push_back({{"expected", a.expected},
                          {"from_trace", a.from_trace},
                          {"radii", a.estimate.radii},
                          {"raw", a.estimate.raw},
                          {"richardson_order", a.estimate.exponent},
                          {"estimate", a.estimate.estimate},
                          {"relative_error", a.relative_error}});
    return {{"curvature",
             {{"max_deviation", v.curvature.max_deviation},
              {"worst_point", to_json(v.curvature.worst)},
              {"points", v.curvature.points},
              {"step", v.tolerances.curvature_step},
              {"clearance", v.grid.clearance},
              {"tolerance", v.tolerances.curvature_tolerance},
              {"passed", v.curvature_ok()}}},
            {"cone_angles",
             {{"estimates", angles},
              {"tolerance", v.tolerances.angle_tolerance},
              {"passed", v.angles_ok()},
              {"note", "geodesic radius approximated along a fixed ray"}}},
            {"area",
             {{"estimate", v.area.area},
              {"coarse", v.area.coarse},
              {"target", v.area_target},
              {"tolerance", v.tolerances.area_tolerance},
              {"passed", v.area_ok()}}},
            {"path_independence",
             {{"residual", v.path_residual}, {"tolerance", v.tolerances.path_tolerance}, {"passed", v.path_ok()}}},
            {"transversality",
             {{"min_lambda", v.transversality.min_lambda},
              {"at", to_json(v.transversality.argmin)},
              {"floor", v.transversality.floor},
              {"passed", v.transversality.passed()}}},
            {"passed", v.passed()}};
}

inline VerifySection run_verify(const JobConfig& cfg, const LoadedSolution& s) {
    VerifySection out;
    const double residual = s.data.max_constraint_residual();
    MonodromyOptions mopt = cfg.solver.monodromy;
    mopt.basepoint = s.basepoint;
    const auto rep = monodromy_generators(s.data, mopt);
    const auto cert = certify(rep.generators, s.form);
    const bool trusted = residual <= SchwarzianData::constraint_tolerance && cert.defect < cfg.solver.defect_target;

    out.body = {{"constraint_residual", residual},
                {"defect", cert.defect},
                {"certificate_trusted", trusted},
                {"monodromy", monodromy_json(rep, s.data.angles())}};
    MetricContext ctx(s.data, s.basepoint, s.form, cfg.solver.monodromy.transport);
    try {
        const auto v = verify_metric(ctx, rep.generators, cfg.verify);
        out.body["metric"] = verification_json(v);
        out.passed = trusted && v.passed();
    } catch (const Error& e) {
        out.body["metric"] = {{"error", e.what()}, {"passed", false}};
        out.passed = false;
    }
    out.body["passed"] = out.passed;
    return out;
}

inline json provenance_json(const JobConfig& cfg) {
    json p{{"config_hash", cfg.hash},
           {"version", version_string},
           {"seed", cfg.solver.seed},
           {"transport_tol", cfg.solver.monodromy.transport.tol},
           {"points_input", cfg.point_labels}};
    json pts = json::array();
    for (const auto& z : cfg.points) pts.push_back(to_json(z));
    p["points_normalized"] = pts;
    if (cfg.mobius_center) p["mobius"] = {{"map", "z -> 1/(z - c)"}, {"c", to_json(*cfg.mobius_center)}};
    return p;
}

// ---------------------------------------------------------------------------------------------
// Grid export

struct GridExport {
    std::string csv;
    std::size_t rows = 0;
    std::vector<cplx> skipped;
};

inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline GridExport export_grid(const MetricContext& ctx, const GridOptions& g) {
    GridExport out;
    std::ostringstream os;
    os << "re_z,im_z,lambda,chart\n";
    for (int j = 0; j < g.height; ++j)
        for (int i = 0; i < g.width; ++i) {
            const double x =
                g.width == 1 ? g.lower.real() : g.lower.real() + (g.upper.real() - g.lower.real()) * i / (g.width - 1);
            const double y = g.height == 1 ? g.lower.imag()
                                           : g.lower.imag() + (g.upper.imag() - g.lower.imag()) * j / (g.height - 1);
            const cplx z{x, y};
            if (distance_to_set(z, ctx.poles()) < g.pole_skip) {
                out.skipped.push_back(z);
                continue;
            }
            const auto s = sample(ctx, z, 0.0);
            os << format_g17(x) << ',' << format_g17(y) << ',' << format_g17(s.lambda) << ',' << chart_name(s.chart)
               << '\n';
            ++out.rows;
        }
    out.csv = os.str();
    return out;
}

}  // namespace conemetric
