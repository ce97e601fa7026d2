#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "conemetric/pipeline.hpp"

namespace fs = std::filesystem;
using namespace conemetric;

namespace {

enum Exit { Ok = 0, Usage = 1, Inadmissible = 2, SolverFailure = 3, VerificationFailure = 4 };

struct Args {
    std::string config;
    std::string out = ".";
    std::string solved;
    std::string grid;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    bool json_stdout = false;
};

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << text;
}

void emit(const Args& a, const json& report) {
    const std::string text = report.dump(2) + "\n";
    write_file(fs::path(a.out) / "report.json", text);
    if (a.json_stdout) std::cout << text;
}

JobConfig load(const Args& a) {
    auto cfg = load_job_config(a.config);
    if (a.seed) cfg.solver.seed = *a.seed;
    if (a.tol) {
        if (!(*a.tol > 0.0)) throw ConfigError("--tol must be positive");
        cfg.solver.monodromy.transport.tol = *a.tol;
    }
    if (!a.grid.empty()) {
        const auto x = a.grid.find('x');
        if (x == std::string::npos) throw ConfigError("--grid expects WxH");
        try {
            cfg.grid.width = std::stoi(a.grid.substr(0, x));
            cfg.grid.height = std::stoi(a.grid.substr(x + 1));
        } catch (const std::exception&) {
            throw ConfigError("--grid expects WxH");
        }
        if (cfg.grid.width < 1 || cfg.grid.height < 1) throw ConfigError("--grid sizes must be positive");
    }
    return cfg;
}

json base_report(const JobConfig& cfg, const ExactSection& ex) {
    return {{"exact", ex.body}, {"provenance", provenance_json(cfg)}};
}

std::string solved_path(const Args& a) {
    return a.solved.empty() ? (fs::path(a.out) / "solved.json").string() : a.solved;
}

LoadedSolution read_solved(const Args& a) {
    const auto path = solved_path(a);
    std::ifstream in(path);
    if (!in) throw ConfigError("missing solved artifact " + path + " (run solve first or pass --solved)");
    try {
        return load_solved(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed solved artifact: ") + e.what());
    }
}

int cmd_check(const Args& a) {
    const auto cfg = load(a);
    const auto ex = run_exact(cfg);
    emit(a, base_report(cfg, ex));
    std::cerr << (ex.admissible() ? "admissible" : "inadmissible") << (ex.stable ? ", stable" : ", not stable")
              << "\n";
    return ex.admissible() ? Ok : Inadmissible;
}

int solve_into(const Args& a, const JobConfig& cfg, json& report) {
    const auto ex = run_exact(cfg);
    report = base_report(cfg, ex);
    if (!ex.admissible()) {
        report["solver"] = {{"refused", "inadmissible angles"}};
        return Inadmissible;
    }
    try {
        auto s = run_solve(cfg);
        report["solver"] = s.body;
        write_file(solved_path(a), solved_artifact(cfg, s.solution).dump(2) + "\n");
        std::cerr << "defect " << s.solution.certificate.defect << "\n";
        return Ok;
    } catch (const NotUnitarizable& e) {
        report["solver"] = {{"error", e.what()}, {"best_defect", e.best_defect}};
    } catch (const Error& e) {
        report["solver"] = {{"error", e.what()}};
    }
    return SolverFailure;
}

int cmd_solve(const Args& a) {
    const auto cfg = load(a);
    json report;
    const int code = solve_into(a, cfg, report);
    emit(a, report);
    return code;
}

int cmd_verify(const Args& a) {
    const auto cfg = load(a);
    const auto s = read_solved(a);
    json report = base_report(cfg, run_exact(cfg));
    const auto v = run_verify(cfg, s);
    report["verification"] = v.body;
    emit(a, report);
    std::cerr << (v.passed ? "verification passed" : "verification failed") << "\n";
    return v.passed ? Ok : VerificationFailure;
}

int cmd_sample(const Args& a) {
    const auto cfg = load(a);
    const auto s = read_solved(a);
    const MetricContext ctx(s.data, s.basepoint, s.form, cfg.solver.monodromy.transport);
    const auto g = export_grid(ctx, cfg.grid);
    write_file(fs::path(a.out) / "grid.csv", g.csv);
    json skipped = json::array();
    for (const auto& z : g.skipped) skipped.push_back(to_json(z));
    json report = base_report(cfg, run_exact(cfg));
    report["grid"] = {{"width", cfg.grid.width}, {"height", cfg.grid.height}, {"rows", g.rows}, {"skipped", skipped}};
    if (!g.skipped.empty()) report["grid"]["note"] = "grid nodes within 1e-6 of a cone point were dropped";
    emit(a, report);
    return Ok;
}

int cmd_report(const Args& a) {
    const auto cfg = load(a);
    json report;
    int code = solve_into(a, cfg, report);
    if (code == Ok) {
        const auto v = run_verify(cfg, read_solved(a));
        report["verification"] = v.body;
        if (!v.passed) code = VerificationFailure;
    }
    emit(a, report);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spherical cone metrics: exact checks, unitarizing solve, metric verification"};
    app.require_subcommand(1);
    Args a;
    auto common = [&](CLI::App* sub, bool needs_solved) {
        sub->add_option("--config", a.config, "Job configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", a.out, "Output directory");
        sub->add_option("--seed", a.seed, "Solver seed");
        sub->add_option("--tol", a.tol, "Transport tolerance");
        sub->add_option("--grid", a.grid, "Grid size WxH");
        sub->add_flag("--json", a.json_stdout, "Print the report to stdout");
        if (needs_solved) sub->add_option("--solved", a.solved, "Solved artifact (default OUT/solved.json)");
    };
    auto* check = app.add_subcommand("check", "Exact admissibility and stability checks");
    auto* solve = app.add_subcommand("solve", "Solve for unitarizing accessory parameters");
    auto* verify = app.add_subcommand("verify", "Verify the metric of a solved artifact");
    auto* sample = app.add_subcommand("sample", "Export the conformal factor on a grid");
    auto* report = app.add_subcommand("report", "Check, solve and verify");
    common(check, false);
    common(solve, true);
    common(verify, true);
    common(sample, true);
    common(report, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Ok : Usage;
    }
    try {
        if (*check) return cmd_check(a);
        if (*solve) return cmd_solve(a);
        if (*verify) return cmd_verify(a);
        if (*sample) return cmd_sample(a);
        if (*report) return cmd_report(a);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Usage;
    } catch (const exact::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Usage;
    } catch (const exact::InvalidConfiguration& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Inadmissible;
    } catch (const exact::AngleOutOfRange& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Inadmissible;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return SolverFailure;
    }
    return Usage;
}
