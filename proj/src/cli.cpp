#include "pgsim/cli.hpp"

#include "pgsim/pipeline.hpp"
#include "pgsim/plot.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace pgsim {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Fit:
        case ErrorCode::Integration:
        case ErrorCode::NotPositiveDefinite:
        case ErrorCode::UndefinedCorrelation:
            return kExitNumerical;
        default:
            return kExitConfig;
    }
}

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> nodes;
    std::optional<int> ar_cap;
    std::optional<double> cdf_gap;
    std::optional<double> acs_tolerance;
    std::optional<double> cross_tolerance;
    std::optional<double> atom_se;

    void apply(ModelSpec& spec) const {
        if (seed) spec.seed = *seed;
        if (nodes) spec.config.ctf.nodes = *nodes;
        if (ar_cap) spec.config.ar_cap = *ar_cap;
        if (cdf_gap) spec.thresholds.cdf_gap = *cdf_gap;
        if (acs_tolerance) spec.thresholds.acs_tolerance = *acs_tolerance;
        if (cross_tolerance) spec.thresholds.cross_tolerance = *cross_tolerance;
        if (atom_se) spec.thresholds.atom_se = *atom_se;
    }
};

struct Config {
    std::string spec;
    std::string out = ".";
    std::string series;
    std::string data;
    std::string column;
    std::string marginal_family;
    std::string acs_family;
    std::string method = "lmoments";
    std::string format = "csv";
    bool mixed = false;
    double zero_threshold = 0.0;
    int max_lag = 50;
    bool svg = false;
    Overrides overrides;
};

void add_threshold_flags(CLI::App* app, Overrides& o) {
    app->add_option("--cdf-gap", o.cdf_gap, "Max-abs cdf gap threshold");
    app->add_option("--acs-tol", o.acs_tolerance, "ACS tolerance");
    app->add_option("--cross-tol", o.cross_tolerance, "Cross-correlation tolerance");
    app->add_option("--atom-se", o.atom_se, "Atom frequency tolerance in standard errors");
}

void add_numeric_flags(CLI::App* app, Overrides& o) {
    app->add_option("--nodes", o.nodes, "Gauss-Legendre nodes per panel")->check(CLI::Range(2, 64));
    app->add_option("--ar-cap", o.ar_cap, "Largest AR order")->check(CLI::PositiveNumber);
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) fail(ErrorCode::Input, "cannot create output directory " + dir);
    return p;
}

std::ofstream open_file(const fs::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Input, "cannot write " + path.string());
    return out;
}

void print_report_summary(std::ostream& out, const VerificationReport& report) {
    for (const auto& p : report.processes) {
        out << p.label << (p.season == "all" ? "" : " [" + p.season + "]") << ": cdf gap " << p.cdf_gap
            << ", ACS max dev " << p.acs_max_abs << (p.passed() ? "  ok" : "  FAIL") << '\n';
    }
    for (const auto& c : report.cross) {
        out << "cross" << (c.season == "all" ? "" : " [" + c.season + "]") << ": K0 max dev " << c.max_abs0
            << ", K1 max dev " << c.max_abs1 << (c.pass ? "  ok" : "  FAIL") << '\n';
    }
    out << (report.passed() ? "verification passed" : "verification FAILED") << '\n';
}

int cmd_simulate(const Config& cfg, std::ostream& out) {
    ModelSpec spec = read_model_spec(cfg.spec);
    cfg.overrides.apply(spec);
    RecipeOptions options;
    options.out_dir = prepare_out(cfg.out).string();
    options.svg = cfg.svg;
    options.json_series = cfg.format == "json";
    const RecipeResult result = run_recipe(spec, options);
    out << "wrote " << spec.n << " steps of " << spec.labels().size() << " process(es) to " << options.out_dir << '\n';
    for (const auto& s : result.plan.seasons) {
        for (const auto& u : s.processes) {
            if (std::holds_alternative<SumAr1Model>(u.generator) && u.generator_error > spec.thresholds.acs_tolerance) {
                out << "note: " << u.label << ": sum-of-AR(1) fit misses the parent ACS by " << u.generator_error
                    << "; a mixture of AR(1) terms cannot follow a structure that is not log-convex\n";
            }
        }
    }
    print_report_summary(out, result.report);
    return result.report.passed() ? kExitOk : kExitVerification;
}

int cmd_plan(const Config& cfg, std::ostream& out) {
    ModelSpec spec = read_model_spec(cfg.spec);
    cfg.overrides.apply(spec);
    const Plan p = plan(spec);
    const fs::path dir = prepare_out(cfg.out);
    auto f = open_file(dir / "plan.json");
    f << to_json(p).dump(2) << '\n';
    for (const auto& s : p.seasons) {
        for (const auto& u : s.processes) {
            out << u.label << ": " << ctf_family_name(u.curve.family) << " curve";
            if (u.curve.family != CtfFamily::Identity) out << " (b = " << u.curve.b << ", c = " << u.curve.c << ")";
            if (const auto* ar = std::get_if<ArModel>(&u.generator)) out << ", AR(" << ar->order() << ")";
            if (const auto* sum = std::get_if<SumAr1Model>(&u.generator)) {
                out << ", " << sum->components.size() << " AR(1) components";
            }
            out << '\n';
        }
        if (s.cross) out << "MAR(1) over " << s.cross->mar.dimension() << " processes\n";
    }
    return kExitOk;
}

int cmd_ctf(const Config& cfg, std::ostream& out) {
    const Json j = read_json_file(cfg.spec);
    require(j.is_object() && j.contains("marginal"), ErrorCode::Input, "ctf spec needs a 'marginal'");
    const Marginal mi = marginal_from_json(j.at("marginal"));
    std::optional<Marginal> mk;
    if (j.contains("other")) mk = marginal_from_json(j.at("other"));
    CtfOptions options;
    if (cfg.overrides.nodes) options.nodes = *cfg.overrides.nodes;
    const GridKind kind = mk ? GridKind::Cross : GridKind::Auto;
    const CtfFamily family = j.contains("family") ? ctf_family_from_name(j.at("family").get<std::string>())
                                                  : default_ctf_family(mi, mk);

    const TransformGrid grid = build_grid(mi, mk, kind, options);
    const CtfCurve curve = fit_ctf(grid, family);
    const fs::path dir = prepare_out(cfg.out);
    if (cfg.format == "json") {
        auto f = open_file(dir / "grid.json");
        f << to_json(grid).dump(2) << '\n';
    } else {
        auto f = open_file(dir / "grid.csv");
        write_grid_csv(f, grid);
    }
    {
        auto f = open_file(dir / "curve.json");
        f << to_json(curve).dump(2) << '\n';
    }
    {
        auto f = open_file(dir / "curve.csv");
        write_curve_csv(f, curve);
    }
    if (cfg.svg) {
        LineSeries pts{"grid", {}, {}}, fitted{"fitted curve", {}, {}};
        for (const auto& g : grid.points) {
            pts.x.push_back(g.rho_x);
            pts.y.push_back(g.rho_z);
        }
        const double limit = curve.rho_max ? *curve.rho_max : 1.0;
        for (int k = 0; k <= 100; ++k) {
            fitted.x.push_back(limit * k / 100.0);
            fitted.y.push_back(ctf_apply(curve, limit * k / 100.0));
        }
        auto f = open_file(dir / "curve.svg");
        write_svg_chart(f, "transformation curve", "rho_X", "rho_Z", {pts, fitted});
    }

    out << std::setprecision(6);
    for (const auto& g : grid.points) out << "rho_z " << g.rho_z << "  rho_x " << g.rho_x << '\n';
    out << ctf_family_name(curve.family) << " curve";
    if (curve.family != CtfFamily::Identity) out << ": b = " << curve.b << ", c = " << curve.c;
    out << ", residual RMS " << curve.residual_rms << '\n';
    if (curve.rho_max) out << "rho_max = " << *curve.rho_max << '\n';
    if (!curve.warning.empty()) out << "warning: " << curve.warning << '\n';
    return kExitOk;
}

int cmd_fit(const Config& cfg, std::ostream& out) {
    const SeriesTable table = read_series_csv_file(cfg.data);
    require(table.rows() > 0, ErrorCode::Input, "data file has no rows");
    const std::vector<double>& data = cfg.column.empty() ? table.columns.front() : table.column(cfg.column);
    const fs::path dir = prepare_out(cfg.out);
    Json result;
    out << std::setprecision(6);

    if (!cfg.marginal_family.empty()) {
        FitOptions options;
        options.method = cfg.method == "mle" ? FitMethod::MaximumLikelihood : FitMethod::LMoments;
        options.mixed = cfg.mixed;
        options.zero_threshold = cfg.zero_threshold;
        const MarginalFit fit = fit_marginal(data, family_from_name(cfg.marginal_family), options);
        result["marginal"] = to_json(fit.model);
        result["marginal_objective"] = fit.objective;
        result["marginal_n_used"] = fit.n_used;
        out << "marginal: " << describe(fit.model) << " (objective " << fit.objective << ")\n";
    }

    std::vector<std::string> warnings;
    const std::vector<double> emp = empirical_acs(data, cfg.max_lag, &warnings);
    std::optional<AcsFit> acs;
    if (!cfg.acs_family.empty()) {
        acs = fit_acs(emp, acs_family_from_name(cfg.acs_family));
        result["acs"] = to_json(acs->model);
        result["acs_rms"] = acs->rms;
        result["acs_max_abs"] = acs->max_abs;
        if (!acs->note.empty()) result["acs_note"] = acs->note;
        out << "acs: " << acs->model.describe() << " (rms " << acs->rms << ", max abs " << acs->max_abs << ")\n";
        if (!acs->note.empty()) out << "note: " << acs->note << '\n';
    }
    if (!warnings.empty()) result["warnings"] = warnings;
    for (const auto& w : warnings) out << "warning: " << w << '\n';

    {
        auto f = open_file(dir / "fit.json");
        f << result.dump(2) << '\n';
    }
    auto f = open_file(dir / "acs.csv");
    f << "lag,empirical" << (acs ? ",fitted" : "") << '\n';
    for (std::size_t k = 1; k < emp.size(); ++k) {
        f << k << ',' << emp[k];
        if (acs) f << ',' << acs->model(static_cast<double>(k));
        f << '\n';
    }
    return kExitOk;
}

int cmd_verify(const Config& cfg, std::ostream& out) {
    ModelSpec spec = read_model_spec(cfg.spec);
    cfg.overrides.apply(spec);
    const SeriesTable series = read_series_csv_file(cfg.series);
    const VerificationReport report = verify(spec, series);
    const fs::path dir = prepare_out(cfg.out);
    auto f = open_file(dir / "report.json");
    f << to_json(report).dump(2) << '\n';
    print_report_summary(out, report);
    return report.passed() ? kExitOk : kExitVerification;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Parent-Gaussian simulation of processes with arbitrary marginals and correlation structures"};
    app.require_subcommand(1);
    Config cfg;

    auto* simulate = app.add_subcommand("simulate", "Plan, synthesize and verify a spec; write all artifacts");
    simulate->add_option("--spec", cfg.spec, "Spec JSON")->required();
    simulate->add_option("--out", cfg.out, "Output directory");
    simulate->add_option("--seed", cfg.overrides.seed, "Master seed (overrides the spec)");
    simulate->add_option("--format", cfg.format, "Series format")->check(CLI::IsMember({"csv", "json"}));
    simulate->add_flag("--svg", cfg.svg, "Also write SVG charts");
    add_numeric_flags(simulate, cfg.overrides);
    add_threshold_flags(simulate, cfg.overrides);

    auto* plan_cmd = app.add_subcommand("plan", "Fit transformation curves and generators only");
    plan_cmd->add_option("--spec", cfg.spec, "Spec JSON")->required();
    plan_cmd->add_option("--out", cfg.out, "Output directory");
    add_numeric_flags(plan_cmd, cfg.overrides);

    auto* ctf = app.add_subcommand("ctf", "Evaluate the transformation grid and fit a curve");
    ctf->add_option("--spec", cfg.spec, "JSON with 'marginal', optional 'other' and 'family'")->required();
    ctf->add_option("--out", cfg.out, "Output directory");
    ctf->add_option("--nodes", cfg.overrides.nodes, "Gauss-Legendre nodes per panel")->check(CLI::Range(2, 64));
    ctf->add_option("--format", cfg.format, "Grid format")->check(CLI::IsMember({"csv", "json"}));
    ctf->add_flag("--svg", cfg.svg, "Also write an SVG chart");

    auto* fit = app.add_subcommand("fit", "Fit a marginal and an ACS to a data column");
    fit->add_option("--data", cfg.data, "CSV with a header row")->required();
    fit->add_option("--column", cfg.column, "Column name (default: first)");
    fit->add_option("--marginal", cfg.marginal_family, "Marginal family");
    fit->add_option("--acs", cfg.acs_family, "ACS family");
    fit->add_option("--method", cfg.method, "Marginal fit method")->check(CLI::IsMember({"lmoments", "mle"}));
    fit->add_flag("--mixed", cfg.mixed, "Fit a zero atom plus a continuous part");
    fit->add_option("--zero-threshold", cfg.zero_threshold, "Values at or below this count as zero");
    fit->add_option("--max-lag", cfg.max_lag, "Largest lag of the empirical ACS")->check(CLI::Range(3, 100000));
    fit->add_option("--out", cfg.out, "Output directory");

    auto* verify_cmd = app.add_subcommand("verify", "Verify a series CSV against a spec");
    verify_cmd->add_option("--spec", cfg.spec, "Spec JSON")->required();
    verify_cmd->add_option("--series", cfg.series, "Series CSV")->required();
    verify_cmd->add_option("--out", cfg.out, "Output directory");
    add_threshold_flags(verify_cmd, cfg.overrides);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "config: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(cfg, out);
        if (plan_cmd->parsed()) return cmd_plan(cfg, out);
        if (ctf->parsed()) return cmd_ctf(cfg, out);
        if (fit->parsed()) return cmd_fit(cfg, out);
        return cmd_verify(cfg, out);
    } catch (const Error& e) {
        err << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "internal: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace pgsim
