#include "pgsim/pipeline.hpp"

#include "pgsim/error.hpp"
#include "pgsim/plot.hpp"
#include "pgsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace pgsim {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// spec parsing

template <class T>
T value_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::Parse, std::string("field '") + key + "' has the wrong type");
    }
}

FitMethod fit_method_from_name(const std::string& name) {
    if (name == "lmoments") return FitMethod::LMoments;
    if (name == "mle") return FitMethod::MaximumLikelihood;
    fail(ErrorCode::Input, "unknown fit method '" + name + "' (lmoments or mle)");
}

// Step 1 of the recipe: marginal and ACS fitted from a data file.
void fit_process_from_data(ProcessSpec& p, const Json& fit, const std::string& base_dir) {
    const auto data_path = value_or<std::string>(fit, "data", "");
    require(!data_path.empty(), ErrorCode::Input, "process '" + p.label + "': fit block needs 'data'");
    fs::path path(data_path);
    if (path.is_relative()) path = fs::path(base_dir) / path;
    const SeriesTable table = read_series_csv_file(path.string());
    const std::string column = value_or<std::string>(fit, "column", "");
    const std::vector<double>& data = column.empty()
        ? (std::find(table.names.begin(), table.names.end(), p.label) != table.names.end() ? table.column(p.label)
                                                                                           : table.columns.front())
        : table.column(column);

    if (fit.contains("marginal_family")) {
        FitOptions options;
        options.method = fit_method_from_name(value_or<std::string>(fit, "method", "lmoments"));
        options.mixed = value_or<bool>(fit, "mixed", false);
        options.zero_threshold = value_or<double>(fit, "zero_threshold", 0.0);
        p.marginal = fit_marginal(data, family_from_name(fit.at("marginal_family").get<std::string>()), options).model;
    }
    if (fit.contains("acs_family")) {
        const int max_lag = value_or<int>(fit, "max_lag", 50);
        const auto emp = empirical_acs(data, max_lag);
        p.acs = fit_acs(emp, acs_family_from_name(fit.at("acs_family").get<std::string>())).model;
    }
}

ProcessSpec process_from_json(const Json& j, const std::string& base_dir) {
    require(j.is_object(), ErrorCode::Parse, "each process must be a JSON object");
    const auto label = value_or<std::string>(j, "label", "");
    require(!label.empty(), ErrorCode::Input, "every process needs a non-empty label");

    std::optional<Marginal> marginal;
    if (j.contains("marginal")) {
        Json mj = j.at("marginal");
        if (j.contains("p0") && !mj.contains("p0")) mj["p0"] = j.at("p0");
        marginal = marginal_from_json(mj);
    }
    ProcessSpec p{label, marginal.value_or(MarginalModel::gaussian(0.0, 1.0)), std::nullopt, {}, std::nullopt};
    if (j.contains("acs")) p.acs = correlation_from_json(j.at("acs"));
    if (j.contains("fit")) fit_process_from_data(p, j.at("fit"), base_dir);
    else require(marginal.has_value(), ErrorCode::Input, "process '" + label + "' needs a marginal");

    if (j.contains("generator")) {
        const Json& g = j.at("generator");
        const auto type = value_or<std::string>(g, "type", "ar");
        if (type == "ar") {
            p.generator = {GeneratorKind::ArP, value_or<int>(g, "order", 0)};
        } else if (type == "sum_ar1") {
            p.generator = {GeneratorKind::SumAr1, value_or<int>(g, "components", 0)};
        } else {
            fail(ErrorCode::Input, "process '" + label + "': unknown generator type '" + type + "'");
        }
        require(p.generator.param >= 0, ErrorCode::Input, "process '" + label + "': generator size must be >= 0");
    }
    if (j.contains("ctf")) p.ctf_family = ctf_family_from_name(j.at("ctf").get<std::string>());
    return p;
}

CrossTargets cross_from_json(const Json& j, std::size_t n) {
    require(j.contains("K0") && j.contains("K1"), ErrorCode::Input, "cross targets need K0 and K1");
    CrossTargets c{matrix_from_json(j.at("K0")), matrix_from_json(j.at("K1"))};
    const auto dim = static_cast<Eigen::Index>(n);
    require(c.K0.rows() == dim && c.K0.cols() == dim && c.K1.rows() == dim && c.K1.cols() == dim, ErrorCode::Input,
            "cross matrices must be " + std::to_string(n) + " x " + std::to_string(n));
    for (Eigen::Index i = 0; i < dim; ++i) {
        require(std::abs(c.K0(i, i) - 1.0) < 1e-9, ErrorCode::Input, "K0 must have a unit diagonal");
        for (Eigen::Index k = 0; k < dim; ++k) {
            require(std::abs(c.K0(i, k) - c.K0(k, i)) < 1e-9, ErrorCode::Input, "K0 must be symmetric");
            require(std::abs(c.K0(i, k)) <= 1.0 && std::abs(c.K1(i, k)) <= 1.0, ErrorCode::Input,
                    "cross-correlation targets must lie in [-1, 1]");
        }
    }
    return c;
}

SeasonSpec season_from_json(const Json& j, const std::string& base_dir) {
    SeasonSpec s;
    s.name = value_or<std::string>(j, "name", "all");
    s.length = value_or<std::size_t>(j, "length", 1);
    require(s.length >= 1, ErrorCode::Input, "season length must be >= 1");
    require(j.contains("processes") && j.at("processes").is_array() && !j.at("processes").empty(), ErrorCode::Input,
            "season '" + s.name + "' needs a non-empty 'processes' array");
    for (const auto& pj : j.at("processes")) s.processes.push_back(process_from_json(pj, base_dir));
    if (j.contains("cross")) s.cross = cross_from_json(j.at("cross"), s.processes.size());
    return s;
}

void validate(const ModelSpec& spec) {
    require(!spec.seasons.empty(), ErrorCode::Input, "spec has no processes");
    const auto labels = spec.labels();
    require(std::set<std::string>(labels.begin(), labels.end()).size() == labels.size(), ErrorCode::Input,
            "process labels must be unique");
    const bool multivariate = spec.seasons.front().cross.has_value();
    for (const auto& s : spec.seasons) {
        require(s.processes.size() == labels.size(), ErrorCode::Input,
                "season '" + s.name + "' has a different number of processes");
        for (std::size_t i = 0; i < labels.size(); ++i) {
            require(s.processes[i].label == labels[i], ErrorCode::Input,
                    "season '" + s.name + "' lists processes in a different order or with different labels");
            if (!s.cross) {
                require(s.processes[i].acs.has_value(), ErrorCode::Input,
                        "process '" + labels[i] + "' needs an 'acs' target");
            }
            if (spec.seasons.size() > 1) {
                require(s.processes[i].generator.kind == GeneratorKind::ArP, ErrorCode::Input,
                        "the sum-of-AR(1) generator cannot switch seasons; use an AR generator");
            }
        }
        require(s.cross.has_value() == multivariate, ErrorCode::Input,
                "either every season or no season must carry cross targets");
    }
    require(spec.thresholds.acs_lags >= 1, ErrorCode::Input, "acs_lags must be >= 1");
    require(spec.config.cutoff > 0.0 && spec.config.cutoff < 1.0, ErrorCode::Input, "cutoff must lie in (0, 1)");
    require(spec.config.ar_cap >= 1, ErrorCode::Input, "ar_cap must be >= 1");
}

// ---------------------------------------------------------------------------
// season layout

std::vector<std::uint32_t> season_schedule(const std::vector<SeasonSpec>& seasons, std::size_t n) {
    std::vector<std::uint32_t> out(n, 0);
    if (seasons.size() == 1) return out;
    std::size_t s = 0, left = seasons[0].length;
    for (std::size_t t = 0; t < n; ++t) {
        if (left == 0) {
            s = (s + 1) % seasons.size();
            left = seasons[s].length;
        }
        out[t] = static_cast<std::uint32_t>(s);
        --left;
    }
    return out;
}

struct Block {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Maximal runs of consecutive time steps in season s.
std::vector<Block> season_blocks(const std::vector<std::uint32_t>& schedule, std::uint32_t s) {
    std::vector<Block> out;
    for (std::size_t t = 0; t < schedule.size();) {
        if (schedule[t] != s) {
            ++t;
            continue;
        }
        std::size_t e = t;
        while (e < schedule.size() && schedule[e] == s) ++e;
        out.push_back({t, e});
        t = e;
    }
    return out;
}

// Pearson correlation of the pairs (x(t), y(t + lag)) with both ends in one block.
double block_lagged_correlation(std::span<const double> x, std::span<const double> y, const std::vector<Block>& blocks,
                                int lag) {
    const auto L = static_cast<std::size_t>(lag);
    double n = 0, sx = 0, sy = 0;
    for (const auto& b : blocks)
        for (std::size_t t = b.begin; t + L < b.end; ++t) {
            sx += x[t];
            sy += y[t + L];
            ++n;
        }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mx = sx / n, my = sy / n;
    double cxy = 0, cxx = 0, cyy = 0;
    for (const auto& b : blocks)
        for (std::size_t t = b.begin; t + L < b.end; ++t) {
            const double dx = x[t] - mx, dy = y[t + L] - my;
            cxy += dx * dy;
            cxx += dx * dx;
            cyy += dy * dy;
        }
    if (cxx <= 0 || cyy <= 0) return std::numeric_limits<double>::quiet_NaN();
    return cxy / std::sqrt(cxx * cyy);
}

// ---------------------------------------------------------------------------
// verification helpers

std::vector<std::pair<double, double>> expected_atoms(const Marginal& m) {
    std::vector<std::pair<double, double>> out;
    if (const auto* mm = std::get_if<MixedMarginal>(&m)) {
        out.emplace_back(0.0, mm->p0());
        return out;
    }
    const auto& d = std::get<MarginalModel>(m);
    if (!d.discrete()) return out;
    if (d.family() == Family::Bernoulli) {
        const double p0 = d.params()[0];
        out.emplace_back(0.0, p0);
        out.emplace_back(1.0, 1.0 - p0);
        return out;
    }
    double prev = 0.0;
    for (int k = 0; k <= 1000; ++k) {
        const double c = d.cdf(k);
        if (c - prev >= 0.01) out.emplace_back(k, c - prev);
        prev = c;
        if (1.0 - c < 0.01) break;
    }
    return out;
}

AtomCheck check_atom(std::span<const double> x, double value, double expected, double se_factor) {
    const std::size_t n = x.size();
    std::size_t hits = 0;
    for (double v : x) hits += v == value;
    AtomCheck a;
    a.value = value;
    a.expected = expected;
    a.observed = static_cast<double>(hits) / static_cast<double>(n);
    double se = std::sqrt(expected * (1.0 - expected) / static_cast<double>(n));
    constexpr std::size_t kBatches = 100;
    if (n >= 10 * kBatches) {
        const std::size_t size = n / kBatches;
        double s = 0, ss = 0;
        for (std::size_t b = 0; b < kBatches; ++b) {
            std::size_t h = 0;
            for (std::size_t t = b * size; t < (b + 1) * size; ++t) h += x[t] == value;
            const double f = static_cast<double>(h) / static_cast<double>(size);
            s += f;
            ss += f * f;
        }
        const double mean = s / kBatches;
        const double var = std::max(0.0, (ss - kBatches * mean * mean) / (kBatches - 1));
        se = std::max(se, std::sqrt(var / kBatches));
    }
    a.standard_error = se;
    a.pass = std::abs(a.observed - expected) <= se_factor * se;
    return a;
}

std::vector<double> gather(std::span<const double> x, const std::vector<Block>& blocks) {
    std::vector<double> out;
    for (const auto& b : blocks) out.insert(out.end(), x.begin() + b.begin, x.begin() + b.end);
    return out;
}

std::string file_stem(const std::string& s) {
    std::string out;
    for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ? ch : '_';
    return out;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Input, "cannot write " + path.string());
    return out;
}

Error with_step(const std::string& step, const Error& e) {
    return Error(e.code(), step + ": " + e.what());
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> ModelSpec::labels() const {
    std::vector<std::string> out;
    if (seasons.empty()) return out;
    for (const auto& p : seasons.front().processes) out.push_back(p.label);
    return out;
}

ModelSpec model_spec_from_json(const Json& j, const std::string& base_dir) {
    require(j.is_object(), ErrorCode::Parse, "spec must be a JSON object");
    ModelSpec spec;
    if (j.contains("seasons")) {
        require(!j.contains("processes"), ErrorCode::Input, "give either 'processes' or 'seasons', not both");
        for (const auto& sj : j.at("seasons")) spec.seasons.push_back(season_from_json(sj, base_dir));
    } else {
        Json single = {{"name", "all"}, {"length", 1}};
        if (j.contains("processes")) single["processes"] = j.at("processes");
        if (j.contains("cross")) single["cross"] = j.at("cross");
        spec.seasons.push_back(season_from_json(single, base_dir));
    }
    spec.n = value_or<std::size_t>(j, "n", 0);
    spec.seed = value_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("thresholds")) {
        const Json& t = j.at("thresholds");
        spec.thresholds.cdf_gap = value_or(t, "cdf_gap", spec.thresholds.cdf_gap);
        spec.thresholds.atom_se = value_or(t, "atom_se", spec.thresholds.atom_se);
        spec.thresholds.acs_tolerance = value_or(t, "acs_tolerance", spec.thresholds.acs_tolerance);
        spec.thresholds.acs_lags = value_or(t, "acs_lags", spec.thresholds.acs_lags);
        spec.thresholds.cross_tolerance = value_or(t, "cross_tolerance", spec.thresholds.cross_tolerance);
    }
    if (j.contains("config")) {
        const Json& c = j.at("config");
        spec.config.cutoff = value_or(c, "cutoff", spec.config.cutoff);
        spec.config.ar_cap = value_or(c, "ar_cap", spec.config.ar_cap);
        spec.config.sum_ar1_lags = value_or(c, "sum_ar1_lags", spec.config.sum_ar1_lags);
        spec.config.ctf.nodes = value_or(c, "nodes", spec.config.ctf.nodes);
        spec.config.ctf.panel_width = value_or(c, "panel_width", spec.config.ctf.panel_width);
    }
    validate(spec);
    return spec;
}

ModelSpec read_model_spec(const std::string& path) {
    const Json j = read_json_file(path);
    const auto parent = fs::path(path).parent_path();
    return model_spec_from_json(j, parent.empty() ? "." : parent.string());
}

// ---------------------------------------------------------------------------
// planning

namespace {

void plan_auto_curve(UnivariatePlan& plan, const ProcessSpec& spec, const PlanConfig& config) {
    require(has_finite_variance(spec.marginal), ErrorCode::InfiniteMoment,
            "process '" + spec.label + "': marginal variance is infinite");
    const CtfFamily family = spec.ctf_family.value_or(default_ctf_family(spec.marginal, std::nullopt));
    require(family != CtfFamily::Cross, ErrorCode::Input,
            "process '" + spec.label + "': the Cross curve is for pairs of marginals");
    plan.grid = build_grid(spec.marginal, std::nullopt, GridKind::Auto, config.ctf);
    plan.curve = fit_ctf(plan.grid, family);
}

}  // namespace

UnivariatePlan plan_univariate(const ProcessSpec& spec, const PlanConfig& config) {
    require(spec.acs.has_value(), ErrorCode::Input, "process '" + spec.label + "' has no ACS target");
    UnivariatePlan plan{spec.label, spec.marginal, spec.acs, {}, {}, {}, std::monostate{}, 0.0};
    plan_auto_curve(plan, spec, config);
    const CorrelationModel& acs = *spec.acs;

    if (spec.generator.kind == GeneratorKind::SumAr1) {
        plan.pgacs = ctf_apply(plan.curve, acs, config.sum_ar1_lags);
        const int k = spec.generator.param > 0 ? spec.generator.param : 4;
        SumAr1Fit fit = fit_sum_ar1(plan.pgacs, k);
        plan.generator = std::move(fit.model);
        plan.generator_error = fit.max_abs_error;
        return plan;
    }

    if (spec.generator.param > 0) {
        plan.pgacs = ctf_apply(plan.curve, acs, spec.generator.param);
    } else {
        for (int tau = 1; tau <= config.ar_cap; ++tau) {
            const double r = ctf_apply(plan.curve, acs(tau));
            if (r < config.cutoff) break;
            plan.pgacs.push_back(r);
        }
        if (plan.pgacs.empty()) plan.pgacs.push_back(ctf_apply(plan.curve, acs(1.0)));
    }
    ArModel ar = fit_ar(plan.pgacs);
    std::size_t q = ar.coeffs.size();
    while (q > 1 && std::abs(ar.coeffs[q - 1]) < 1e-10) --q;
    if (q < ar.coeffs.size()) ar = fit_ar(std::span<const double>(plan.pgacs).first(q));
    plan.generator = std::move(ar);
    return plan;
}

SeasonPlan plan_multivariate(const SeasonSpec& season, const PlanConfig& config) {
    require(season.cross.has_value(), ErrorCode::Input, "season '" + season.name + "' has no cross targets");
    const CrossTargets& targets = *season.cross;
    const std::size_t n = season.processes.size();
    SeasonPlan out{season.name, season.length, {}, MultivariatePlan{}};
    MultivariatePlan& mv = *out.cross;
    mv.KX0 = targets.K0;
    mv.KX1 = targets.K1;
    mv.KZ0 = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    mv.KZ1 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

    for (std::size_t i = 0; i < n; ++i) {
        const ProcessSpec& p = season.processes[i];
        const auto ii = static_cast<Eigen::Index>(i);
        if (p.acs) {
            require(std::abs((*p.acs)(1.0) - targets.K1(ii, ii)) <= 1e-3, ErrorCode::Input,
                    "process '" + p.label + "': lag-1 of its ACS differs from the K1 diagonal");
        }
        UnivariatePlan up{p.label, p.marginal, p.acs, {}, {}, {}, std::monostate{}, 0.0};
        plan_auto_curve(up, p, config);
        up.pgacs = {ctf_apply(up.curve, targets.K1(ii, ii))};
        mv.KZ1(ii, ii) = up.pgacs.front();
        out.processes.push_back(std::move(up));
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
            const auto& pi = season.processes[i];
            const auto& pk = season.processes[k];
            const auto ii = static_cast<Eigen::Index>(i), kk = static_cast<Eigen::Index>(k);
            const double x0 = targets.K0(ii, kk), x1 = targets.K1(ii, kk), x2 = targets.K1(kk, ii);
            PairPlan pair{i, k, {}, {}};
            const bool all_zero = x0 == 0.0 && x1 == 0.0 && x2 == 0.0;
            if (!all_zero) {
                pair.grid = build_grid(pi.marginal, pk.marginal, GridKind::Cross, config.ctf);
                pair.curve = fit_ctf(pair.grid, default_ctf_family(pi.marginal, pk.marginal));
                try {
                    mv.KZ0(ii, kk) = mv.KZ0(kk, ii) = ctf_apply(pair.curve, x0);
                    mv.KZ1(ii, kk) = ctf_apply(pair.curve, x1);
                    mv.KZ1(kk, ii) = ctf_apply(pair.curve, x2);
                } catch (const Error& e) {
                    std::ostringstream os;
                    os << "pair (" << pi.label << ", " << pk.label << "): " << e.what();
                    throw Error(e.code(), os.str());
                }
            }
            mv.pairs.push_back(std::move(pair));
        }
    }
    mv.mar = fit_mar1(mv.KZ0, mv.KZ1);
    return out;
}

Plan plan(const ModelSpec& spec) {
    validate(spec);
    Plan out;
    for (const auto& s : spec.seasons) {
        if (s.cross) {
            out.seasons.push_back(plan_multivariate(s, spec.config));
            continue;
        }
        SeasonPlan sp{s.name, s.length, {}, std::nullopt};
        for (const auto& p : s.processes) sp.processes.push_back(plan_univariate(p, spec.config));
        out.seasons.push_back(std::move(sp));
    }
    return out;
}

// ---------------------------------------------------------------------------
// synthesis

Synthesis synthesize(const Plan& plan, std::size_t n, std::uint64_t seed) {
    require(!plan.seasons.empty(), ErrorCode::Input, "empty plan");
    require(n > 0, ErrorCode::Input, "series length must be > 0");
    const auto& first = plan.seasons.front();
    const std::size_t dim = first.processes.size();

    std::vector<SeasonSpec> layout;
    for (const auto& s : plan.seasons) layout.push_back({s.name, s.length, {}, std::nullopt});
    const auto schedule = season_schedule(layout, n);

    Synthesis out;
    for (const auto& p : first.processes) {
        out.series.names.push_back(p.label);
        out.gaussian.names.push_back(p.label);
    }
    out.series.columns.assign(dim, std::vector<double>(n));
    out.gaussian.columns.assign(dim, std::vector<double>(n));

    if (first.cross) {
        Mar1Generator gen(first.cross->mar, split_seed(seed, 0));
        for (std::size_t t = 0; t < n; ++t) {
            const SeasonPlan& s = plan.seasons[schedule[t]];
            const Eigen::VectorXd& z = gen.next(s.cross->mar);
            for (std::size_t i = 0; i < dim; ++i) {
                out.gaussian.columns[i][t] = z(static_cast<Eigen::Index>(i));
                out.series.columns[i][t] = transform(s.processes[i].marginal, z(static_cast<Eigen::Index>(i)));
            }
        }
        return out;
    }

    for (std::size_t i = 0; i < dim; ++i) {
        auto& z = out.gaussian.columns[i];
        const auto& g0 = first.processes[i].generator;
        if (const auto* sum = std::get_if<SumAr1Model>(&g0)) {
            z = simulate_sum_ar1(*sum, n, split_seed(seed, i));
        } else {
            ArGenerator gen(std::get<ArModel>(g0), split_seed(seed, i));
            for (std::size_t t = 0; t < n; ++t) {
                z[t] = gen.next(std::get<ArModel>(plan.seasons[schedule[t]].processes[i].generator));
            }
        }
        for (std::size_t t = 0; t < n; ++t) {
            out.series.columns[i][t] = transform(plan.seasons[schedule[t]].processes[i].marginal, z[t]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// verification

double cdf_gap(const Marginal& m, std::span<const double> sample) {
    require(!sample.empty(), ErrorCode::Input, "cannot compare an empty sample");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double gap = 0.0;

    if (const auto* d = std::get_if<MarginalModel>(&m); d && d->discrete()) {
        // Both step functions jump only on the integers.
        const double hi = std::min(x.back(), 1e6);
        std::size_t idx = 0;
        for (double k = std::min(0.0, x.front()); k <= hi; k += 1.0) {
            while (idx < x.size() && x[idx] <= k) ++idx;
            gap = std::max(gap, std::abs(static_cast<double>(idx) / n - d->cdf(k)));
        }
        return gap;
    }

    std::size_t start = 0;
    if (std::holds_alternative<MixedMarginal>(m)) {
        while (start < x.size() && x[start] <= 0.0) ++start;
    }
    for (std::size_t j = start; j < x.size(); ++j) {
        const double f = cdf(m, x[j]);
        gap = std::max({gap, std::abs(f - static_cast<double>(j) / n), std::abs(static_cast<double>(j + 1) / n - f)});
    }
    return gap;
}

VerificationReport verify(const ModelSpec& spec, const SeriesTable& series) {
    return verify(spec, series, spec.thresholds);
}

VerificationReport verify(const ModelSpec& spec, const SeriesTable& series, const Thresholds& thresholds) {
    validate(spec);
    const auto labels = spec.labels();
    std::vector<std::span<const double>> cols;
    for (const auto& l : labels) {
        if (std::find(series.names.begin(), series.names.end(), l) == series.names.end()) {
            fail(ErrorCode::Input, "series has no column for process '" + l + "'");
        }
        cols.emplace_back(series.column(l));
    }
    const std::size_t n = series.rows();
    require(n >= 10, ErrorCode::Input, "series needs at least 10 rows");

    VerificationReport report;
    report.thresholds = thresholds;
    const auto schedule = season_schedule(spec.seasons, n);
    const bool single = spec.seasons.size() == 1;

    for (std::size_t s = 0; s < spec.seasons.size(); ++s) {
        const SeasonSpec& season = spec.seasons[s];
        const auto blocks = season_blocks(schedule, static_cast<std::uint32_t>(s));
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const ProcessSpec& p = season.processes[i];
            const std::vector<double> x = single ? std::vector<double>(cols[i].begin(), cols[i].end())
                                                 : gather(cols[i], blocks);
            ProcessReport r;
            r.label = p.label;
            r.season = season.name;
            r.n = x.size();
            if (x.empty()) {
                report.processes.push_back(std::move(r));
                continue;
            }
            r.cdf_gap = cdf_gap(p.marginal, x);
            r.cdf_pass = r.cdf_gap < thresholds.cdf_gap;
            for (const auto& [value, prob] : expected_atoms(p.marginal)) {
                r.atoms.push_back(check_atom(x, value, prob, thresholds.atom_se));
                r.atoms_pass = r.atoms_pass && r.atoms.back().pass;
            }

            // Under cross targets the MAR(1) generator only sets lag 1 of each ACS.
            const int lags = season.cross ? 1 : thresholds.acs_lags;
            std::vector<double> emp(static_cast<std::size_t>(lags), std::numeric_limits<double>::quiet_NaN());
            if (single) {
                try {
                    emp = empirical_acs(x, lags);
                    emp.erase(emp.begin());
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::UndefinedCorrelation && e.code() != ErrorCode::Input) throw;
                }
            } else {
                for (int tau = 1; tau <= lags; ++tau) {
                    emp[static_cast<std::size_t>(tau - 1)] = block_lagged_correlation(cols[i], cols[i], blocks, tau);
                }
            }
            for (int tau = 1; tau <= lags; ++tau) {
                const double target = season.cross ? season.cross->K1(static_cast<Eigen::Index>(i),
                                                                      static_cast<Eigen::Index>(i))
                                                   : (*p.acs)(tau);
                const double e = emp[static_cast<std::size_t>(tau - 1)];
                r.acs.push_back({tau, target, e});
                const double dev = std::isfinite(e) ? std::abs(e - target) : std::numeric_limits<double>::infinity();
                r.acs_max_abs = std::max(r.acs_max_abs, dev);
            }
            r.acs_pass = r.acs_max_abs <= thresholds.acs_tolerance;
            report.processes.push_back(std::move(r));
        }

        if (season.cross) {
            const auto dim = static_cast<Eigen::Index>(labels.size());
            CrossReport c;
            c.season = season.name;
            c.target0 = season.cross->K0;
            c.target1 = season.cross->K1;
            c.empirical0 = Eigen::MatrixXd::Identity(dim, dim);
            c.empirical1 = Eigen::MatrixXd::Zero(dim, dim);
            for (Eigen::Index i = 0; i < dim; ++i) {
                for (Eigen::Index k = 0; k < dim; ++k) {
                    const auto ci = cols[static_cast<std::size_t>(i)];
                    const auto ck = cols[static_cast<std::size_t>(k)];
                    if (k > i) {
                        c.empirical0(i, k) = c.empirical0(k, i) = block_lagged_correlation(ci, ck, blocks, 0);
                    }
                    // Cor[X_i(t), X_k(t-1)] is the correlation of X_k(s) with X_i(s + 1).
                    c.empirical1(i, k) = block_lagged_correlation(ck, ci, blocks, 1);
                }
            }
            auto max_dev = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
                double m = 0.0;
                for (Eigen::Index i = 0; i < a.rows(); ++i)
                    for (Eigen::Index k = 0; k < a.cols(); ++k) {
                        const double d = std::abs(a(i, k) - b(i, k));
                        m = std::max(m, std::isfinite(d) ? d : std::numeric_limits<double>::infinity());
                    }
                return m;
            };
            c.max_abs0 = max_dev(c.empirical0, c.target0);
            c.max_abs1 = max_dev(c.empirical1, c.target1);
            c.pass = c.max_abs0 <= thresholds.cross_tolerance && c.max_abs1 <= thresholds.cross_tolerance;
            report.cross.push_back(std::move(c));
        }
    }
    return report;
}

bool VerificationReport::passed() const {
    return std::all_of(processes.begin(), processes.end(), [](const ProcessReport& p) { return p.passed(); }) &&
           std::all_of(cross.begin(), cross.end(), [](const CrossReport& c) { return c.pass; });
}

// ---------------------------------------------------------------------------
// JSON

Json to_json(const Plan& plan) {
    Json seasons = Json::array();
    for (const auto& s : plan.seasons) {
        Json sj{{"name", s.name}, {"length", s.length}};
        Json procs = Json::array();
        for (const auto& p : s.processes) {
            Json pj{{"label", p.label}, {"marginal", to_json(p.marginal)}};
            if (p.target) pj["target_acs"] = to_json(*p.target);
            pj["curve"] = to_json(p.curve);
            pj["grid"] = to_json(p.grid);
            pj["pgacs"] = p.pgacs;
            if (const auto* ar = std::get_if<ArModel>(&p.generator)) {
                pj["generator"] = to_json(*ar);
            } else if (const auto* sum = std::get_if<SumAr1Model>(&p.generator)) {
                pj["generator"] = to_json(*sum);
                pj["generator"]["max_abs_error"] = p.generator_error;
            }
            procs.push_back(std::move(pj));
        }
        sj["processes"] = std::move(procs);
        if (s.cross) {
            Json pairs = Json::array();
            for (const auto& pp : s.cross->pairs) {
                pairs.push_back({{"pair", {s.processes[pp.i].label, s.processes[pp.k].label}},
                                 {"curve", to_json(pp.curve)},
                                 {"grid", to_json(pp.grid)}});
            }
            sj["cross"] = {{"K_X0", matrix_to_json(s.cross->KX0)}, {"K_X1", matrix_to_json(s.cross->KX1)},
                           {"K_Z0", matrix_to_json(s.cross->KZ0)}, {"K_Z1", matrix_to_json(s.cross->KZ1)},
                           {"pairs", std::move(pairs)},          {"mar1", to_json(s.cross->mar)}};
        }
        seasons.push_back(std::move(sj));
    }
    Json out{{"seasons", std::move(seasons)}};
    if (plan.seasons.size() > 1) {
        out["stitching"] = "generator state is carried across season boundaries; each step uses its season's model";
    }
    return out;
}

Json to_json(const VerificationReport& report) {
    const auto& t = report.thresholds;
    Json out{{"passed", report.passed()},
             {"thresholds",
              {{"cdf_gap", t.cdf_gap},
               {"atom_se", t.atom_se},
               {"acs_tolerance", t.acs_tolerance},
               {"acs_lags", t.acs_lags},
               {"cross_tolerance", t.cross_tolerance}}}};
    Json procs = Json::array();
    for (const auto& p : report.processes) {
        Json atoms = Json::array();
        for (const auto& a : p.atoms) {
            atoms.push_back({{"value", a.value},
                             {"expected", a.expected},
                             {"observed", a.observed},
                             {"standard_error", a.standard_error},
                             {"pass", a.pass}});
        }
        Json acs = Json::array();
        for (const auto& r : p.acs) acs.push_back({{"lag", r.lag}, {"target", r.target}, {"empirical", r.empirical}});
        procs.push_back({{"label", p.label},
                         {"season", p.season},
                         {"n", p.n},
                         {"cdf_gap", p.cdf_gap},
                         {"cdf_pass", p.cdf_pass},
                         {"atoms", std::move(atoms)},
                         {"atoms_pass", p.atoms_pass},
                         {"acs", std::move(acs)},
                         {"acs_max_abs", p.acs_max_abs},
                         {"acs_pass", p.acs_pass}});
    }
    out["processes"] = std::move(procs);
    Json cross = Json::array();
    for (const auto& c : report.cross) {
        cross.push_back({{"season", c.season},
                         {"target_K0", matrix_to_json(c.target0)},
                         {"empirical_K0", matrix_to_json(c.empirical0)},
                         {"target_K1", matrix_to_json(c.target1)},
                         {"empirical_K1", matrix_to_json(c.empirical1)},
                         {"max_abs_K0", c.max_abs0},
                         {"max_abs_K1", c.max_abs1},
                         {"pass", c.pass}});
    }
    out["cross"] = std::move(cross);
    return out;
}

// ---------------------------------------------------------------------------
// recipe

namespace {

void write_plot_data(const fs::path& dir, const Plan& plan, const Synthesis& syn, bool svg) {
    fs::create_directories(dir);
    const bool seasonal = plan.seasons.size() > 1;
    const std::size_t n = syn.series.rows();
    for (const auto& s : plan.seasons) {
        const std::string prefix = seasonal ? file_stem(s.name) + "_" : "";
        for (std::size_t i = 0; i < s.processes.size(); ++i) {
            const auto& p = s.processes[i];
            const std::string stem = prefix + file_stem(p.label);
            {
                auto out = open_output(dir / (stem + "_ctf_grid.csv"));
                write_grid_csv(out, p.grid);
            }
            {
                auto out = open_output(dir / (stem + "_ctf_curve.csv"));
                write_curve_csv(out, p.curve);
            }

            const std::vector<double>& x = syn.series.columns[i];
            const int lags = static_cast<int>(std::min<std::size_t>(50, n > 20 ? n / 10 : 1));
            std::vector<double> emp;
            try {
                if (!seasonal) {
                    emp = empirical_acs(x, lags);
                    emp.erase(emp.begin());
                }
            } catch (const Error&) {
            }
            LineSeries target{"target", {}, {}}, parent{"parent-Gaussian", {}, {}}, empirical{"synthetic", {}, {}};
            {
                auto out = open_output(dir / (stem + "_acs.csv"));
                out << "lag,target,pgacs,empirical\n";
                for (int tau = 1; tau <= lags; ++tau) {
                    const auto k = static_cast<std::size_t>(tau - 1);
                    const double tgt = p.target ? (*p.target)(tau) : std::numeric_limits<double>::quiet_NaN();
                    const double pg = k < p.pgacs.size() ? p.pgacs[k] : std::numeric_limits<double>::quiet_NaN();
                    const double em = k < emp.size() ? emp[k] : std::numeric_limits<double>::quiet_NaN();
                    out << tau << ',' << tgt << ',' << pg << ',' << em << '\n';
                    target.x.push_back(tau);
                    target.y.push_back(tgt);
                    parent.x.push_back(tau);
                    parent.y.push_back(pg);
                    empirical.x.push_back(tau);
                    empirical.y.push_back(em);
                }
            }
            if (!seasonal) {
                std::vector<double> sorted = x;
                std::sort(sorted.begin(), sorted.end());
                auto out = open_output(dir / (stem + "_quantiles.csv"));
                out << "u,empirical,target\n";
                for (int k = 1; k < 100; ++k) {
                    const double u = k / 100.0;
                    const auto idx = std::min(sorted.size() - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
                    out << u << ',' << sorted[idx] << ',' << quantile(p.marginal, u) << '\n';
                }
            }
            if (svg) {
                auto out = open_output(dir / (stem + "_acs.svg"));
                write_svg_chart(out, p.label + " autocorrelation", "lag", "correlation", {target, parent, empirical});
                LineSeries grid{"grid", {}, {}}, curve{"fitted curve", {}, {}};
                for (const auto& g : p.grid.points) {
                    grid.x.push_back(g.rho_x);
                    grid.y.push_back(g.rho_z);
                }
                for (int k = 0; k <= 100; ++k) {
                    curve.x.push_back(k / 100.0);
                    curve.y.push_back(ctf_apply(p.curve, k / 100.0));
                }
                auto cout = open_output(dir / (stem + "_ctf.svg"));
                write_svg_chart(cout, p.label + " transformation curve", "rho_X", "rho_Z", {grid, curve});
            }
        }
        if (s.cross) {
            for (const auto& pp : s.cross->pairs) {
                if (pp.grid.points.empty()) continue;
                const std::string stem =
                    prefix + file_stem(s.processes[pp.i].label) + "__" + file_stem(s.processes[pp.k].label);
                auto g = open_output(dir / (stem + "_ctf_grid.csv"));
                write_grid_csv(g, pp.grid);
                auto c = open_output(dir / (stem + "_ctf_curve.csv"));
                write_curve_csv(c, pp.curve);
            }
        }
    }
}

}  // namespace

RecipeResult run_recipe(const ModelSpec& spec, const RecipeOptions& options) {
    require(spec.n > 0, ErrorCode::Input, "spec needs 'n' > 0 to simulate");
    const fs::path dir(options.out_dir.empty() ? "." : options.out_dir);
    try {
        fs::create_directories(dir);
    } catch (const fs::filesystem_error& e) {
        fail(ErrorCode::Input, "cannot create output directory " + dir.string());
    }

    RecipeResult result;
    try {
        result.plan = plan(spec);
    } catch (const Error& e) {
        throw with_step("plan", e);
    }
    Synthesis syn;
    try {
        syn = synthesize(result.plan, spec.n, spec.seed);
    } catch (const Error& e) {
        throw with_step("synthesize", e);
    }
    try {
        result.report = verify(spec, syn.series);
    } catch (const Error& e) {
        throw with_step("verify", e);
    }

    try {
        {
            auto out = open_output(dir / "plan.json");
            out << to_json(result.plan).dump(2) << '\n';
        }
        if (options.json_series) {
            Json j;
            for (std::size_t i = 0; i < syn.series.names.size(); ++i) j[syn.series.names[i]] = syn.series.columns[i];
            auto out = open_output(dir / "series.json");
            out << j.dump() << '\n';
        } else {
            auto out = open_output(dir / "series.csv");
            write_series_csv(out, syn.series);
        }
        {
            Json report = to_json(result.report);
            if (spec.seasons.size() > 1) {
                report["stitching"] =
                    "generator state is carried across season boundaries; each step uses its season's model";
            }
            auto out = open_output(dir / "report.json");
            out << report.dump(2) << '\n';
        }
        write_plot_data(dir / "plotdata", result.plan, syn, options.svg);
    } catch (const Error& e) {
        throw with_step("write", e);
    }
    return result;
}

}  // namespace pgsim
