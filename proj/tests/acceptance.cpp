// Acceptance gate: runs criteria 1-11 and prints one PASS/FAIL line per criterion.
// Exit status is non-zero when any criterion fails.

#include "cases.hpp"

#include "pgsim/correlations.hpp"
#include "pgsim/ctf.hpp"
#include "pgsim/error.hpp"
#include "pgsim/gaussian.hpp"
#include "pgsim/marginals.hpp"
#include "pgsim/pipeline.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

using namespace pgsim;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

// Independent Monte-Carlo oracle for rho_X: own engine, Box-Muller normals,
// batch-means standard error over 100 batches.
struct McResult {
    double value;
    double se;
};

McResult mc_rho_x(const Marginal& m, double rho_z, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    auto unif = [&] { return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53; };
    const double s = std::sqrt(1.0 - rho_z * rho_z);
    const auto mom = moments(m);
    constexpr std::size_t kBatches = 100;
    const std::size_t per = n / kBatches;
    std::vector<double> means;
    for (std::size_t b = 0; b < kBatches; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            const double r = std::sqrt(-2.0 * std::log(unif()));
            const double th = 2.0 * std::numbers::pi * unif();
            const double z1 = r * std::cos(th);
            const double z2 = rho_z * z1 + s * r * std::sin(th);
            acc += transform(m, z1) * transform(m, z2);
        }
        means.push_back(acc / static_cast<double>(per));
    }
    double mean = 0.0;
    for (double v : means) mean += v;
    mean /= kBatches;
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    var /= kBatches - 1;
    return {(mean - mom.mean * mom.mean) / mom.variance, std::sqrt(var / kBatches) / mom.variance};
}

// Comonotone (Frechet-Hoeffding upper) correlation of two marginals.
double comonotone_limit(const Marginal& a, const Marginal& b) {
    boost::math::quadrature::tanh_sinh<double> ts;
    std::vector<double> cuts{0.0};
    for (const Marginal* m : {&a, &b}) {
        const double p0 = zero_probability(*m);
        if (p0 > 0.0) cuts.push_back(p0);
    }
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] <= cuts[i]) continue;
        e += ts.integrate([&](double u) { return quantile(a, u) * quantile(b, u); }, cuts[i], cuts[i + 1]);
    }
    const auto ma = moments(a), mb = moments(b);
    return (e - ma.mean * mb.mean) / std::sqrt(ma.variance * mb.variance);
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (const Marginal& m : {Marginal(MarginalModel::gaussian(0.0, 1.0)), Marginal(MarginalModel::gaussian(3.0, 2.0))}) {
        for (double rho : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
            worst = std::max(worst, std::abs(acti_evaluate(m, rho) - rho));
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream os;
    os << "max |rho_x - rho_z| = " << std::scientific << std::setprecision(2) << worst << ", runtime "
       << fmt(secs, 3) << " s";
    return {worst <= 1e-6 && secs < 1.0, os.str()};
}

Outcome criterion2() {
    const double v = acti_evaluate(MarginalModel::weibull(1.0, 0.25), 0.93);
    return {std::abs(v - 0.80) <= 0.01, "rho_x(0.93) = " + fmt(v, 5) + " (target 0.80 +- 0.01)"};
}

Outcome fit_rational_case(const Marginal& m, double b_ref, double c_ref) {
    const CtfCurve c = fit_ctf(build_grid(m, std::nullopt, GridKind::Auto), CtfFamily::Rational);
    const double eb = std::abs(c.b / b_ref - 1.0), ec = std::abs(c.c / c_ref - 1.0);
    return {eb <= 0.05 && ec <= 0.05, "(b, c) = (" + fmt(c.b) + ", " + fmt(c.c) + "), reference (" + fmt(b_ref, 2) +
                                          ", " + fmt(c_ref, 2) + ")"};
}

Outcome criterion3() { return fit_rational_case(cases::storm_marginal(), 2.96, 0.93); }
Outcome criterion4() { return fit_rational_case(cases::athens_marginal(), 13.88, 0.75); }

Outcome criterion5() {
    const MarginalModel base = MarginalModel::pareto_ii(1.0, 0.3);
    const double refs[] = {0.98, 0.89, 0.66};
    const double p0s[] = {0.5, 0.9, 0.99};
    bool pass = true;
    std::string detail = "rho_max =";
    for (int i = 0; i < 3; ++i) {
        const Marginal mixed = MixedMarginal(p0s[i], base);
        const CtfCurve c = fit_ctf(build_grid(base, mixed, GridKind::Cross), CtfFamily::Cross);
        const double r = rho_max(c);
        pass = pass && std::abs(r - refs[i]) <= 0.02;
        detail += " " + fmt(r) + (i < 2 ? "," : "");
    }
    return {pass, detail + " (reference 0.98, 0.89, 0.66 +- 0.02)"};
}

Outcome criterion6() {
    const SeasonPlan sp = plan_multivariate(cases::trivariate_season());
    const auto& mv = *sp.cross;
    const double d0 = (mv.KZ0 - cases::reference_kz0()).cwiseAbs().maxCoeff();
    const double d1 = (mv.KZ1 - cases::reference_kz1()).cwiseAbs().maxCoeff();
    double wh = 0.0;
    for (const auto& p : mv.pairs)
        if (p.i == 1 && p.k == 2) wh = rho_max(p.curve);
    const bool pass = d0 <= 0.02 && d1 <= 0.02 && std::abs(wh - 0.76) <= 0.03;
    return {pass, "max |K_Z0 dev| " + fmt(d0) + ", max |K_Z1 dev| " + fmt(d1) + ", wind-humidity rho_max " + fmt(wh) +
                      " (reference 0.76 +- 0.03)"};
}

Outcome criterion7() {
    const std::vector<std::pair<std::string, Marginal>> marginals{
        {"W(1,0.5)", MarginalModel::weibull(1.0, 0.5)},
        {"GG(4.4,2.66,1.76)", MarginalModel::gen_gamma(4.4, 2.66, 1.76)},
        {"BrXII(2.13,0.74,0.22)", MarginalModel::burr_xii(2.13, 0.74, 0.22)},
        {"Ku(11,5)", MarginalModel::kumaraswamy(11.0, 5.0)},
        {"mixed p0=0.5", MixedMarginal(0.5, MarginalModel::burr_xii(2.0, 0.9, 0.2))},
        {"mixed p0=0.9", MixedMarginal(0.9, MarginalModel::burr_xii(2.0, 0.9, 0.2))},
        {"mixed p0=0.99", MixedMarginal(0.99, MarginalModel::burr_xii(2.0, 0.9, 0.2))},
        {"PA(2,0.3)", MarginalModel::polya_aeppli(2.0, 0.3)},
        {"Bernoulli(0.25)", MarginalModel::bernoulli(0.25)},
    };
    int checks = 0, failures = 0;
    double worst = 0.0;
    std::string worst_case;
    std::uint64_t seed = 7000;
    for (const auto& [name, m] : marginals) {
        for (double rho : {0.2, 0.5, 0.8, 0.95}) {
            const double q = acti_evaluate(m, rho);
            const McResult mc = mc_rho_x(m, rho, 1'000'000, ++seed);
            const double z = std::abs(q - mc.value) / mc.se;
            ++checks;
            if (z > 3.0) ++failures;
            if (z > worst) {
                worst = z;
                worst_case = name + " at rho_z " + fmt(rho, 2);
            }
        }
    }
    return {failures == 0, std::to_string(checks) + " comparisons, " + std::to_string(failures) +
                               " beyond 3 SE; largest |z| = " + fmt(worst, 2) + " (" + worst_case + ")"};
}

Outcome criterion8() {
    // Exactness: the dense Toeplitz residual of the fitted coefficients.
    auto dense_residual = [](const ArModel& m, const std::vector<double>& head) {
        const auto p = static_cast<Eigen::Index>(head.size());
        Eigen::MatrixXd R(p, p);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index k = 0; k < p; ++k) R(i, k) = i == k ? 1.0 : head[static_cast<std::size_t>(std::abs(i - k) - 1)];
        const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(m.coeffs.data(), p);
        const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(head.data(), p);
        const double var_err = std::abs(m.noise_var - (1.0 - a.dot(r)));
        return std::max((R * a - r).cwiseAbs().maxCoeff(), var_err);
    };
    const CtfCurve storm_curve = fit_ctf(build_grid(cases::storm_marginal(), std::nullopt, GridKind::Auto),
                                         CtfFamily::Rational);
    std::vector<std::pair<std::string, std::vector<double>>> heads{
        {"WeibullACS(10,0.5) p=1000", CorrelationModel::weibull(10, 0.5).head(1000)},
        {"fGn(0.9) p=1000", CorrelationModel::fgn(0.9).head(1000)},
        {"storm pGACS p=1000", ctf_apply(storm_curve, CorrelationModel::weibull(80.6, 0.73), 1000)},
        {"Markovian(0.95) p=300", CorrelationModel::markovian(0.95).head(300)},
    };
    double worst = 0.0;
    for (const auto& [name, head] : heads) worst = std::max(worst, dense_residual(fit_ar(head), head));

    const CorrelationModel target = CorrelationModel::weibull(10, 0.5);
    constexpr int kLags = 3000;
    const auto full = target.head(kLags);
    std::vector<double> devs;
    for (int p : {10, 100, 1000}) {
        const auto head = target.head(p);
        const auto ext = ar_extrapolate_acs(fit_ar(head), head, kLags);
        double d = 0.0;
        for (int k = 0; k < kLags; ++k) d = std::max(d, std::abs(ext[static_cast<std::size_t>(k)] - full[static_cast<std::size_t>(k)]));
        devs.push_back(d);
    }
    const bool shrinks = devs[0] > devs[1] && devs[1] > devs[2];
    std::ostringstream os;
    os << "max Yule-Walker residual " << std::scientific << std::setprecision(2) << worst
       << "; tail deviation p=10/100/1000: " << devs[0] << " / " << devs[1] << " / " << devs[2];
    return {worst <= 1e-8 && shrinks, os.str()};
}

Outcome criterion9() {
    const ModelSpec spec = cases::single_season(cases::univariate_cases(), 1'000'000, 20261015);
    const Plan p = plan(spec);
    const Synthesis syn = synthesize(p, spec.n, spec.seed);
    const VerificationReport r = verify(spec, syn.series);
    std::string detail;
    for (const auto& pr : r.processes) {
        double atom = 0.0;
        for (const auto& a : pr.atoms) atom = std::max(atom, std::abs(a.observed - a.expected) / a.standard_error);
        detail += pr.label + " gap " + fmt(pr.cdf_gap) + " acs " + fmt(pr.acs_max_abs) +
                  (pr.atoms.empty() ? "" : " atom z " + fmt(atom, 2)) + (pr.passed() ? "" : " [FAIL]") + "; ";
    }
    return {r.passed(), detail};
}

Outcome criterion10() {
    ModelSpec spec;
    spec.seasons.push_back(cases::trivariate_season());
    spec.n = 100'000;
    spec.seed = 20261015;
    const Plan p = plan(spec);
    const Synthesis syn = synthesize(p, spec.n, spec.seed);
    const VerificationReport r = verify(spec, syn.series);
    const auto& c = r.cross.front();
    bool atoms = true;
    std::string zeros;
    for (const auto& pr : r.processes) {
        for (const auto& a : pr.atoms) {
            atoms = atoms && a.pass;
            zeros += " " + pr.label + " " + fmt(a.observed) + " (se " + fmt(a.standard_error) + ")";
        }
    }
    return {c.pass && atoms, "max |K0 dev| " + fmt(c.max_abs0) + ", max |K1 dev| " + fmt(c.max_abs1) +
                                 "; zero fractions" + zeros};
}

Outcome criterion11() {
    std::string detail;
    bool pass = true;

    // Marginal mismatch.
    {
        const auto wind = cases::process("wind", MarginalModel::gen_gamma(4.4, 2.66, 1.76),
                                         CorrelationModel::pareto_ii(1.7, 0.68));
        const ModelSpec spec = cases::single_season({wind}, 200'000, 11);
        const Synthesis syn = synthesize(plan(spec), spec.n, spec.seed);
        ModelSpec wrong = spec;
        wrong.seasons[0].processes[0].marginal = MarginalModel::gen_gamma(4.8, 2.66, 1.76);
        const auto good = verify(spec, syn.series).processes[0];
        const auto bad = verify(wrong, syn.series).processes[0];
        pass = pass && good.cdf_pass && !bad.cdf_pass;
        detail += "mismatch gap " + fmt(bad.cdf_gap) + " (own marginal " + fmt(good.cdf_gap) + "); ";
    }
    // Shuffled series.
    {
        const auto storm = cases::process("storm", cases::storm_marginal(), CorrelationModel::weibull(80.6, 0.73));
        const ModelSpec spec = cases::single_season({storm}, 200'000, 12);
        Synthesis syn = synthesize(plan(spec), spec.n, spec.seed);
        std::mt19937_64 eng(13);
        std::shuffle(syn.series.columns[0].begin(), syn.series.columns[0].end(), eng);
        const auto r = verify(spec, syn.series).processes[0];
        pass = pass && !r.acs_pass;
        detail += "shuffled ACS dev " + fmt(r.acs_max_abs) + "; ";
    }
    // Infeasible cross target.
    {
        SeasonSpec season = cases::trivariate_season();
        season.cross->K0(0, 2) = season.cross->K0(2, 0) = 0.5;
        const double oracle = comonotone_limit(cases::rain_marginal(), cases::humidity_marginal());
        try {
            plan_multivariate(season);
            pass = false;
            detail += "infeasible target accepted";
        } catch (const Error& e) {
            const std::string msg = e.what();
            const auto pos = msg.find("rho_max = ");
            const bool names_pair = msg.find("rain") != std::string::npos && msg.find("humidity") != std::string::npos;
            const double named = pos == std::string::npos ? -1.0 : std::stod(msg.substr(pos + 10));
            pass = pass && e.code() == ErrorCode::Infeasible && names_pair && std::abs(named - oracle) <= 0.01;
            detail += "rejected naming rho_max " + fmt(named) + " (comonotone limit " + fmt(oracle) + ")";
        }
    }
    return {pass, detail};
}

}  // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                         criterion5, criterion6, criterion7, criterion8,
                                                         criterion9, criterion10, criterion11};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << "criterion " << std::setw(2) << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
                  << "  [" << fmt(secs, 1) << " s]" << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
