#include <catch2/catch_amalgamated.hpp>

#include "cases.hpp"
#include "pgsim/error.hpp"
#include "pgsim/pipeline.hpp"
#include "pgsim/special.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

using namespace pgsim;
using Catch::Approx;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::Input;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    FAIL("no error raised");
    return {};
}

// E[g(Z1) g(Z2)] for standard normals with correlation rho, as a nested integral
// over z1 and the independent part of z2.
double lagged_moment(const Marginal& m, double rho) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double s = std::sqrt(1.0 - rho * rho);
    auto inner = [&](double z1) {
        return GK::integrate([&](double w) { return transform(m, rho * z1 + s * w) * normal_pdf(w); }, -12.0, 12.0,
                             15, 1e-12);
    };
    return GK::integrate([&](double z1) { return normal_pdf(z1) * transform(m, z1) * inner(z1); }, -12.0, 12.0, 15,
                         1e-12);
}

double mean_of(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

const char* kTwoProcessJson = R"({
  "n": 50000, "seed": 17,
  "processes": [
    {"label": "a", "marginal": {"family": "Weibull", "params": [1.0, 2.0]},
     "acs": {"family": "Weibull", "params": [3.0, 0.8]}},
    {"label": "b", "marginal": {"family": "Gaussian", "params": [0.0, 1.0]},
     "acs": {"family": "Markovian", "params": [0.5]}, "generator": {"type": "ar", "order": 1}}
  ]
})";

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("pgsim_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("Gaussian Markovian process plans an AR(1)", "[pipeline]") {
    const auto p = plan_univariate(cases::process("g", MarginalModel::gaussian(0.0, 1.0), CorrelationModel::markovian(0.7)));
    REQUIRE(p.curve.family == CtfFamily::Identity);
    const auto& ar = std::get<ArModel>(p.generator);
    // 0.7^k falls below the cutoff 0.001 after lag 19
    REQUIRE(ar.coeffs[0] == Approx(0.7).margin(1e-9));
    for (std::size_t i = 1; i < ar.coeffs.size(); ++i) REQUIRE(std::abs(ar.coeffs[i]) < 1e-9);
    REQUIRE(p.pgacs[0] == Approx(0.7));
    REQUIRE(p.pgacs[2] == Approx(0.343));
}

TEST_CASE("skewed marginal inflates the parent correlation", "[pipeline]") {
    const Marginal m = MarginalModel::weibull(1.0, 0.25);
    const auto p = plan_univariate(cases::process("w", m, CorrelationModel::markovian(0.8)));
    REQUIRE(p.pgacs[0] == Approx(0.93).margin(0.01));
    // E[X] = 24 and Var[X] = 8! - 24^2 for unit scale and shape 1/4
    const double mean = 24.0, variance = 40320.0 - 576.0;
    REQUIRE((lagged_moment(m, p.pgacs[0]) - mean * mean) / variance == Approx(0.8).margin(0.01));
}

TEST_CASE("AR order stops where the parent ACS drops below the cutoff", "[pipeline]") {
    const auto spec = cases::univariate_cases()[1];
    const PlanConfig config;
    const auto p = plan_univariate(spec, config);
    const auto& ar = std::get<ArModel>(p.generator);
    REQUIRE(ar.order() == static_cast<int>(p.pgacs.size()));
    REQUIRE(p.pgacs.back() >= config.cutoff);
    const double next = ctf_apply(p.curve, (*spec.acs)(static_cast<double>(p.pgacs.size() + 1)));
    REQUIRE(next < config.cutoff);
}

TEST_CASE("synthesized marginals hit atoms and means", "[pipeline]") {
    const std::size_t n = 100000;
    auto procs = cases::univariate_cases();
    const auto spec = cases::single_season({procs[1], procs[5]}, n, 21);
    const auto out = synthesize(plan(spec), n, spec.seed);
    const auto& rain = out.series.column("athens");
    const double zeros = std::count(rain.begin(), rain.end(), 0.0) / double(n);
    // binomial SE is 0.0013; persistence of wet/dry spells widens it a few times
    REQUIRE(zeros == Approx(0.78).margin(0.01));
    REQUIRE(mean_of(out.series.column("binary")) == Approx(0.75).margin(0.01));
}

TEST_CASE("same seed reproduces, different seed differs", "[pipeline]") {
    const auto spec = cases::single_season({cases::univariate_cases()[3]}, 2000, 5);
    const Plan pl = plan(spec);
    REQUIRE(synthesize(pl, 2000, 5).series.columns == synthesize(pl, 2000, 5).series.columns);
    REQUIRE(synthesize(pl, 2000, 5).series.columns != synthesize(pl, 2000, 6).series.columns);
}

TEST_CASE("target ranks equal parent-Gaussian ranks", "[pipeline]") {
    const auto spec = cases::single_season({cases::univariate_cases()[0]}, 5000, 9);
    const auto out = synthesize(plan(spec), 5000, 9);
    const auto& x = out.series.columns[0];
    const auto& z = out.gaussian.columns[0];
    std::vector<std::size_t> order(z.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return z[a] < z[b]; });
    for (std::size_t i = 1; i < order.size(); ++i) REQUIRE(x[order[i]] >= x[order[i - 1]]);
}

TEST_CASE("single-season spec equals the stationary path", "[pipeline]") {
    const Json flat = Json::parse(kTwoProcessJson);
    Json seasonal = flat;
    seasonal.erase("processes");
    seasonal["seasons"] = Json::array({{{"name", "only"}, {"length", 7}, {"processes", flat["processes"]}}});
    const auto a = model_spec_from_json(flat);
    const auto b = model_spec_from_json(seasonal);
    REQUIRE(b.seasons.size() == 1);
    REQUIRE(b.seasons[0].length == 7);
    REQUIRE(a.seasons[0].processes[1].generator.param == 1);
    REQUIRE(synthesize(plan(a), 3000, a.seed).series.columns == synthesize(plan(b), 3000, b.seed).series.columns);
}

TEST_CASE("cyclostationary spec passes its own verification", "[pipeline]") {
    Json j = Json::parse(R"({
      "n": 150000, "seed": 4,
      "seasons": [
        {"name": "wet", "length": 3, "processes": [
          {"label": "x", "marginal": {"family": "Weibull", "params": [2.0, 0.8], "p0": 0.4},
           "acs": {"family": "Markovian", "params": [0.6]}}]},
        {"name": "dry", "length": 2, "processes": [
          {"label": "x", "marginal": {"family": "Weibull", "params": [1.0, 1.5], "p0": 0.8},
           "acs": {"family": "Markovian", "params": [0.3]}}]}
      ]
    })");
    const auto spec = model_spec_from_json(j);
    const auto out = synthesize(plan(spec), spec.n, spec.seed);
    const auto report = verify(spec, out.series);
    REQUIRE(report.processes.size() == 2);
    for (const auto& p : report.processes) {
        INFO(p.season << " gap " << p.cdf_gap << " acs " << p.acs_max_abs);
        REQUIRE(p.cdf_pass);
        REQUIRE(p.atoms_pass);
    }
    REQUIRE(to_json(plan(spec)).contains("stitching"));
}

TEST_CASE("verification rejects mismatched and shuffled series", "[pipeline]") {
    const auto proc = cases::process("w", MarginalModel::weibull(1.0, 2.0), CorrelationModel::weibull(5.0, 0.8));
    const auto spec = cases::single_season({proc}, 1000000, 2);
    auto out = synthesize(plan(spec), spec.n, spec.seed);
    const auto good = verify(spec, out.series);
    INFO(to_json(good).dump());
    REQUIRE(good.passed());

    auto wrong = spec;
    wrong.seasons[0].processes[0].marginal = MarginalModel::weibull(1.2, 2.0);
    const auto bad_cdf = verify(wrong, out.series);
    REQUIRE_FALSE(bad_cdf.processes[0].cdf_pass);

    std::mt19937_64 gen(1);
    std::shuffle(out.series.columns[0].begin(), out.series.columns[0].end(), gen);
    const auto bad_acs = verify(spec, out.series);
    REQUIRE(bad_acs.processes[0].cdf_pass);
    REQUIRE_FALSE(bad_acs.processes[0].acs_pass);
}

TEST_CASE("cdf gap of exact quantiles is small", "[pipeline]") {
    const Marginal m = MarginalModel::gen_gamma(4.4, 2.66, 1.76);
    std::vector<double> x;
    for (int i = 0; i < 1000; ++i) x.push_back(quantile(m, (i + 0.5) / 1000.0));
    REQUIRE(cdf_gap(m, x) <= 0.0005 + 1e-12);
}

TEST_CASE("zero cross targets give independent parents", "[pipeline]") {
    SeasonSpec s = cases::trivariate_season();
    s.cross = CrossTargets{Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 3)};
    const auto sp = plan_multivariate(s);
    REQUIRE(sp.cross->pairs.size() == 3);
    for (const auto& pair : sp.cross->pairs) REQUIRE(pair.grid.points.empty());
    REQUIRE(sp.cross->KZ0.isApprox(Eigen::MatrixXd::Identity(3, 3)));
    REQUIRE(sp.cross->KZ1.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unreachable cross target names the pair and rho_max", "[pipeline]") {
    SeasonSpec s = cases::trivariate_season();
    s.cross->K0(0, 2) = s.cross->K0(2, 0) = 0.95;
    const std::string msg = message_of([&] { plan_multivariate(s); });
    REQUIRE_THAT(msg, Catch::Matchers::ContainsSubstring("rho_max"));
    REQUIRE_THAT(msg, Catch::Matchers::ContainsSubstring("rain"));
    REQUIRE_THAT(msg, Catch::Matchers::ContainsSubstring("humidity"));
}

TEST_CASE("spec validation", "[pipeline]") {
    Json j = Json::parse(kTwoProcessJson);
    const auto spec = model_spec_from_json(j);
    REQUIRE(spec.n == 50000);
    REQUIRE(spec.labels() == std::vector<std::string>{"a", "b"});

    Json dup = j;
    dup["processes"][1]["label"] = "a";
    REQUIRE(code_of([&] { model_spec_from_json(dup); }) == ErrorCode::Input);

    Json no_acs = j;
    no_acs["processes"][0].erase("acs");
    REQUIRE(code_of([&] { model_spec_from_json(no_acs); }) == ErrorCode::Input);

    Json bad_gen = j;
    bad_gen["processes"][0]["generator"] = {{"type", "arma"}};
    REQUIRE(code_of([&] { model_spec_from_json(bad_gen); }) == ErrorCode::Input);

    Json wrong_type = j;
    wrong_type["n"] = "many";
    REQUIRE(code_of([&] { model_spec_from_json(wrong_type); }) == ErrorCode::Parse);

    REQUIRE(code_of([] { read_model_spec("/nonexistent/spec.json"); }) == ErrorCode::NotFound);
}

TEST_CASE("fit block estimates the marginal and ACS from data", "[pipeline]") {
    const auto dir = temp_dir("fit_block");
    const auto truth = cases::single_season(
        {cases::process("flow", MarginalModel::weibull(2.0, 1.5), CorrelationModel::weibull(4.0, 0.9))}, 60000, 3);
    const auto out = synthesize(plan(truth), truth.n, truth.seed);
    {
        std::ofstream f(dir / "obs.csv");
        write_series_csv(f, out.series);
    }
    Json j = Json::parse(R"({"n": 1000, "processes": [{"label": "flow", "fit": {
        "data": "obs.csv", "column": "flow", "marginal_family": "Weibull", "acs_family": "Weibull"}}]})");
    const auto spec = model_spec_from_json(j, dir.string());
    const auto& p = spec.seasons[0].processes[0];
    const auto& m = std::get<MarginalModel>(p.marginal);
    REQUIRE(m.params()[0] == Approx(2.0).epsilon(0.05));
    REQUIRE(m.params()[1] == Approx(1.5).epsilon(0.05));
    REQUIRE((*p.acs)(1.0) == Approx(CorrelationModel::weibull(4.0, 0.9)(1.0)).margin(0.03));

    j["processes"][0]["fit"]["data"] = "missing.csv";
    REQUIRE(code_of([&] { model_spec_from_json(j, dir.string()); }) == ErrorCode::NotFound);
    std::filesystem::remove_all(dir);
}
