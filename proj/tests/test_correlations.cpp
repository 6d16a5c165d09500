#include <catch2/catch_amalgamated.hpp>

#include "pgsim/correlations.hpp"
#include "pgsim/error.hpp"
#include "pgsim/rng.hpp"

#include <cmath>
#include <sstream>

using namespace pgsim;
using Catch::Approx;

namespace {

std::vector<CorrelationModel> all_models() {
    return {
        CorrelationModel::weibull(80.6, 0.73), CorrelationModel::pareto_ii(1.7, 0.68),
        CorrelationModel::burr_xii(3.0, 0.8, 0.5), CorrelationModel::gen_log(2.0, 0.9),
        CorrelationModel::fgn(0.8), CorrelationModel::markovian(0.6),
    };
}

// Straight double-loop sample ACS, divide by n.
std::vector<double> naive_acs(const std::vector<double>& x, int max_lag) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    std::vector<double> out;
    for (int k = 0; k <= max_lag; ++k) {
        double c = 0.0;
        for (std::size_t t = 0; t + k < x.size(); ++t) c += (x[t] - mean) * (x[t + k] - mean);
        out.push_back(c / n);
    }
    for (int k = max_lag; k >= 0; --k) out[k] /= out[0];
    return out;
}

}  // namespace

TEST_CASE("every family is one at lag zero and nonincreasing", "[correlations]") {
    for (const auto& m : all_models()) {
        INFO(m.describe());
        REQUIRE(m(0.0) == Approx(1.0));
        double last = 1.0;
        for (int k = 1; k < 500; ++k) {
            const double r = m(k);
            REQUIRE(r <= last + 1e-15);
            REQUIRE(r >= 0.0);
            last = r;
        }
        const auto h = m.head(5);
        REQUIRE(h.size() == 5);
        REQUIRE(h[0] == m(1.0));
    }
}

TEST_CASE("closed forms at chosen lags", "[correlations]") {
    REQUIRE(CorrelationModel::weibull(2.0, 0.5)(8.0) == Approx(std::exp(-2.0)));
    REQUIRE(CorrelationModel::pareto_ii(1.0, 1.0)(3.0) == Approx(0.25));
    REQUIRE(CorrelationModel::markovian(0.5)(3.0) == Approx(0.125));
    const double hurst = 0.7;
    const auto fgn = CorrelationModel::fgn(hurst);
    for (double tau : {1.0, 2.0, 10.0}) {
        const double h2 = 2.0 * hurst;
        const double expected =
            0.5 * (std::pow(tau - 1.0, h2) - 2.0 * std::pow(tau, h2) + std::pow(tau + 1.0, h2));
        REQUIRE(fgn(tau) == Approx(expected).epsilon(1e-12));
    }
    REQUIRE(CorrelationModel::fgn(0.5)(3.0) == Approx(0.0).margin(1e-14));
}

TEST_CASE("shape limits approach the simpler families", "[correlations]") {
    const auto exp1 = CorrelationModel::weibull(3.0, 1.0);
    const auto burr_limit = CorrelationModel::burr_xii(3.0, 0.7, 1e-9);
    // (1 + c2 u)^(-1/(c1 c2)) -> exp(-u / c1), u = (tau/b)^c1
    const auto weib = CorrelationModel::weibull(3.0 * std::pow(0.7, 1.0 / 0.7), 0.7);
    for (double tau : {1.0, 5.0, 20.0}) {
        REQUIRE(CorrelationModel::pareto_ii(3.0, 1e-9)(tau) == Approx(exp1(tau)).epsilon(1e-6));
        REQUIRE(CorrelationModel::gen_log(3.0, 1e-9)(tau) == Approx(exp1(tau)).epsilon(1e-6));
        REQUIRE(burr_limit(tau) == Approx(weib(tau)).epsilon(1e-6));
    }
}

TEST_CASE("empirical ACS matches a direct computation", "[correlations]") {
    Rng rng(3);
    std::vector<double> x(2000);
    double prev = 0.0;
    for (double& v : x) v = prev = 0.7 * prev + rng.normal();
    const auto fast = empirical_acs(x, 20);
    const auto slow = naive_acs(x, 20);
    REQUIRE(fast.size() == 21);
    for (int k = 0; k <= 20; ++k) REQUIRE(fast[k] == Approx(slow[k]).margin(1e-12));

    std::vector<std::string> warnings;
    empirical_acs(x, 1000, &warnings);
    REQUIRE(warnings.size() == 1);
}

TEST_CASE("cross-correlation sign convention", "[correlations]") {
    Rng rng(4);
    std::vector<double> x(5000), y(5000);
    for (double& v : x) v = rng.normal();
    // y(t) = x(t - 2), so Cor[x(t), y(t + 2)] = 1
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = t >= 2 ? x[t - 2] : 0.0;
    REQUIRE(empirical_cross_correlation(x, y, 2) == Approx(1.0).margin(1e-3));
    REQUIRE(std::abs(empirical_cross_correlation(x, y, -2)) < 0.05);
    REQUIRE(std::abs(empirical_cross_correlation(x, y, 0)) < 0.05);
}

TEST_CASE("constant series has undefined correlation", "[correlations]") {
    const std::vector<double> flat(100, 3.0);
    REQUIRE_THROWS_MATCHES(empirical_acs(flat, 5), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.code() == ErrorCode::UndefinedCorrelation;
                           }));
}

TEST_CASE("ACS fits recover exact targets", "[correlations]") {
    const auto truth = CorrelationModel::weibull(80.6, 0.73);
    std::vector<double> emp{1.0};
    for (double r : truth.head(300)) emp.push_back(r);
    const auto fit = fit_acs(emp, AcsFamily::Weibull);
    REQUIRE(fit.model.params()[0] == Approx(80.6).epsilon(1e-5));
    REQUIRE(fit.model.params()[1] == Approx(0.73).epsilon(1e-5));
    REQUIRE(fit.rms < 1e-7);
    REQUIRE(fit.note.empty());

    // A Markovian target fitted with a heavy-tailed family lands on the limit.
    std::vector<double> markov{1.0};
    for (double r : CorrelationModel::markovian(0.5).head(30)) markov.push_back(r);
    const auto limit = fit_acs(markov, AcsFamily::ParetoII);
    REQUIRE_FALSE(limit.note.empty());
    REQUIRE(limit.max_abs < 1e-3);
}

TEST_CASE("cross structure branches meet at lag zero", "[correlations]") {
    const CrossCorrelationModel both(CorrelationModel::weibull(2.0, 0.8));
    REQUIRE(both(0.0) == Approx(CorrelationModel::weibull(2.0, 0.8)(1.0)));
    REQUIRE(both(2.0) == Approx(both(-2.0)));
    REQUIRE_THROWS_AS(
        CrossCorrelationModel(CorrelationModel::weibull(2.0, 0.8), CorrelationModel::weibull(5.0, 0.8)), Error);
}

TEST_CASE("ACS csv has a header and one row per lag", "[correlations]") {
    std::ostringstream os;
    const std::vector<double> rho{1.0, 0.5, 0.25};
    write_acs_csv(os, rho);
    REQUIRE(os.str() == "lag,rho\n0,1\n1,0.5\n2,0.25\n");
}
