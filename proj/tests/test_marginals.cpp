#include <catch2/catch_amalgamated.hpp>

#include "pgsim/error.hpp"
#include "pgsim/marginals.hpp"
#include "pgsim/special.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

using namespace pgsim;
using Catch::Approx;

namespace {

std::vector<MarginalModel> continuous_models() {
    return {
        MarginalModel::gaussian(1.5, 2.0),
        MarginalModel::weibull(1.0, 0.25),
        MarginalModel::weibull(5.0, 1.2),
        MarginalModel::gen_gamma(16.5, 0.39, 0.97),
        MarginalModel::gen_gamma(4.4, 2.66, 1.76),
        MarginalModel::burr_xii(2.13, 0.74, 0.22),
        MarginalModel::burr_iii(40.5, 12.6, 0.37),
        MarginalModel::pareto_ii(1.0, 0.3),
        MarginalModel::beta(16.1, 2.3),
        MarginalModel::kumaraswamy(11.0, 5.0),
    };
}

// E[g(Z)] and E[g(Z)^2] by adaptive Gauss-Kronrod in z, split where g jumps.
Moments oracle_moments(const Marginal& m) {
    std::vector<double> cuts{-40.0};
    const double p0 = zero_probability(m);
    if (p0 > 0.0) cuts.push_back(normal_quantile(p0));
    cuts.push_back(40.0);
    double e1 = 0.0, e2 = 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        e1 += GK::integrate([&](double z) { return transform(m, z) * normal_pdf(z); }, cuts[i], cuts[i + 1], 20, 1e-13);
        e2 += GK::integrate([&](double z) { return std::pow(transform(m, z), 2) * normal_pdf(z); }, cuts[i],
                            cuts[i + 1], 20, 1e-13);
    }
    return {e1, e2 - e1 * e1};
}

}  // namespace

TEST_CASE("quantile inverts the cdf for every continuous family", "[marginals]") {
    for (const auto& m : continuous_models()) {
        INFO(m.describe());
        for (double u : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-9}) {
            const double x = m.quantile(u);
            REQUIRE(m.cdf(x) == Approx(u).epsilon(1e-9));
        }
        for (double q : {1e-15, 1e-8, 0.2}) {
            REQUIRE(m.sf(m.upper_quantile(q)) == Approx(q).epsilon(1e-8));
        }
    }
}

TEST_CASE("cdf plus survival is one and the density is the cdf slope", "[marginals]") {
    for (const auto& m : continuous_models()) {
        INFO(m.describe());
        for (double u : {0.05, 0.5, 0.95}) {
            const double x = m.quantile(u);
            REQUIRE(m.cdf(x) + m.sf(x) == Approx(1.0).epsilon(1e-14));
            const double h = 1e-6 * (x != 0.0 ? std::abs(x) : 1.0);
            const double slope = (m.cdf(x + h) - m.cdf(x - h)) / (2.0 * h);
            REQUIRE(m.pdf(x) == Approx(slope).epsilon(1e-5));
        }
    }
}

TEST_CASE("closed-form moments agree with an independent integral", "[marginals]") {
    std::vector<Marginal> all;
    for (const auto& m : continuous_models()) all.emplace_back(m);
    all.emplace_back(MixedMarginal(0.78, MarginalModel::gen_gamma(16.5, 0.39, 0.97)));
    all.emplace_back(MixedMarginal(0.7, MarginalModel::burr_xii(2.0, 0.9, 0.2)));
    for (const auto& m : all) {
        INFO(describe(m));
        const Moments closed = moments(m);
        const Moments oracle = oracle_moments(m);
        REQUIRE(closed.mean == Approx(oracle.mean).epsilon(1e-7));
        REQUIRE(closed.variance == Approx(oracle.variance).epsilon(1e-6));
        const Moments quad = quadrature_moments(m);
        REQUIRE(quad.mean == Approx(closed.mean).epsilon(1e-8));
        REQUIRE(quad.variance == Approx(closed.variance).epsilon(1e-7));
    }
}

TEST_CASE("infinite variance is reported, not computed", "[marginals]") {
    const MarginalModel heavy = MarginalModel::burr_xii(1.0, 1.0, 0.6);
    REQUIRE_FALSE(heavy.has_finite_variance());
    REQUIRE_THROWS_MATCHES(heavy.moments(), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.code() == ErrorCode::InfiniteMoment;
                           }));
    REQUIRE_FALSE(MarginalModel::pareto_ii(1.0, 0.5).has_finite_variance());
    REQUIRE(MarginalModel::pareto_ii(1.0, 0.49).has_finite_variance());
}

TEST_CASE("parameter domains are enforced", "[marginals]") {
    auto code_of = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Input;
    };
    REQUIRE(code_of([] { MarginalModel::weibull(-1.0, 2.0); }) == ErrorCode::ParameterDomain);
    REQUIRE(code_of([] { MarginalModel::beta(1.0, 0.0); }) == ErrorCode::ParameterDomain);
    REQUIRE(code_of([] { MarginalModel(Family::GenGamma, {1.0, 2.0}); }) == ErrorCode::ParameterDomain);
    REQUIRE(code_of([] { MixedMarginal(1.0, MarginalModel::weibull(1.0, 1.0)); }) == ErrorCode::ParameterDomain);
    REQUIRE(code_of([] { MarginalModel::weibull(1.0, 1.0).quantile(1.5); }) == ErrorCode::Domain);
}

TEST_CASE("mixed marginal places an atom at zero", "[marginals]") {
    const Marginal m = MixedMarginal(0.78, MarginalModel::gen_gamma(16.5, 0.39, 0.97));
    REQUIRE(cdf(m, 0.0) == Approx(0.78));
    REQUIRE(quantile(m, 0.5) == 0.0);
    REQUIRE(quantile(m, 0.78) == 0.0);
    REQUIRE(quantile(m, 0.9) > 0.0);
    REQUIRE(cdf(m, quantile(m, 0.9)) == Approx(0.9).epsilon(1e-10));
    REQUIRE(zero_probability(m) == Approx(0.78));
    REQUIRE(has_atoms(m));
    REQUIRE_FALSE(is_lattice(m));
    const auto jumps = jump_points(m);
    REQUIRE(jumps.size() == 1);
    REQUIRE(jumps[0] == Approx(normal_quantile(0.78)).epsilon(1e-12));
}

TEST_CASE("Bernoulli and Polya-Aeppli are lattice marginals", "[marginals]") {
    const MarginalModel b = MarginalModel::bernoulli(0.25);
    REQUIRE(b.quantile(0.2) == 0.0);
    REQUIRE(b.quantile(0.3) == 1.0);
    REQUIRE(b.moments().mean == Approx(0.75));
    REQUIRE(b.moments().variance == Approx(0.1875));
    REQUIRE(is_lattice(b));

    const double lambda = 2.0, p = 0.3;
    const MarginalModel pa = MarginalModel::polya_aeppli(lambda, p);
    double total = 0.0, mean = 0.0, second = 0.0, prev = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double c = pa.cdf(k);
        const double pmf = c - prev;
        prev = c;
        total += pmf;
        mean += k * pmf;
        second += double(k) * k * pmf;
    }
    REQUIRE(total == Approx(1.0).epsilon(1e-13));
    REQUIRE(mean == Approx(lambda / (1.0 - p)).epsilon(1e-12));
    REQUIRE(second - mean * mean == Approx(lambda * (1.0 + p) / ((1.0 - p) * (1.0 - p))).epsilon(1e-11));
    REQUIRE(pa.cdf(0) == Approx(std::exp(-lambda)).epsilon(1e-14));
    REQUIRE(pa.moments().mean == Approx(mean).epsilon(1e-12));
}

TEST_CASE("transform is monotone and finite far in the tails", "[marginals]") {
    std::vector<Marginal> all;
    for (const auto& m : continuous_models()) all.emplace_back(m);
    all.emplace_back(MixedMarginal(0.9, MarginalModel::pareto_ii(1.0, 0.3)));
    all.emplace_back(MarginalModel::polya_aeppli(2.0, 0.3));
    for (const auto& m : all) {
        INFO(describe(m));
        double last = -std::numeric_limits<double>::infinity();
        for (double z = -37.5; z <= 37.5; z += 0.25) {
            const double x = transform(m, z);
            REQUIRE(std::isfinite(x));
            REQUIRE(x >= last);
            last = x;
        }
    }
}
