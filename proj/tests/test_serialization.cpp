#include <catch2/catch_amalgamated.hpp>

#include "pgsim/error.hpp"
#include "pgsim/serialization.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

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

SeriesTable parse(const std::string& text) {
    std::istringstream in(text);
    return read_series_csv(in);
}

}  // namespace

TEST_CASE("marginals round-trip through JSON", "[serialization]") {
    const std::vector<Marginal> all{
        MarginalModel::burr_xii(2.13, 0.74, 0.22),
        MixedMarginal(0.78, MarginalModel::gen_gamma(16.5, 0.39, 0.97)),
        MarginalModel::bernoulli(0.25),
        MarginalModel::polya_aeppli(2.0, 0.3),
    };
    for (const auto& m : all) {
        const Json j = to_json(m);
        REQUIRE(j.contains("family"));
        const Marginal back = marginal_from_json(Json::parse(j.dump()));
        REQUIRE(describe(back) == describe(m));
        REQUIRE(quantile(back, 0.9) == quantile(m, 0.9));
    }
    REQUIRE(to_json(all[1])["p0"] == 0.78);
    REQUIRE_FALSE(to_json(all[0]).contains("p0"));
    REQUIRE(code_of([] { marginal_from_json(Json{{"family", "Nope"}, {"params", {1.0}}}); }) == ErrorCode::Input);
}

TEST_CASE("models round-trip through JSON", "[serialization]") {
    const auto acs = CorrelationModel::burr_xii(3.0, 0.8, 0.5);
    REQUIRE(correlation_from_json(to_json(acs)) == acs);

    const auto curve = CtfCurve::make(CtfFamily::Cross, 1.5, 0.8);
    const auto curve_back = ctf_curve_from_json(to_json(curve));
    REQUIRE(curve_back.family == CtfFamily::Cross);
    REQUIRE(curve_back.b == curve.b);
    REQUIRE(curve_back.c == curve.c);
    REQUIRE(curve_back.rho_max.value() == Approx(curve.rho_max.value()));

    const ArModel ar{{0.5, -0.1, 0.05}, 0.7};
    const ArModel ar_back = ar_model_from_json(to_json(ar));
    REQUIRE(ar_back.coeffs == ar.coeffs);
    REQUIRE(ar_back.noise_var == ar.noise_var);

    const SumAr1Model sum{{{0.9, 0.3}, {0.2, 0.7}}};
    const SumAr1Model sum_back = sum_ar1_from_json(to_json(sum));
    REQUIRE(sum_back.components.size() == 2);
    REQUIRE(sum_back.acs(3.0) == sum.acs(3.0));

    Eigen::MatrixXd K0(2, 2), K1(2, 2);
    K0 << 1.0, 0.5, 0.5, 1.0;
    K1 << 0.4, 0.2, 0.1, 0.3;
    REQUIRE(matrix_from_json(matrix_to_json(K1)) == K1);
    REQUIRE(matrix_to_json(K1)[1][0] == 0.1);
    const Mar1Model mar = fit_mar1(K0, K1);
    const Mar1Model mar_back = mar1_from_json(Json::parse(to_json(mar).dump()));
    REQUIRE(mar_back.A == mar.A);
    REQUIRE(mar_back.B == mar.B);
}

TEST_CASE("series CSV round-trips exactly", "[serialization]") {
    SeriesTable t{{"rain", "wind"},
                  {{0.0, 1.0 / 3.0, 1e-300, 12345.678}, {std::numeric_limits<double>::max(), -2.5, 0.1, 7.0}}};
    std::ostringstream os;
    write_series_csv(os, t);
    REQUIRE(os.str().rfind("rain,wind\n", 0) == 0);
    std::istringstream in(os.str());
    const SeriesTable back = read_series_csv(in);
    REQUIRE(back.names == t.names);
    REQUIRE(back.columns == t.columns);
    REQUIRE(back.rows() == 4);
    REQUIRE(back.column("wind")[1] == -2.5);
    REQUIRE_THROWS_AS(back.column("humidity"), Error);
}

TEST_CASE("malformed CSV is a parse error", "[serialization]") {
    REQUIRE(code_of([] { parse("a,b\n1,2\n3\n"); }) == ErrorCode::Parse);
    REQUIRE(code_of([] { parse("a\n1\nxyz\n"); }) == ErrorCode::Parse);
    REQUIRE(code_of([] { parse("a\n1.5abc\n"); }) == ErrorCode::Parse);
    REQUIRE(code_of([] { read_series_csv_file("/nonexistent/series.csv"); }) == ErrorCode::NotFound);
    REQUIRE(code_of([] { read_json_file("/nonexistent/spec.json"); }) == ErrorCode::NotFound);
}
