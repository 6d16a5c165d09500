#pragma once

#include "pgsim/correlations.hpp"
#include "pgsim/ctf.hpp"
#include "pgsim/gaussian.hpp"
#include "pgsim/marginal_fit.hpp"
#include "pgsim/marginals.hpp"
#include "pgsim/serialization.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pgsim {

enum class GeneratorKind { ArP, SumAr1 };

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::ArP;
    int param = 0;  // AR order or number of AR(1) components; 0 picks automatically
};

struct ProcessSpec {
    std::string label;
    Marginal marginal;
    std::optional<CorrelationModel> acs;  // required unless the season has cross targets
    GeneratorSpec generator;
    std::optional<CtfFamily> ctf_family;  // default_ctf_family when unset
};

struct CrossTargets {
    Eigen::MatrixXd K0;  // lag-0 correlation among the processes
    Eigen::MatrixXd K1;  // K1(i, j) = Cor[X_i(t), X_j(t-1)]
};

/// One season of a cyclostationary model. A stationary model has a single season.
struct SeasonSpec {
    std::string name = "all";
    std::size_t length = 1;  // consecutive time steps per visit; seasons cycle in order
    std::vector<ProcessSpec> processes;
    std::optional<CrossTargets> cross;
};

struct Thresholds {
    double cdf_gap = 0.005;
    double atom_se = 3.0;
    double acs_tolerance = 0.02;
    int acs_lags = 10;
    double cross_tolerance = 0.03;
};

struct PlanConfig {
    double cutoff = 0.001;  // AR order: last lag before the pGACS drops below this
    int ar_cap = 5000;
    int sum_ar1_lags = 1000;
    CtfOptions ctf;
};

struct ModelSpec {
    std::vector<SeasonSpec> seasons;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    Thresholds thresholds;
    PlanConfig config;

    std::vector<std::string> labels() const;
};

/// Reads the JSON spec document. Processes with a "fit" block are fitted from
/// their data file first; relative data paths resolve against `base_dir`.
ModelSpec model_spec_from_json(const Json& j, const std::string& base_dir = ".");
ModelSpec read_model_spec(const std::string& path);

// ---------------------------------------------------------------------------
// Planning

struct UnivariatePlan {
    std::string label;
    Marginal marginal;
    std::optional<CorrelationModel> target;
    TransformGrid grid;
    CtfCurve curve;
    std::vector<double> pgacs;  // lags 1..p
    std::variant<std::monostate, ArModel, SumAr1Model> generator;  // empty when driven by MAR(1)
    double generator_error = 0.0;  // max-abs ACS error of the sum-of-AR(1) fit
};

struct PairPlan {
    std::size_t i = 0;
    std::size_t k = 0;
    TransformGrid grid;
    CtfCurve curve;
};

struct MultivariatePlan {
    std::vector<PairPlan> pairs;
    Eigen::MatrixXd KX0, KX1, KZ0, KZ1;
    Mar1Model mar;
};

struct SeasonPlan {
    std::string name;
    std::size_t length = 1;
    std::vector<UnivariatePlan> processes;
    std::optional<MultivariatePlan> cross;
};

struct Plan {
    std::vector<SeasonPlan> seasons;
};

/// Grid, curve, pGACS and generator for one process.
UnivariatePlan plan_univariate(const ProcessSpec& spec, const PlanConfig& config = {});

/// Auto curves of every process plus pairwise cross curves; the parent-Gaussian
/// lag matrices and the MAR(1) model. Throws Infeasible naming the pair and its
/// rho_max when a target cannot be reached.
SeasonPlan plan_multivariate(const SeasonSpec& season, const PlanConfig& config = {});

Plan plan(const ModelSpec& spec);

// ---------------------------------------------------------------------------
// Synthesis

struct Synthesis {
    SeriesTable series;    // target processes
    SeriesTable gaussian;  // parent-Gaussian series they were transformed from
};

/// Stream seeds: split_seed(seed, i) for process i, split_seed(seed, 0) for a
/// MAR(1) vector. Season models switch in place on the carried state.
Synthesis synthesize(const Plan& plan, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Verification

struct AtomCheck {
    double value = 0.0;
    double expected = 0.0;
    double observed = 0.0;
    double standard_error = 0.0;
    bool pass = true;
};

struct AcsRow {
    int lag = 0;
    double target = 0.0;
    double empirical = 0.0;
};

struct ProcessReport {
    std::string label;
    std::string season;
    std::size_t n = 0;
    double cdf_gap = 0.0;
    bool cdf_pass = true;
    std::vector<AtomCheck> atoms;
    bool atoms_pass = true;
    std::vector<AcsRow> acs;
    double acs_max_abs = 0.0;
    bool acs_pass = true;

    bool passed() const { return cdf_pass && atoms_pass && acs_pass; }
};

struct CrossReport {
    std::string season;
    Eigen::MatrixXd target0, empirical0, target1, empirical1;
    double max_abs0 = 0.0;
    double max_abs1 = 0.0;
    bool pass = true;
};

struct VerificationReport {
    Thresholds thresholds;
    std::vector<ProcessReport> processes;
    std::vector<CrossReport> cross;

    bool passed() const;
};

/// Max-abs gap between the empirical and target cdf. Continuous values are
/// compared on their order statistics; atoms are left to the frequency check.
double cdf_gap(const Marginal& m, std::span<const double> sample);

/// Compares every labelled series with its season's marginal, ACS and cross
/// targets. Atom standard errors take the larger of the binomial and the
/// batch-means estimate, so persistence in the indicator series is accounted for.
VerificationReport verify(const ModelSpec& spec, const SeriesTable& series);
VerificationReport verify(const ModelSpec& spec, const SeriesTable& series, const Thresholds& thresholds);

Json to_json(const Plan& plan);
Json to_json(const VerificationReport& report);

// ---------------------------------------------------------------------------
// Recipe

struct RecipeOptions {
    std::string out_dir;
    bool svg = false;
    bool json_series = false;  // series.json instead of series.csv
};

struct RecipeResult {
    Plan plan;
    VerificationReport report;
};

/// Plans, synthesizes and verifies; writes plan.json, series.csv, report.json and
/// plotdata/*.csv under out_dir. Errors carry the failing step in the message.
RecipeResult run_recipe(const ModelSpec& spec, const RecipeOptions& options);

}  // namespace pgsim
