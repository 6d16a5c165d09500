#pragma once

#include "pgsim/correlations.hpp"
#include "pgsim/marginals.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pgsim {

/// Options for the correlation-transformation integrals.
///
/// The expectation E[g1(Z1) g2(Z2)] is taken over the standard bivariate normal
/// density on a tensor grid of Gauss-Legendre panels. Panel edges include every
/// jump of g1 / g2 (atoms of the marginal), so the integrand is smooth inside each
/// panel; panel width shrinks with sqrt(1 - rho^2) to follow the diagonal ridge.
struct CtfOptions {
    int nodes = 8;                 // Gauss-Legendre nodes per panel
    double panel_width = 0.5;      // in standard-normal units, before ridge scaling
    double tolerance = 1e-5;       // absolute target on rho_X for the node-doubling check
    bool check_convergence = true;
};

/// Target correlation rho_X produced by a parent-Gaussian correlation rho_Z in [0, 1)
/// when both ends of the pair share the marginal m.
double acti_evaluate(const Marginal& m, double rho_z, const CtfOptions& options = {});

/// Cross version for two marginals. Symmetric in (mi, mk).
double ccti_evaluate(const Marginal& mi, const Marginal& mk, double rho_z, const CtfOptions& options = {});

/// Monte-Carlo estimate of the same quantity from n correlated standard-normal
/// pairs, with a batch-means standard error. Used as an independent oracle.
struct MonteCarloEstimate {
    double value = 0.0;
    double standard_error = 0.0;
};
MonteCarloEstimate ccti_monte_carlo(const Marginal& mi, const Marginal& mk, double rho_z, std::size_t n,
                                    std::uint64_t seed, std::size_t batches = 100);

struct GridPoint {
    double rho_z = 0.0;
    double rho_x = 0.0;
};

enum class GridKind { Auto, Cross };

struct TransformGrid {
    std::vector<GridPoint> points;  // first point is (0, 0)
};

/// Grid abscissae rho_Z: 0.1..0.9 and 0.95 (auto), plus 0.99 (cross).
std::vector<double> grid_abscissae(GridKind kind);

/// Evaluates the transformation integral at every abscissa. Passing mk = nullopt
/// builds the auto grid of mi. Throws Integration when a point breaks the
/// inflation inequality rho_X <= rho_Z + 5e-3 or monotonicity.
TransformGrid build_grid(const Marginal& mi, const std::optional<Marginal>& mk, GridKind kind,
                         const CtfOptions& options = {});

enum class CtfFamily { Identity, Rational, Kumaraswamy, Cross };

std::string_view ctf_family_name(CtfFamily family);
CtfFamily ctf_family_from_name(std::string_view name);

/// Parametric map rho_X -> rho_Z:
///   Rational     ((1 + b rho)^(1-c) - 1) / ((1 + b)^(1-c) - 1),  b > 0, c >= 0
///   Kumaraswamy  1 - (1 - rho^b)^c,                               0 < b <= 1, c >= 1
///   Cross        (1 + b rho)^c - 1,                               b > 0, c > 0
struct CtfCurve {
    CtfFamily family = CtfFamily::Identity;
    double b = 0.0;
    double c = 1.0;
    std::optional<double> rho_max;  // Cross only: the rho_X mapped to rho_Z = 1
    double residual_rms = 0.0;
    std::string warning;

    static CtfCurve identity() { return {}; }
    static CtfCurve make(CtfFamily family, double b, double c);
};

/// Least-squares fit in rho_Z over the grid points. A residual RMS above 0.01
/// sets `warning` but is not an error.
CtfCurve fit_ctf(const TransformGrid& grid, CtfFamily family);

double ctf_apply(const CtfCurve& curve, double rho_x);

/// Parent-Gaussian correlation head for lags 1..max_lag of a target structure.
std::vector<double> ctf_apply(const CtfCurve& curve, const CorrelationModel& target, int max_lag);

/// (2^(1/c) - 1) / b for a Cross curve.
double rho_max(const CtfCurve& curve);

/// Chooses the default curve family for a marginal pair: Identity for Gaussian
/// pairs, Kumaraswamy for binary auto curves, Rational for other auto curves,
/// Cross otherwise.
CtfFamily default_ctf_family(const Marginal& mi, const std::optional<Marginal>& mk);

void write_grid_csv(std::ostream& out, const TransformGrid& grid);

/// Samples the fitted curve at `samples` equally spaced rho_X in [0, limit].
void write_curve_csv(std::ostream& out, const CtfCurve& curve, int samples = 101);

}  // namespace pgsim
