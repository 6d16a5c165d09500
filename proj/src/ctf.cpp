#include "pgsim/ctf.hpp"

#include "pgsim/error.hpp"
#include "pgsim/optimize.hpp"
#include "pgsim/rng.hpp"
#include "pgsim/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace pgsim {

namespace {

// Bivariate density below exp(-kBand^2 / 2) relative to its ridge is skipped.
constexpr double kBand = 12.0;

struct AxisRule {
    std::vector<double> z;
    std::vector<double> w;  // Gauss-Legendre weights (no normal density)
    std::vector<double> g;  // g(z) = Q_X(Phi(z))
    double mean = 0.0;
    double second = 0.0;  // E[g^2]
};

/// Half-width of the integration box: the first z >= 8 where the tail
/// contribution of g^2 phi is negligible against E[g^2].
double domain_half_width(const Marginal& m) {
    const Moments mo = moments(m);
    const double scale = mo.variance + mo.mean * mo.mean;
    for (double z = 8.0; z < 37.5; z += 0.5) {
        const double hi = transform(m, z);
        const double lo = transform(m, -z);
        if ((hi * hi + lo * lo) * normal_pdf(z) * z <= 1e-17 * scale) return z;
    }
    return 37.5;
}

std::vector<double> panel_edges(const Marginal& m, double half_width, double h) {
    std::vector<double> edges;
    const int panels = static_cast<int>(std::ceil(2.0 * half_width / h));
    for (int i = 0; i <= panels; ++i) edges.push_back(-half_width + 2.0 * half_width * i / panels);
    for (double a : jump_points(m)) {
        if (a <= -half_width || a >= half_width) continue;
        edges.push_back(a);
        // Geometric grading on both sides: g may have a power-law kink at a jump.
        for (double d : {0.1, 0.01, 0.001}) {
            edges.push_back(a - d * h);
            edges.push_back(a + d * h);
        }
    }
    std::sort(edges.begin(), edges.end());
    std::vector<double> out;
    for (double e : edges) {
        if (e < -half_width || e > half_width) continue;
        if (out.empty() || e - out.back() > 1e-12) out.push_back(e);
    }
    return out;
}

AxisRule axis_rule(const Marginal& m, double half_width, double h, const GaussLegendreRule& gl) {
    AxisRule r;
    const std::vector<double> edges = panel_edges(m, half_width, h);
    const std::size_t n = gl.nodes.size();
    r.z.reserve((edges.size() - 1) * n);
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double mid = 0.5 * (edges[p] + edges[p + 1]);
        const double half = 0.5 * (edges[p + 1] - edges[p]);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = mid + half * gl.nodes[i];
            const double g = transform(m, z);
            const double w = half * gl.weights[i];
            r.z.push_back(z);
            r.w.push_back(w);
            r.g.push_back(g);
            const double d = w * normal_pdf(z);
            r.mean += d * g;
            r.second += d * g * g;
        }
    }
    return r;
}

/// E[g1(Z1) g2(Z2)] with Corr(Z1, Z2) = rho, plus the per-axis moments from the
/// same rule so that normalization errors cancel.
struct Expectations {
    double cross = 0.0;
    double mean1 = 0.0, second1 = 0.0;
    double mean2 = 0.0, second2 = 0.0;
};

Expectations tensor_expectation(const Marginal& m1, const Marginal& m2, double rho, int nodes,
                                const CtfOptions& options) {
    const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
    const double h = options.panel_width * std::min(1.0, 2.0 * s);
    const double half_width = std::max(domain_half_width(m1), domain_half_width(m2));
    const GaussLegendreRule gl = gauss_legendre(nodes);
    const AxisRule a = axis_rule(m1, half_width, h, gl);
    const AxisRule b = axis_rule(m2, half_width, h, gl);

    const double norm = 1.0 / (2.0 * std::numbers::pi * s);
    const double inv = 1.0 / (2.0 * s * s);
    double total = 0.0;
    for (std::size_t i = 0; i < a.z.size(); ++i) {
        if (a.g[i] == 0.0) continue;
        const double x = a.z[i];
        const double centre = rho * x;
        const auto lo = std::lower_bound(b.z.begin(), b.z.end(), centre - kBand * s);
        const auto hi = std::upper_bound(lo, b.z.end(), centre + kBand * s);
        double row = 0.0;
        for (auto it = lo; it != hi; ++it) {
            const std::size_t j = static_cast<std::size_t>(it - b.z.begin());
            const double y = b.z[j];
            // x^2 - 2 rho x y + y^2 = (y - rho x)^2 + s^2 x^2
            const double d = y - centre;
            row += b.w[j] * b.g[j] * std::exp(-d * d * inv);
        }
        total += a.w[i] * a.g[i] * row * std::exp(-0.5 * x * x);
    }
    return {total * norm, a.mean, a.second, b.mean, b.second};
}

double lattice_cross_moment(const std::vector<double>& a, const std::vector<double>& b, double rho) {
    // X = #{k : Z > a_k} gives E[X1 X2] = sum_k sum_l P(Z1 > a_k, Z2 > b_l).
    double total = 0.0;
    for (double ak : a)
        for (double bl : b) total += bivariate_normal_upper(ak, bl, rho);
    return total;
}

double correlation_once(const Marginal& m1, const Marginal& m2, double rho, int nodes,
                        const CtfOptions& options) {
    const Expectations e = tensor_expectation(m1, m2, rho, nodes, options);
    const double v1 = e.second1 - e.mean1 * e.mean1;
    const double v2 = e.second2 - e.mean2 * e.mean2;
    require(v1 > 0.0 && v2 > 0.0, ErrorCode::UndefinedCorrelation,
            "degenerate marginal: zero variance in the transformation integral");
    return (e.cross - e.mean1 * e.mean2) / std::sqrt(v1 * v2);
}

void check_inputs(const Marginal& mi, const Marginal& mk, double rho_z) {
    require(rho_z >= 0.0 && rho_z < 1.0, ErrorCode::Domain,
            "parent-Gaussian correlation must lie in [0, 1), got " + std::to_string(rho_z));
    for (const Marginal* m : {&mi, &mk}) {
        if (!has_finite_variance(*m)) {
            fail(ErrorCode::InfiniteMoment,
                 describe(*m) + " has infinite variance; its correlation is undefined");
        }
    }
}

}  // namespace

double ccti_evaluate(const Marginal& mi, const Marginal& mk, double rho_z, const CtfOptions& options) {
    check_inputs(mi, mk, rho_z);
    if (rho_z == 0.0) return 0.0;

    if (is_lattice(mi) && is_lattice(mk)) {
        const Moments a = moments(mi);
        const Moments b = moments(mk);
        require(a.variance > 0.0 && b.variance > 0.0, ErrorCode::UndefinedCorrelation,
                "degenerate marginal: zero variance");
        const double cross = lattice_cross_moment(jump_points(mi), jump_points(mk), rho_z);
        return (cross - a.mean * b.mean) / std::sqrt(a.variance * b.variance);
    }

    // Order the pair canonically so the result is exactly symmetric.
    const bool swap = describe(mk) < describe(mi);
    const Marginal& m1 = swap ? mk : mi;
    const Marginal& m2 = swap ? mi : mk;

    const double coarse = correlation_once(m1, m2, rho_z, options.nodes, options);
    if (!options.check_convergence) return coarse;
    const double fine = correlation_once(m1, m2, rho_z, 2 * options.nodes, options);
    const double gap = std::abs(fine - coarse);
    if (gap > options.tolerance) {
        std::ostringstream os;
        os << "transformation integral for " << describe(mi) << " / " << describe(mk) << " at rho_Z = "
           << rho_z << " did not converge: node doubling changed rho_X by " << gap << " (target "
           << options.tolerance << ")";
        fail(ErrorCode::Integration, os.str());
    }
    return fine;
}

double acti_evaluate(const Marginal& m, double rho_z, const CtfOptions& options) {
    return ccti_evaluate(m, m, rho_z, options);
}

MonteCarloEstimate ccti_monte_carlo(const Marginal& mi, const Marginal& mk, double rho_z, std::size_t n,
                                    std::uint64_t seed, std::size_t batches) {
    require(batches >= 2 && n >= 2 * batches, ErrorCode::Input, "Monte-Carlo oracle: too few samples");
    Rng rng(seed);
    const double s = std::sqrt((1.0 - rho_z) * (1.0 + rho_z));
    const std::size_t per = n / batches;

    struct Sums {
        double x = 0, y = 0, xx = 0, yy = 0, xy = 0, n = 0;
        void add(double a, double b) {
            x += a; y += b; xx += a * a; yy += b * b; xy += a * b; n += 1;
        }
        double corr() const {
            const double mx = x / n, my = y / n;
            const double cov = xy / n - mx * my;
            return cov / std::sqrt((xx / n - mx * mx) * (yy / n - my * my));
        }
    };
    // Accumulate around a pilot mean to limit cancellation for large-valued marginals.
    const double shift_x = moments(mi).mean;
    const double shift_y = moments(mk).mean;
    Sums all;
    std::vector<double> batch_values;
    batch_values.reserve(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        Sums part;
        for (std::size_t i = 0; i < per; ++i) {
            const double z1 = rng.normal();
            const double z2 = rho_z * z1 + s * rng.normal();
            const double x = transform(mi, z1) - shift_x;
            const double y = transform(mk, z2) - shift_y;
            part.add(x, y);
            all.add(x, y);
        }
        batch_values.push_back(part.corr());
    }
    double mean = 0.0;
    for (double v : batch_values) mean += v;
    mean /= static_cast<double>(batches);
    double ss = 0.0;
    for (double v : batch_values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(batches - 1));
    return {all.corr(), sd / std::sqrt(static_cast<double>(batches))};
}

std::vector<double> grid_abscissae(GridKind kind) {
    std::vector<double> r = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    if (kind == GridKind::Cross) r.push_back(0.99);
    return r;
}

TransformGrid build_grid(const Marginal& mi, const std::optional<Marginal>& mk, GridKind kind,
                         const CtfOptions& options) {
    const Marginal& other = mk ? *mk : mi;
    TransformGrid grid;
    grid.points.push_back({0.0, 0.0});
    for (double rz : grid_abscissae(kind)) {
        const double rx = ccti_evaluate(mi, other, rz, options);
        if (rx > rz + 5e-3) {
            fail(ErrorCode::Integration, "transformation integral gave rho_X = " + std::to_string(rx) +
                                             " above rho_Z = " + std::to_string(rz));
        }
        if (rx < grid.points.back().rho_x) {
            fail(ErrorCode::Integration, "transformation grid is not monotone at rho_Z = " +
                                             std::to_string(rz));
        }
        grid.points.push_back({rz, rx});
    }
    return grid;
}

std::string_view ctf_family_name(CtfFamily family) {
    switch (family) {
        case CtfFamily::Identity: return "Identity";
        case CtfFamily::Rational: return "Rational";
        case CtfFamily::Kumaraswamy: return "Kumaraswamy";
        case CtfFamily::Cross: return "Cross";
    }
    return "?";
}

CtfFamily ctf_family_from_name(std::string_view name) {
    for (CtfFamily f : {CtfFamily::Identity, CtfFamily::Rational, CtfFamily::Kumaraswamy, CtfFamily::Cross}) {
        if (ctf_family_name(f) == name) return f;
    }
    fail(ErrorCode::Input, "unknown transformation curve family '" + std::string(name) + "'");
}

CtfCurve CtfCurve::make(CtfFamily family, double b, double c) {
    CtfCurve curve;
    curve.family = family;
    curve.b = b;
    curve.c = c;
    switch (family) {
        case CtfFamily::Identity:
            break;
        case CtfFamily::Rational:
            require(b > 0.0 && c >= 0.0, ErrorCode::ParameterDomain, "Rational curve needs b > 0, c >= 0");
            break;
        case CtfFamily::Kumaraswamy:
            require(b > 0.0 && b <= 1.0 && c >= 1.0, ErrorCode::ParameterDomain,
                    "Kumaraswamy curve needs 0 < b <= 1, c >= 1");
            break;
        case CtfFamily::Cross:
            require(b > 0.0 && c > 0.0, ErrorCode::ParameterDomain, "Cross curve needs b > 0, c > 0");
            curve.rho_max = (std::exp2(1.0 / c) - 1.0) / b;
            break;
    }
    return curve;
}

namespace {

double curve_value(CtfFamily family, double b, double c, double x) {
    switch (family) {
        case CtfFamily::Identity: return x;
        case CtfFamily::Rational: {
            const double k = 1.0 - c;
            const double num = std::log1p(b * x);
            const double den = std::log1p(b);
            if (std::abs(k) < 1e-9) return num / den;  // c = 1 limit
            return std::expm1(k * num) / std::expm1(k * den);
        }
        case CtfFamily::Kumaraswamy:
            return -std::expm1(c * std::log1p(-std::pow(x, b)));
        case CtfFamily::Cross: return std::expm1(c * std::log1p(b * x));
    }
    return x;
}

}  // namespace

CtfCurve fit_ctf(const TransformGrid& grid, CtfFamily family) {
    require(grid.points.size() >= 3, ErrorCode::Input, "transformation grid needs at least 3 points");
    for (std::size_t i = 1; i < grid.points.size(); ++i) {
        require(grid.points[i].rho_x >= grid.points[i - 1].rho_x && grid.points[i].rho_z > grid.points[i - 1].rho_z,
                ErrorCode::Input, "transformation grid must be monotone");
    }
    if (family == CtfFamily::Identity) {
        CtfCurve id = CtfCurve::identity();
        double ss = 0.0;
        for (const auto& p : grid.points) ss += (p.rho_x - p.rho_z) * (p.rho_x - p.rho_z);
        id.residual_rms = std::sqrt(ss / static_cast<double>(grid.points.size()));
        return id;
    }

    auto decode = [family](const std::vector<double>& t) -> std::pair<double, double> {
        switch (family) {
            case CtfFamily::Kumaraswamy:
                return {std::min(1.0, std::exp(t[0])), 1.0 + std::exp(t[1])};
            default:
                return {std::exp(t[0]), std::exp(t[1])};
        }
    };
    const Objective loss = [&](const std::vector<double>& t) {
        const auto [b, c] = decode(t);
        double ss = 0.0;
        for (const auto& p : grid.points) {
            const double r = curve_value(family, b, c, p.rho_x) - p.rho_z;
            ss += r * r;
        }
        return ss;
    };

    std::vector<std::vector<double>> starts;
    for (double b : {0.1, 1.0, 10.0}) {
        for (double c : {0.3, 1.0, 3.0}) {
            if (family == CtfFamily::Kumaraswamy) {
                starts.push_back({std::log(std::min(b, 0.9)), std::log(c)});
            } else {
                starts.push_back({std::log(b), std::log(c)});
            }
        }
    }
    NelderMeadOptions nm;
    nm.x_tolerance = 1e-11;
    nm.restarts = 4;
    const MinimizeResult best = multi_start_minimize(loss, starts, nm);
    require(std::isfinite(best.value), ErrorCode::Fit, "transformation curve fit failed");

    const auto [b, c] = decode(best.x);
    CtfCurve curve = CtfCurve::make(family, b, c);
    curve.residual_rms = std::sqrt(best.value / static_cast<double>(grid.points.size()));
    if (curve.residual_rms > 0.01) {
        std::ostringstream os;
        os << "poor " << ctf_family_name(family) << " fit: residual RMS " << curve.residual_rms
           << " exceeds 0.01";
        curve.warning = os.str();
    }
    return curve;
}

double ctf_apply(const CtfCurve& curve, double rho_x) {
    require(rho_x >= 0.0 && rho_x <= 1.0, ErrorCode::Domain,
            "target correlation must lie in [0, 1], got " + std::to_string(rho_x));
    if (curve.family == CtfFamily::Cross) {
        const double limit = rho_max(curve);
        if (rho_x > limit + 1e-12) {
            std::ostringstream os;
            os << "target cross-correlation " << rho_x << " exceeds the attainable maximum rho_max = "
               << limit;
            fail(ErrorCode::Infeasible, os.str());
        }
    }
    return std::clamp(curve_value(curve.family, curve.b, curve.c, rho_x), 0.0, 1.0);
}

std::vector<double> ctf_apply(const CtfCurve& curve, const CorrelationModel& target, int max_lag) {
    std::vector<double> out = target.head(max_lag);
    for (double& r : out) r = ctf_apply(curve, r);
    return out;
}

double rho_max(const CtfCurve& curve) {
    require(curve.family == CtfFamily::Cross, ErrorCode::Input, "rho_max is defined for Cross curves only");
    return (std::exp2(1.0 / curve.c) - 1.0) / curve.b;
}

CtfFamily default_ctf_family(const Marginal& mi, const std::optional<Marginal>& mk) {
    auto gaussian = [](const Marginal& m) {
        const auto* d = std::get_if<MarginalModel>(&m);
        return d && d->family() == Family::Gaussian;
    };
    if (gaussian(mi) && (!mk || gaussian(*mk))) return CtfFamily::Identity;
    if (mk && !(*mk == mi)) return CtfFamily::Cross;
    return is_lattice(mi) ? CtfFamily::Kumaraswamy : CtfFamily::Rational;
}

void write_grid_csv(std::ostream& out, const TransformGrid& grid) {
    out << "rho_z,rho_x\n";
    out.precision(17);
    for (const auto& p : grid.points) out << p.rho_z << ',' << p.rho_x << '\n';
}

void write_curve_csv(std::ostream& out, const CtfCurve& curve, int samples) {
    out << "rho_x,rho_z\n";
    out.precision(17);
    const double limit = curve.rho_max ? std::min(1.0, *curve.rho_max) : 1.0;
    for (int i = 0; i < samples; ++i) {
        const double x = limit * i / (samples - 1);
        out << x << ',' << ctf_apply(curve, x) << '\n';
    }
}

}  // namespace pgsim
