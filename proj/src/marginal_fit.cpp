#include "pgsim/marginal_fit.hpp"

#include "pgsim/error.hpp"
#include "pgsim/optimize.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pgsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Summary {
    double mean = 0.0;
    double variance = 0.0;
    double min = 0.0;
    double max = 0.0;
};

Summary summarize(std::span<const double> x) {
    Summary s;
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.variance = x.size() > 1 ? ss / static_cast<double>(x.size() - 1) : 0.0;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

void check_support(Family family, const Summary& s) {
    const std::string name(family_name(family));
    switch (family) {
        case Family::Gaussian: return;
        case Family::Beta:
        case Family::Kumaraswamy:
            require(s.min > 0.0 && s.max < 1.0, ErrorCode::Support,
                    name + " needs data strictly inside (0,1)");
            return;
        case Family::Bernoulli:
        case Family::PolyaAeppli:
            return;
        default:
            require(s.min > 0.0, ErrorCode::Support,
                    name + " needs strictly positive data; use the mixed option when zeros are present");
    }
}

MarginalModel from_log(Family family, const std::vector<double>& t) {
    std::vector<double> p(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = std::exp(t[i]);
    return MarginalModel(family, std::move(p));
}

std::vector<std::vector<double>> start_points(Family family, const Summary& s) {
    const double scale = std::log(std::max(s.mean, 1e-12));
    std::vector<std::vector<double>> starts;
    const std::vector<double> shapes = {std::log(0.3), 0.0, std::log(3.0)};
    switch (parameter_count(family)) {
        case 2:
            if (family == Family::Beta) {
                // Method-of-moments estimate is close enough for a single start.
                const double common = s.mean * (1.0 - s.mean) / s.variance - 1.0;
                if (common > 0.0) {
                    starts.push_back({std::log(s.mean * common), std::log((1.0 - s.mean) * common)});
                } else {
                    starts.push_back({0.0, 0.0});
                }
            } else if (family == Family::Kumaraswamy) {
                for (double a : shapes)
                    for (double b : shapes) starts.push_back({a, b});
            } else if (family == Family::ParetoII) {
                for (double g : {std::log(0.05), std::log(0.2), std::log(0.45)}) starts.push_back({scale, g});
            } else {
                for (double g : shapes) starts.push_back({scale, g});
            }
            break;
        case 3: {
            std::vector<double> second = {std::log(0.5), 0.0, std::log(2.0)};
            std::vector<double> third = (family == Family::GenGamma)
                                            ? std::vector<double>{std::log(0.5), 0.0, std::log(2.0)}
                                            : std::vector<double>{std::log(0.05), std::log(0.2), std::log(0.4)};
            for (double a : second)
                for (double b : third) starts.push_back({scale, a, b});
            break;
        }
        default:
            break;
    }
    return starts;
}

double safe_objective(const std::function<double()>& body) {
    try {
        const double v = body();
        return std::isfinite(v) ? v : kInf;
    } catch (const std::exception&) {
        return kInf;
    }
}

MarginalFit fit_continuous(std::span<const double> x, Family family, FitMethod method) {
    const Summary s = summarize(x);
    check_support(family, s);

    if (family == Family::Gaussian) {
        if (method == FitMethod::MaximumLikelihood) {
            const double n = static_cast<double>(x.size());
            const double sd = std::sqrt(s.variance * (n - 1.0) / n);
            return {MarginalModel::gaussian(s.mean, sd), 0.0, x.size()};
        }
        const auto l = sample_l_moments(x);
        return {MarginalModel::gaussian(l[0], l[1] * std::sqrt(std::acos(-1.0))), 0.0, x.size()};
    }

    Objective objective;
    std::array<double, 4> target{};
    if (method == FitMethod::LMoments) {
        target = sample_l_moments(x);
        const bool three = parameter_count(family) == 3;
        objective = [&, three](const std::vector<double>& t) {
            return safe_objective([&] {
                const auto m = model_l_moments(from_log(family, t));
                const double r1 = (m[0] - target[0]) / target[1];
                const double r2 = (m[1] - target[1]) / target[1];
                const double r3 = three ? (m[2] - target[2]) : 0.0;
                return r1 * r1 + r2 * r2 + r3 * r3;
            });
        };
    } else {
        objective = [&](const std::vector<double>& t) {
            return safe_objective([&] {
                const MarginalModel m = from_log(family, t);
                double nll = 0.0;
                for (double v : x) {
                    const double f = m.pdf(v);
                    if (!(f > 0.0)) return kInf;
                    nll -= std::log(f);
                }
                return nll;
            });
        };
    }

    NelderMeadOptions nm;
    nm.max_evaluations = 4000;
    nm.x_tolerance = 1e-9;
    const MinimizeResult best = multi_start_minimize(objective, start_points(family, s), nm);
    if (!std::isfinite(best.value)) {
        fail(ErrorCode::Fit, std::string(family_name(family)) + ": no feasible parameters found");
    }
    return {from_log(family, best.x), best.value, x.size()};
}

MarginalFit fit_discrete(std::span<const double> x, Family family, FitMethod method) {
    for (double v : x) {
        require(v >= 0.0 && v == std::floor(v), ErrorCode::Support,
                std::string(family_name(family)) + " needs nonnegative integer data");
    }
    const double n = static_cast<double>(x.size());
    if (family == Family::Bernoulli) {
        double zeros = 0.0;
        for (double v : x) {
            require(v <= 1.0, ErrorCode::Support, "Bernoulli needs 0/1 data");
            if (v == 0.0) zeros += 1.0;
        }
        return {MarginalModel::bernoulli(zeros / n), 0.0, x.size()};
    }

    const Summary s = summarize(x);
    require(s.mean > 0.0, ErrorCode::Fit, "PolyaAeppli: all values are zero");
    // Moments: mean = lambda / (1 - p), variance / mean = (1 + p) / (1 - p).
    const double dispersion = s.variance / s.mean;
    const double p = std::clamp((dispersion - 1.0) / (dispersion + 1.0), 0.0, 0.99);
    const double lambda = s.mean * (1.0 - p);
    if (method == FitMethod::LMoments) {
        return {MarginalModel::polya_aeppli(lambda, p), 0.0, x.size()};
    }

    std::vector<double> counts(static_cast<std::size_t>(s.max) + 1, 0.0);
    for (double v : x) counts[static_cast<std::size_t>(v)] += 1.0;
    Objective nll = [&](const std::vector<double>& t) {
        return safe_objective([&] {
            const double pp = 1.0 / (1.0 + std::exp(-t[1]));
            const MarginalModel m = MarginalModel::polya_aeppli(std::exp(t[0]), pp);
            double total = 0.0;
            for (std::size_t k = 0; k < counts.size(); ++k) {
                if (counts[k] == 0.0) continue;
                const double f = m.pdf(static_cast<double>(k));
                if (!(f > 0.0)) return kInf;
                total -= counts[k] * std::log(f);
            }
            return total;
        });
    };
    const double logit = std::log(std::max(p, 1e-3) / (1.0 - std::max(p, 1e-3)));
    const MinimizeResult best = nelder_mead(nll, {std::log(lambda), logit});
    require(std::isfinite(best.value), ErrorCode::Fit, "PolyaAeppli: likelihood maximization failed");
    return {MarginalModel::polya_aeppli(std::exp(best.x[0]), 1.0 / (1.0 + std::exp(-best.x[1]))),
            best.value, x.size()};
}

}  // namespace

std::array<double, 4> sample_l_moments(std::span<const double> data) {
    require(data.size() >= 4, ErrorCode::Input, "sample L-moments need at least 4 values");
    std::vector<double> x(data.begin(), data.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double j = static_cast<double>(i);
        b0 += x[i];
        b1 += x[i] * j / (n - 1.0);
        b2 += x[i] * j * (j - 1.0) / ((n - 1.0) * (n - 2.0));
        b3 += x[i] * j * (j - 1.0) * (j - 2.0) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    }
    b0 /= n;
    b1 /= n;
    b2 /= n;
    b3 /= n;
    const double l2 = 2.0 * b1 - b0;
    const double l3 = 6.0 * b2 - 6.0 * b1 + b0;
    const double l4 = 20.0 * b3 - 30.0 * b2 + 12.0 * b1 - b0;
    return {b0, l2, l2 != 0.0 ? l3 / l2 : 0.0, l2 != 0.0 ? l4 / l2 : 0.0};
}

std::array<double, 4> model_l_moments(const MarginalModel& model) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    constexpr double kTol = 1e-10;
    std::array<double, 4> lam{};
    auto legendre = [](int r, double u) {
        switch (r) {
            case 0: return 1.0;
            case 1: return 2.0 * u - 1.0;
            case 2: return 6.0 * u * u - 6.0 * u + 1.0;
            default: return 20.0 * u * u * u - 30.0 * u * u + 12.0 * u - 1.0;
        }
    };
    for (int r = 0; r < 4; ++r) {
        auto lower = [&](double u) { return model.quantile(u) * legendre(r, u); };
        auto upper = [&](double q) { return model.upper_quantile(q) * legendre(r, 1.0 - q); };
        lam[static_cast<std::size_t>(r)] =
            integrator.integrate(lower, 0.0, 0.5, kTol) + integrator.integrate(upper, 0.0, 0.5, kTol);
    }
    return {lam[0], lam[1], lam[2] / lam[1], lam[3] / lam[1]};
}

MarginalFit fit_marginal(std::span<const double> data, Family family, const FitOptions& options) {
    require(!data.empty(), ErrorCode::Input, "fit_marginal: empty data");
    for (double v : data) require(std::isfinite(v), ErrorCode::Input, "fit_marginal: non-finite value");

    if (is_discrete(family)) {
        require(!options.mixed, ErrorCode::Input, "the mixed option applies to continuous families only");
        return fit_discrete(data, family, options.method);
    }

    std::vector<double> values;
    double p0 = 0.0;
    if (options.mixed) {
        std::size_t zeros = 0;
        for (double v : data) {
            if (v <= options.zero_threshold) {
                ++zeros;
            } else {
                values.push_back(v);
            }
        }
        p0 = static_cast<double>(zeros) / static_cast<double>(data.size());
        require(values.size() >= 4, ErrorCode::Fit, "mixed fit: fewer than 4 positive values");
    } else {
        values.assign(data.begin(), data.end());
    }

    const Summary s = summarize(values);
    require(s.max > s.min, ErrorCode::Fit, "fit_marginal: degenerate data (all values equal)");

    MarginalFit fit = fit_continuous(values, family, options.method);
    if (options.mixed) fit.model = MixedMarginal(p0, std::get<MarginalModel>(fit.model));
    return fit;
}

}  // namespace pgsim
