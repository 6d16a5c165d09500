#include "pgsim/correlations.hpp"

#include "pgsim/error.hpp"
#include "pgsim/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace pgsim {

std::string_view acs_family_name(AcsFamily family) {
    switch (family) {
        case AcsFamily::Weibull: return "Weibull";
        case AcsFamily::ParetoII: return "ParetoII";
        case AcsFamily::BurrXII: return "BurrXII";
        case AcsFamily::GenLog: return "GenLog";
        case AcsFamily::FGN: return "FGN";
        case AcsFamily::Markovian: return "Markovian";
    }
    return "?";
}

AcsFamily acs_family_from_name(std::string_view name) {
    for (AcsFamily f : {AcsFamily::Weibull, AcsFamily::ParetoII, AcsFamily::BurrXII, AcsFamily::GenLog,
                        AcsFamily::FGN, AcsFamily::Markovian}) {
        if (acs_family_name(f) == name) return f;
    }
    fail(ErrorCode::Input, "unknown correlation family '" + std::string(name) + "'");
}

std::size_t acs_parameter_count(AcsFamily family) {
    switch (family) {
        case AcsFamily::BurrXII: return 3;
        case AcsFamily::FGN:
        case AcsFamily::Markovian: return 1;
        default: return 2;
    }
}

CorrelationModel::CorrelationModel(AcsFamily family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {
    const std::string name(acs_family_name(family_));
    require(params_.size() == acs_parameter_count(family_), ErrorCode::ParameterDomain,
            name + " ACS expects " + std::to_string(acs_parameter_count(family_)) + " parameters");
    for (double v : params_)
        require(std::isfinite(v), ErrorCode::ParameterDomain, name + " ACS: non-finite parameter");
    switch (family_) {
        case AcsFamily::FGN:
            require(params_[0] > 0.0 && params_[0] < 1.0, ErrorCode::ParameterDomain,
                    "FGN ACS: H must lie in (0,1)");
            break;
        case AcsFamily::Markovian:
            require(params_[0] >= 0.0 && params_[0] < 1.0, ErrorCode::ParameterDomain,
                    "Markovian ACS: rho1 must lie in [0,1)");
            break;
        default:
            for (double v : params_)
                require(v > 0.0, ErrorCode::ParameterDomain, name + " ACS: parameters must be > 0");
    }
}

double CorrelationModel::operator()(double tau) const {
    require(tau >= 0.0, ErrorCode::Domain, "ACS evaluated at negative lag");
    if (tau == 0.0) return 1.0;
    const auto& p = params_;
    switch (family_) {
        case AcsFamily::Weibull: return std::exp(-std::pow(tau / p[0], p[1]));
        case AcsFamily::ParetoII: return std::exp(-std::log1p(p[1] * tau / p[0]) / p[1]);
        case AcsFamily::BurrXII:
            return std::exp(-std::log1p(p[2] * std::pow(tau / p[0], p[1])) / (p[1] * p[2]));
        case AcsFamily::GenLog: return std::exp(-std::log1p(std::log1p(p[1] * tau / p[0])) / p[1]);
        case AcsFamily::FGN: {
            const double h2 = 2.0 * p[0];
            return 0.5 * (std::pow(std::abs(tau - 1.0), h2) - 2.0 * std::pow(tau, h2) +
                          std::pow(tau + 1.0, h2));
        }
        case AcsFamily::Markovian: return std::pow(p[0], tau);
    }
    return 0.0;
}

std::vector<double> CorrelationModel::head(int max_lag) const {
    std::vector<double> out(static_cast<std::size_t>(std::max(max_lag, 0)));
    for (int k = 1; k <= max_lag; ++k) out[static_cast<std::size_t>(k - 1)] = (*this)(k);
    return out;
}

std::string CorrelationModel::describe() const {
    std::ostringstream os;
    os << acs_family_name(family_) << "ACS(";
    for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? ", " : "") << params_[i];
    os << ')';
    return os.str();
}

CrossCorrelationModel::CrossCorrelationModel(CorrelationModel positive, CorrelationModel negative)
    : positive_(std::move(positive)), negative_(std::move(negative)) {
    const double a = positive_(1.0);
    const double b = negative_(1.0);
    require(std::abs(a - b) <= 1e-12, ErrorCode::ParameterDomain,
            "cross-correlation branches disagree at lag 0 (" + std::to_string(a) + " vs " +
                std::to_string(b) + ")");
}

double CrossCorrelationModel::operator()(double tau) const {
    return tau >= 0.0 ? positive_(tau + 1.0) : negative_(1.0 - tau);
}

double acs_eval(const CorrelationModel& model, double tau) { return model(tau); }

double ccs_eval(const CrossCorrelationModel& model, double tau) { return model(tau); }

std::vector<double> empirical_acs(std::span<const double> data, int max_lag,
                                  std::vector<std::string>* warnings) {
    const std::size_t n = data.size();
    require(n >= 10, ErrorCode::Input, "empirical ACS needs at least 10 values");
    require(max_lag >= 0 && static_cast<std::size_t>(max_lag) < n, ErrorCode::Input,
            "empirical ACS: max lag must lie in [0, n)");
    if (warnings && static_cast<std::size_t>(max_lag) * 3 > n) {
        warnings->push_back("max lag " + std::to_string(max_lag) + " exceeds a third of the sample size");
    }
    const double mean = std::accumulate(data.begin(), data.end(), 0.0) / static_cast<double>(n);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = data[i] - mean;
    double c0 = 0.0;
    for (double v : d) c0 += v * v;
    require(c0 > 0.0, ErrorCode::UndefinedCorrelation, "correlation of a constant series is undefined");
    std::vector<double> rho(static_cast<std::size_t>(max_lag) + 1);
    rho[0] = 1.0;
    for (std::size_t k = 1; k < rho.size(); ++k) {
        double ck = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) ck += d[i] * d[i + k];
        rho[k] = ck / c0;
    }
    return rho;
}

double empirical_cross_correlation(std::span<const double> x, std::span<const double> y, int lag) {
    require(x.size() == y.size(), ErrorCode::Input, "cross-correlation: series lengths differ");
    const std::size_t n = x.size();
    require(n >= 2 && static_cast<std::size_t>(std::abs(lag)) < n, ErrorCode::Input,
            "cross-correlation: lag out of range");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += (x[i] - mx) * (x[i] - mx);
        sy += (y[i] - my) * (y[i] - my);
    }
    require(sx > 0.0 && sy > 0.0, ErrorCode::UndefinedCorrelation,
            "correlation of a constant series is undefined");
    double c = 0.0;
    if (lag >= 0) {
        const auto k = static_cast<std::size_t>(lag);
        for (std::size_t i = 0; i + k < n; ++i) c += (x[i] - mx) * (y[i + k] - my);
    } else {
        const auto k = static_cast<std::size_t>(-lag);
        for (std::size_t i = 0; i + k < n; ++i) c += (x[i + k] - mx) * (y[i] - my);
    }
    return c / std::sqrt(sx * sy);
}

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

CorrelationModel decode(AcsFamily family, const std::vector<double>& t) {
    switch (family) {
        case AcsFamily::FGN: return CorrelationModel::fgn(logistic(t[0]));
        case AcsFamily::Markovian: return CorrelationModel::markovian(logistic(t[0]));
        default: {
            std::vector<double> p(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) p[i] = std::exp(t[i]);
            return CorrelationModel(family, std::move(p));
        }
    }
}

std::vector<std::vector<double>> acs_starts(AcsFamily family, std::span<const double> emp) {
    // Characteristic scale: first lag where the empirical ACS drops below 1/e.
    double scale = static_cast<double>(emp.size() - 1);
    for (std::size_t k = 1; k < emp.size(); ++k) {
        if (emp[k] < std::exp(-1.0)) {
            scale = static_cast<double>(k);
            break;
        }
    }
    const double lb = std::log(scale);
    std::vector<std::vector<double>> starts;
    switch (family) {
        case AcsFamily::Weibull:
            for (double c : {0.5, 1.0, 2.0}) starts.push_back({lb, std::log(c)});
            break;
        case AcsFamily::ParetoII:
        case AcsFamily::GenLog:
            for (double c : {0.1, 0.5, 2.0}) starts.push_back({lb, std::log(c)});
            break;
        case AcsFamily::BurrXII:
            for (double c1 : {0.5, 1.0, 2.0})
                for (double c2 : {0.1, 0.5}) starts.push_back({lb, std::log(c1), std::log(c2)});
            break;
        case AcsFamily::FGN:
            for (double h : {0.3, 0.6, 0.9}) starts.push_back({logit(h)});
            break;
        case AcsFamily::Markovian:
            starts.push_back({logit(std::clamp(emp[1], 0.01, 0.99))});
            break;
    }
    return starts;
}

}  // namespace

AcsFit fit_acs(std::span<const double> emp, AcsFamily family, const AcsFitOptions& options) {
    require(emp.size() >= 4, ErrorCode::Input, "fit_acs needs at least 3 lags beyond lag 0");
    std::size_t last = emp.size() - 1;
    if (options.max_lag > 0) last = std::min(last, static_cast<std::size_t>(options.max_lag));
    std::vector<double> weights(last + 1, 1.0);
    if (options.lag_weight_scale > 0.0) {
        for (std::size_t k = 1; k <= last; ++k)
            weights[k] = std::exp(-static_cast<double>(k) / options.lag_weight_scale);
    }

    const Objective objective = [&](const std::vector<double>& t) {
        const CorrelationModel m = decode(family, t);
        double s = 0.0;
        for (std::size_t k = 1; k <= last; ++k) {
            const double r = m(static_cast<double>(k)) - emp[k];
            s += weights[k] * r * r;
        }
        return s;
    };

    NelderMeadOptions nm;
    nm.x_tolerance = 1e-12;
    nm.max_evaluations = 20000;
    nm.restarts = 4;
    const MinimizeResult best = multi_start_minimize(objective, acs_starts(family, emp.first(last + 1)), nm);
    require(std::isfinite(best.value), ErrorCode::Fit, "ACS fit produced no finite objective");

    AcsFit fit{decode(family, best.x), 0.0, 0.0, {}};
    double ss = 0.0;
    for (std::size_t k = 1; k <= last; ++k) {
        const double r = fit.model(static_cast<double>(k)) - emp[k];
        ss += r * r;
        fit.max_abs = std::max(fit.max_abs, std::abs(r));
    }
    fit.rms = std::sqrt(ss / static_cast<double>(last));

    const auto p = fit.model.params();
    const bool markov_limit =
        (family == AcsFamily::ParetoII || family == AcsFamily::GenLog) && p[1] < 1e-4;
    const bool weibull_limit = family == AcsFamily::BurrXII && p[2] < 1e-4;
    if (markov_limit) fit.note = "c -> 0: the fitted structure is the Markovian limit";
    if (weibull_limit) fit.note = "c2 -> 0: the fitted structure is the Weibull limit";

    if (!best.converged && fit.note.empty()) {
        fail(ErrorCode::Fit, "ACS fit did not converge (" + fit.model.describe() +
                                 ", residual rms " + std::to_string(fit.rms) + ")");
    }
    return fit;
}

void write_acs_csv(std::ostream& out, std::span<const double> rho) {
    out << "lag,rho\n";
    out.precision(17);
    for (std::size_t k = 0; k < rho.size(); ++k) out << k << ',' << rho[k] << '\n';
}

}  // namespace pgsim
