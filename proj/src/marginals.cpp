#include "pgsim/marginals.hpp"

#include "pgsim/error.hpp"
#include "pgsim/special.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pgsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Boost evaluates double arguments in long double by default, about 5x slower
// for the inverse functions at no gain in double accuracy.
using NoPromote = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
constexpr NoPromote kNoPromote{};

// Polya-Aeppli support is truncated once the remaining mass drops below this.
constexpr double kTableTail = 1e-300;
constexpr std::size_t kMaxTable = 200000;

// Lower quantile of Beta(a, b). Boost's inverse gives up for probabilities far
// below 1e-90, so there we start from the leading term F(x) ~ x^a / (a B(a,b))
// and polish with Newton steps on log F in log x.
double beta_lower_quantile(double a, double b, double u) {
    if (u > 1e-80) return boost::math::ibeta_inv(a, b, u, kNoPromote);
    const double log_u = std::log(u);
    double t = (log_u + std::log(a) + std::log(boost::math::beta(a, b))) / a;
    for (int i = 0; i < 50; ++i) {
        const double x = std::exp(t);
        const double F = boost::math::ibeta(a, b, x, kNoPromote);
        if (F <= 0.0) break;
        const double slope = x * boost::math::ibeta_derivative(a, b, x, kNoPromote) / F;
        const double step = (std::log(F) - log_u) / slope;
        t -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(t))) break;
    }
    return std::exp(t);
}

}  // namespace

class DiscreteTable {
public:
    std::vector<double> pmf;
    std::vector<double> cdf;
    std::vector<double> sf;  // P(X > k)

    static std::shared_ptr<const DiscreteTable> polya_aeppli(double lambda, double p) {
        auto t = std::make_shared<DiscreteTable>();
        // Panjer recursion for a compound Poisson with geometric cluster sizes.
        t->pmf.push_back(std::exp(-lambda));
        const double mean = lambda / (1.0 - p);
        for (std::size_t n = 1; n < kMaxTable; ++n) {
            double acc = 0.0;
            double fk = 1.0 - p;  // f_1
            for (std::size_t k = 1; k <= n; ++k) {
                acc += static_cast<double>(k) * fk * t->pmf[n - k];
                fk *= p;
                if (fk == 0.0) break;
            }
            const double pn = lambda / static_cast<double>(n) * acc;
            t->pmf.push_back(pn);
            if (static_cast<double>(n) > mean && pn < kTableTail) break;
        }
        const std::size_t m = t->pmf.size();
        t->cdf.resize(m);
        t->sf.resize(m);
        double run = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            run += t->pmf[k];
            t->cdf[k] = std::min(1.0, run);
        }
        double tail = 0.0;
        for (std::size_t k = m; k-- > 0;) {
            t->sf[k] = tail;
            tail += t->pmf[k];
        }
        return t;
    }

    double cdf_at(double x) const {
        if (x < 0.0) return 0.0;
        const double k = std::floor(x);
        if (k >= static_cast<double>(cdf.size() - 1)) return 1.0;
        return cdf[static_cast<std::size_t>(k)];
    }

    double sf_at(double x) const {
        if (x < 0.0) return 1.0;
        const double k = std::floor(x);
        if (k >= static_cast<double>(sf.size() - 1)) return 0.0;
        return sf[static_cast<std::size_t>(k)];
    }

    double pmf_at(double x) const {
        if (x < 0.0 || x != std::floor(x) || x >= static_cast<double>(pmf.size())) return 0.0;
        return pmf[static_cast<std::size_t>(x)];
    }

    // Smallest k with cdf(k) >= u.
    double quantile(double u) const {
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) return static_cast<double>(cdf.size() - 1);
        return static_cast<double>(it - cdf.begin());
    }

    // Smallest k with sf(k) <= q.
    double upper_quantile(double q) const {
        for (std::size_t k = 0; k < sf.size(); ++k)
            if (sf[k] <= q) return static_cast<double>(k);
        return static_cast<double>(sf.size() - 1);
    }
};

// ---------------------------------------------------------------------------
// Family metadata

std::string_view family_name(Family family) {
    switch (family) {
        case Family::Gaussian: return "Gaussian";
        case Family::Weibull: return "Weibull";
        case Family::GenGamma: return "GenGamma";
        case Family::BurrXII: return "BurrXII";
        case Family::BurrIII: return "BurrIII";
        case Family::ParetoII: return "ParetoII";
        case Family::Beta: return "Beta";
        case Family::Kumaraswamy: return "Kumaraswamy";
        case Family::Bernoulli: return "Bernoulli";
        case Family::PolyaAeppli: return "PolyaAeppli";
    }
    return "?";
}

Family family_from_name(std::string_view name) {
    for (Family f : {Family::Gaussian, Family::Weibull, Family::GenGamma, Family::BurrXII,
                     Family::BurrIII, Family::ParetoII, Family::Beta, Family::Kumaraswamy,
                     Family::Bernoulli, Family::PolyaAeppli}) {
        if (family_name(f) == name) return f;
    }
    fail(ErrorCode::Input, "unknown marginal family '" + std::string(name) + "'");
}

std::size_t parameter_count(Family family) {
    switch (family) {
        case Family::Bernoulli: return 1;
        case Family::GenGamma:
        case Family::BurrXII:
        case Family::BurrIII: return 3;
        default: return 2;
    }
}

bool is_discrete(Family family) {
    return family == Family::Bernoulli || family == Family::PolyaAeppli;
}

// ---------------------------------------------------------------------------
// MarginalModel

MarginalModel::MarginalModel(Family family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {
    const std::string name(family_name(family_));
    require(params_.size() == parameter_count(family_), ErrorCode::ParameterDomain,
            name + " expects " + std::to_string(parameter_count(family_)) + " parameters");
    for (double v : params_)
        require(std::isfinite(v), ErrorCode::ParameterDomain, name + ": non-finite parameter");

    switch (family_) {
        case Family::Gaussian:
            require(params_[1] > 0.0, ErrorCode::ParameterDomain, "Gaussian: sigma must be > 0");
            break;
        case Family::Bernoulli:
            require(params_[0] >= 0.0 && params_[0] <= 1.0, ErrorCode::ParameterDomain,
                    "Bernoulli: P(X=0) must lie in [0,1]");
            break;
        case Family::PolyaAeppli:
            require(params_[0] > 0.0 && params_[0] <= 500.0, ErrorCode::ParameterDomain,
                    "PolyaAeppli: lambda must lie in (0, 500]");
            require(params_[1] >= 0.0 && params_[1] < 1.0, ErrorCode::ParameterDomain,
                    "PolyaAeppli: p must lie in [0,1)");
            table_ = DiscreteTable::polya_aeppli(params_[0], params_[1]);
            break;
        default:
            for (double v : params_)
                require(v > 0.0, ErrorCode::ParameterDomain,
                        name + ": scale and shape parameters must be > 0");
    }
}

Support MarginalModel::support() const {
    switch (family_) {
        case Family::Gaussian: return {-kInf, kInf, false};
        case Family::Beta:
        case Family::Kumaraswamy: return {0.0, 1.0, false};
        case Family::Bernoulli: return {0.0, 1.0, true};
        case Family::PolyaAeppli: return {0.0, kInf, true};
        default: return {0.0, kInf, false};
    }
}

double MarginalModel::cdf(double x) const {
    const auto& p = params_;
    if (std::isnan(x)) fail(ErrorCode::Domain, "cdf: NaN argument");
    switch (family_) {
        case Family::Gaussian: return normal_cdf((x - p[0]) / p[1]);
        case Family::Bernoulli: return x < 0.0 ? 0.0 : (x < 1.0 ? p[0] : 1.0);
        case Family::PolyaAeppli: return table_->cdf_at(x);
        default: break;
    }
    const Support s = support();
    if (x <= s.lower) return 0.0;
    if (x >= s.upper) return 1.0;
    switch (family_) {
        case Family::Weibull: return -std::expm1(-std::pow(x / p[0], p[1]));
        case Family::GenGamma: return boost::math::gamma_p(p[1] / p[2], std::pow(x / p[0], p[2]), kNoPromote);
        case Family::BurrXII: {
            const double t = std::pow(x / p[0], p[1]);
            return -std::expm1(-std::log1p(p[2] * t) / (p[1] * p[2]));
        }
        case Family::BurrIII: {
            const double t = std::pow(x / p[0], -1.0 / p[2]) / p[1];
            return std::exp(-p[1] * p[2] * std::log1p(t));
        }
        case Family::ParetoII: return -std::expm1(-std::log1p(p[1] * x / p[0]) / p[1]);
        case Family::Beta: return boost::math::ibeta(p[0], p[1], x, kNoPromote);
        case Family::Kumaraswamy: return -std::expm1(p[1] * std::log1p(-std::pow(x, p[0])));
        default: break;
    }
    return 0.0;
}

double MarginalModel::sf(double x) const {
    const auto& p = params_;
    if (std::isnan(x)) fail(ErrorCode::Domain, "sf: NaN argument");
    switch (family_) {
        case Family::Gaussian: return normal_cdf(-(x - p[0]) / p[1]);
        case Family::Bernoulli: return x < 0.0 ? 1.0 : (x < 1.0 ? 1.0 - p[0] : 0.0);
        case Family::PolyaAeppli: return table_->sf_at(x);
        default: break;
    }
    const Support s = support();
    if (x <= s.lower) return 1.0;
    if (x >= s.upper) return 0.0;
    switch (family_) {
        case Family::Weibull: return std::exp(-std::pow(x / p[0], p[1]));
        case Family::GenGamma: return boost::math::gamma_q(p[1] / p[2], std::pow(x / p[0], p[2]), kNoPromote);
        case Family::BurrXII: {
            const double t = std::pow(x / p[0], p[1]);
            return std::exp(-std::log1p(p[2] * t) / (p[1] * p[2]));
        }
        case Family::BurrIII: {
            const double t = std::pow(x / p[0], -1.0 / p[2]) / p[1];
            return -std::expm1(-p[1] * p[2] * std::log1p(t));
        }
        case Family::ParetoII: return std::exp(-std::log1p(p[1] * x / p[0]) / p[1]);
        case Family::Beta: return boost::math::ibetac(p[0], p[1], x, kNoPromote);
        case Family::Kumaraswamy: return std::exp(p[1] * std::log1p(-std::pow(x, p[0])));
        default: break;
    }
    return 1.0;
}

double MarginalModel::pdf(double x) const {
    const auto& p = params_;
    switch (family_) {
        case Family::Gaussian: return normal_pdf((x - p[0]) / p[1]) / p[1];
        case Family::Bernoulli: return x == 0.0 ? p[0] : (x == 1.0 ? 1.0 - p[0] : 0.0);
        case Family::PolyaAeppli: return table_->pmf_at(x);
        default: break;
    }
    const Support s = support();
    if (x <= s.lower || x >= s.upper) return 0.0;
    switch (family_) {
        case Family::Weibull: {
            const double t = std::pow(x / p[0], p[1]);
            return p[1] / x * t * std::exp(-t);
        }
        case Family::GenGamma: {
            const double k = p[1] / p[2];
            const double logf = std::log(p[2] / p[0]) - std::lgamma(k) +
                                (p[1] - 1.0) * std::log(x / p[0]) - std::pow(x / p[0], p[2]);
            return std::exp(logf);
        }
        case Family::BurrXII: {
            const double t = std::pow(x / p[0], p[1]);
            return t / x * std::exp((-1.0 / (p[1] * p[2]) - 1.0) * std::log1p(p[2] * t));
        }
        case Family::BurrIII: {
            const double s3 = std::pow(x / p[0], -1.0 / p[2]) / p[1];
            return p[1] * s3 / x * std::exp((-p[1] * p[2] - 1.0) * std::log1p(s3));
        }
        case Family::ParetoII:
            return std::exp((-1.0 / p[1] - 1.0) * std::log1p(p[1] * x / p[0])) / p[0];
        case Family::Beta: return boost::math::ibeta_derivative(p[0], p[1], x, kNoPromote);
        case Family::Kumaraswamy: {
            const double xa = std::pow(x, p[0]);
            return p[0] * p[1] * xa / x * std::exp((p[1] - 1.0) * std::log1p(-xa));
        }
        default: break;
    }
    return 0.0;
}

namespace {

double clamp_probability(double u, const Support& s, const QuantileOptions& options, bool lower,
                         const std::string& name) {
    const double bound = lower ? s.lower : s.upper;
    if (std::isfinite(bound)) return u;
    if (options.policy == BoundPolicy::Error) {
        fail(ErrorCode::Domain, name + ": quantile at u = " + (lower ? "0" : "1") +
                                    " is infinite for an unbounded support");
    }
    return options.clamp_tail;
}

}  // namespace

double MarginalModel::quantile(double u, const QuantileOptions& options) const {
    require(u >= 0.0 && u <= 1.0, ErrorCode::Domain,
            "quantile: probability " + std::to_string(u) + " outside [0,1]");
    const auto& p = params_;
    if (family_ == Family::Bernoulli) return u <= p[0] ? 0.0 : 1.0;
    if (family_ == Family::PolyaAeppli) {
        if (u == 1.0) {
            const double q = clamp_probability(u, support(), options, false, describe());
            return table_->upper_quantile(q);
        }
        return table_->quantile(u);
    }
    const Support s = support();
    if (u == 0.0) {
        if (std::isfinite(s.lower)) return s.lower;
        u = clamp_probability(u, s, options, true, describe());
    }
    if (u == 1.0) {
        if (std::isfinite(s.upper)) return s.upper;
        return upper_quantile(clamp_probability(u, s, options, false, describe()), options);
    }
    switch (family_) {
        case Family::Gaussian: return p[0] + p[1] * normal_quantile(u);
        case Family::Weibull: return p[0] * std::pow(-std::log1p(-u), 1.0 / p[1]);
        case Family::GenGamma:
            return p[0] * std::pow(boost::math::gamma_p_inv(p[1] / p[2], u, kNoPromote), 1.0 / p[2]);
        case Family::BurrXII: {
            const double t = std::expm1(-p[1] * p[2] * std::log1p(-u)) / p[2];
            return p[0] * std::pow(t, 1.0 / p[1]);
        }
        case Family::BurrIII: {
            const double t = std::expm1(-std::log(u) / (p[1] * p[2]));
            return p[0] * std::pow(p[1] * t, -p[2]);
        }
        case Family::ParetoII: return p[0] / p[1] * std::expm1(-p[1] * std::log1p(-u));
        case Family::Beta: return beta_lower_quantile(p[0], p[1], u);
        case Family::Kumaraswamy:
            return std::pow(-std::expm1(std::log1p(-u) / p[1]), 1.0 / p[0]);
        default: break;
    }
    return 0.0;
}

double MarginalModel::upper_quantile(double q, const QuantileOptions& options) const {
    require(q >= 0.0 && q <= 1.0, ErrorCode::Domain,
            "upper_quantile: probability " + std::to_string(q) + " outside [0,1]");
    const auto& p = params_;
    if (family_ == Family::Bernoulli) return (1.0 - p[0]) <= q ? 0.0 : 1.0;
    if (family_ == Family::PolyaAeppli) {
        if (q == 0.0) q = clamp_probability(1.0, support(), options, false, describe());
        return table_->upper_quantile(q);
    }
    const Support s = support();
    if (q == 0.0) {
        if (std::isfinite(s.upper)) return s.upper;
        q = clamp_probability(1.0, s, options, false, describe());
    }
    if (q == 1.0) return quantile(0.0, options);
    if (q > 0.5) return quantile(1.0 - q, options);
    switch (family_) {
        case Family::Gaussian: return p[0] + p[1] * normal_upper_quantile(q);
        case Family::Weibull: return p[0] * std::pow(-std::log(q), 1.0 / p[1]);
        case Family::GenGamma:
            return p[0] * std::pow(boost::math::gamma_q_inv(p[1] / p[2], q, kNoPromote), 1.0 / p[2]);
        case Family::BurrXII: {
            const double t = std::expm1(-p[1] * p[2] * std::log(q)) / p[2];
            return p[0] * std::pow(t, 1.0 / p[1]);
        }
        case Family::BurrIII: {
            const double t = std::expm1(-std::log1p(-q) / (p[1] * p[2]));
            return p[0] * std::pow(p[1] * t, -p[2]);
        }
        case Family::ParetoII: return p[0] / p[1] * std::expm1(-p[1] * std::log(q));
        case Family::Beta: return 1.0 - beta_lower_quantile(p[1], p[0], q);
        case Family::Kumaraswamy: return std::pow(-std::expm1(std::log(q) / p[1]), 1.0 / p[0]);
        default: break;
    }
    return 0.0;
}

bool MarginalModel::has_finite_variance() const {
    switch (family_) {
        case Family::BurrXII:
        case Family::BurrIII: return params_[2] < 0.5;
        case Family::ParetoII: return params_[1] < 0.5;
        default: return true;
    }
}

Moments MarginalModel::moments() const {
    const auto& p = params_;
    if (!has_finite_variance()) {
        fail(ErrorCode::InfiniteMoment,
             describe() + " has infinite variance (tail index >= 1/2); correlation is undefined");
    }
    using boost::math::beta;
    switch (family_) {
        case Family::Gaussian: return {p[0], p[1] * p[1]};
        case Family::Weibull: {
            const double g1 = std::tgamma(1.0 + 1.0 / p[1]);
            const double g2 = std::tgamma(1.0 + 2.0 / p[1]);
            return {p[0] * g1, p[0] * p[0] * (g2 - g1 * g1)};
        }
        case Family::GenGamma: {
            const double k = p[1] / p[2];
            const double r1 = std::exp(std::lgamma((p[1] + 1.0) / p[2]) - std::lgamma(k));
            const double r2 = std::exp(std::lgamma((p[1] + 2.0) / p[2]) - std::lgamma(k));
            return {p[0] * r1, p[0] * p[0] * (r2 - r1 * r1)};
        }
        case Family::BurrXII: {
            const double k = 1.0 / (p[1] * p[2]);
            const double s = p[0] * std::pow(p[2], -1.0 / p[1]);
            const double m1 = s * k * beta(k - 1.0 / p[1], 1.0 + 1.0 / p[1]);
            const double m2 = s * s * k * beta(k - 2.0 / p[1], 1.0 + 2.0 / p[1]);
            return {m1, m2 - m1 * m1};
        }
        case Family::BurrIII: {
            const double k = p[1] * p[2];
            const double s = p[0] * std::pow(p[1], -p[2]);
            const double m1 = s * k * beta(k + p[2], 1.0 - p[2]);
            const double m2 = s * s * k * beta(k + 2.0 * p[2], 1.0 - 2.0 * p[2]);
            return {m1, m2 - m1 * m1};
        }
        case Family::ParetoII: {
            const double m = p[0] / (1.0 - p[1]);
            return {m, m * m / (1.0 - 2.0 * p[1])};
        }
        case Family::Beta: {
            const double ab = p[0] + p[1];
            return {p[0] / ab, p[0] * p[1] / (ab * ab * (ab + 1.0))};
        }
        case Family::Kumaraswamy: {
            const double m1 = p[1] * beta(1.0 + 1.0 / p[0], p[1]);
            const double m2 = p[1] * beta(1.0 + 2.0 / p[0], p[1]);
            return {m1, m2 - m1 * m1};
        }
        case Family::Bernoulli: return {1.0 - p[0], p[0] * (1.0 - p[0])};
        case Family::PolyaAeppli: {
            const double m = p[0] / (1.0 - p[1]);
            return {m, p[0] * (1.0 + p[1]) / ((1.0 - p[1]) * (1.0 - p[1]))};
        }
    }
    return {};
}

std::string MarginalModel::describe() const {
    std::ostringstream os;
    os << family_name(family_) << '(';
    for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? ", " : "") << params_[i];
    os << ')';
    return os.str();
}

// ---------------------------------------------------------------------------
// MixedMarginal

MixedMarginal::MixedMarginal(double p0, MarginalModel continuous)
    : p0_(p0), continuous_(std::move(continuous)) {
    require(p0_ >= 0.0 && p0_ < 1.0, ErrorCode::ParameterDomain, "mixed marginal: p0 must lie in [0,1)");
    require(!continuous_.discrete(), ErrorCode::ParameterDomain,
            "mixed marginal: the positive part must be a continuous family");
    require(continuous_.support().lower >= 0.0, ErrorCode::ParameterDomain,
            "mixed marginal: the positive part must live on x >= 0");
}

// ---------------------------------------------------------------------------
// Free functions over Marginal

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double cdf(const Marginal& m, double x) {
    return std::visit(overloaded{
                          [&](const MarginalModel& d) { return d.cdf(x); },
                          [&](const MixedMarginal& mm) {
                              if (x < 0.0) return 0.0;
                              return (1.0 - mm.p0()) * mm.continuous().cdf(x) + mm.p0();
                          },
                      },
                      m);
}

double sf(const Marginal& m, double x) {
    return std::visit(overloaded{
                          [&](const MarginalModel& d) { return d.sf(x); },
                          [&](const MixedMarginal& mm) {
                              if (x < 0.0) return 1.0;
                              return (1.0 - mm.p0()) * mm.continuous().sf(x);
                          },
                      },
                      m);
}

double quantile(const Marginal& m, double u, const QuantileOptions& options) {
    return std::visit(overloaded{
                          [&](const MarginalModel& d) { return d.quantile(u, options); },
                          [&](const MixedMarginal& mm) {
                              require(u >= 0.0 && u <= 1.0, ErrorCode::Domain,
                                      "quantile: probability outside [0,1]");
                              if (u <= mm.p0()) return 0.0;
                              return mm.continuous().quantile((u - mm.p0()) / (1.0 - mm.p0()), options);
                          },
                      },
                      m);
}

double upper_quantile(const Marginal& m, double q, const QuantileOptions& options) {
    return std::visit(overloaded{
                          [&](const MarginalModel& d) { return d.upper_quantile(q, options); },
                          [&](const MixedMarginal& mm) {
                              require(q >= 0.0 && q <= 1.0, ErrorCode::Domain,
                                      "upper_quantile: probability outside [0,1]");
                              if (q >= 1.0 - mm.p0()) return 0.0;
                              return mm.continuous().upper_quantile(q / (1.0 - mm.p0()), options);
                          },
                      },
                      m);
}

Moments moments(const Marginal& m) {
    return std::visit(overloaded{
                          [](const MarginalModel& d) { return d.moments(); },
                          [](const MixedMarginal& mm) {
                              const Moments c = mm.continuous().moments();
                              const double w = 1.0 - mm.p0();
                              return Moments{w * c.mean,
                                             w * c.variance + mm.p0() * w * c.mean * c.mean};
                          },
                      },
                      m);
}

bool has_finite_variance(const Marginal& m) {
    return std::visit(overloaded{
                          [](const MarginalModel& d) { return d.has_finite_variance(); },
                          [](const MixedMarginal& mm) { return mm.continuous().has_finite_variance(); },
                      },
                      m);
}

std::string describe(const Marginal& m) {
    return std::visit(overloaded{
                          [](const MarginalModel& d) { return d.describe(); },
                          [](const MixedMarginal& mm) {
                              std::ostringstream os;
                              os << "Mixed(p0=" << mm.p0() << ", " << mm.continuous().describe() << ')';
                              return os.str();
                          },
                      },
                      m);
}

Support support(const Marginal& m) {
    return std::visit(overloaded{
                          [](const MarginalModel& d) { return d.support(); },
                          [](const MixedMarginal& mm) {
                              Support s = mm.continuous().support();
                              s.lower = 0.0;
                              return s;
                          },
                      },
                      m);
}

double zero_probability(const Marginal& m) {
    if (const auto* mm = std::get_if<MixedMarginal>(&m)) return mm->p0();
    const auto& d = std::get<MarginalModel>(m);
    return d.discrete() ? d.pdf(0.0) : 0.0;
}

bool has_atoms(const Marginal& m) {
    if (const auto* mm = std::get_if<MixedMarginal>(&m)) return mm->p0() > 0.0;
    return std::get<MarginalModel>(m).discrete();
}

bool is_lattice(const Marginal& m) {
    const auto* d = std::get_if<MarginalModel>(&m);
    return d != nullptr && d->discrete();
}

double transform(const Marginal& m, double z) {
    constexpr QuantileOptions clamp{BoundPolicy::Clamp, std::numeric_limits<double>::min()};
    if (z <= 0.0) return quantile(m, std::max(normal_cdf(z), clamp.clamp_tail), clamp);
    return upper_quantile(m, std::max(normal_cdf(-z), clamp.clamp_tail), clamp);
}

std::vector<double> jump_points(const Marginal& m) {
    std::vector<double> z;
    if (const auto* mm = std::get_if<MixedMarginal>(&m)) {
        if (mm->p0() > 0.0) z.push_back(normal_quantile(mm->p0()));
        return z;
    }
    const auto& d = std::get<MarginalModel>(m);
    if (!d.discrete()) return z;
    // X = k on (a_{k-1}, a_k] with a_k = Q_Z(F(k)); stop once the upper tail is negligible.
    for (double k = 0.0;; k += 1.0) {
        const double upper = d.sf(k);
        if (upper <= 1e-300) break;
        const double lower = d.cdf(k);
        if (lower <= 0.0) continue;
        z.push_back(lower < 0.5 ? normal_quantile(lower) : normal_upper_quantile(upper));
    }
    return z;
}

Moments quadrature_moments(const Marginal& m) {
    if (!has_finite_variance(m)) {
        fail(ErrorCode::InfiniteMoment, describe(m) + " has infinite variance");
    }
    if (is_lattice(m)) {
        const auto& d = std::get<MarginalModel>(m);
        double m1 = 0.0, m2 = 0.0;
        for (double k = 0.0;; k += 1.0) {
            const double pk = d.pdf(k);
            m1 += k * pk;
            m2 += k * k * pk;
            if (d.sf(k) <= 1e-300) break;
        }
        return {m1, m2 - m1 * m1};
    }

    const MarginalModel* base = nullptr;
    double p0 = 0.0;
    if (const auto* mm = std::get_if<MixedMarginal>(&m)) {
        base = &mm->continuous();
        p0 = mm->p0();
    } else {
        base = &std::get<MarginalModel>(m);
    }

    boost::math::quadrature::tanh_sinh<double> integrator;
    constexpr double kTol = 1e-12;
    auto raw = [&](int r) {
        // Lower half through Q(u), upper half through Q(1 - q); endpoint
        // singularities then both sit at 0 where tanh-sinh is precise.
        auto lower = [&](double u) { return std::pow(base->quantile(u), r); };
        auto upper = [&](double q) { return std::pow(base->upper_quantile(q), r); };
        return integrator.integrate(lower, 0.0, 0.5, kTol) + integrator.integrate(upper, 0.0, 0.5, kTol);
    };
    const double c1 = raw(1);
    const double c2 = raw(2);
    // Mixing with the atom at zero: E[X^r] = (1 - p0) E[X^r | X > 0].
    const double m1 = (1.0 - p0) * c1;
    const double m2 = (1.0 - p0) * c2;
    return {m1, m2 - m1 * m1};
}

}  // namespace pgsim
