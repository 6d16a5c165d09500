#include "pgsim/special.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pgsim {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Positive half of a symmetric Gauss-Legendre rule.
struct HalfRule {
    std::vector<double> x;
    std::vector<double> w;
};

HalfRule half_rule(int n) {
    const GaussLegendreRule full = gauss_legendre(n);
    HalfRule half;
    for (std::size_t i = 0; i < full.nodes.size(); ++i) {
        if (full.nodes[i] > 0.0) {
            half.x.push_back(full.nodes[i]);
            half.w.push_back(full.weights[i]);
        }
    }
    return half;
}

const HalfRule& bvn_rule(double abs_r) {
    static const HalfRule r6 = half_rule(6);
    static const HalfRule r12 = half_rule(12);
    static const HalfRule r20 = half_rule(20);
    if (abs_r < 0.3) return r6;
    if (abs_r < 0.75) return r12;
    return r20;
}

// P(X > dh, Y > dk) for standard bivariate normal with correlation r.
double bvnu(double dh, double dk, double r) {
    if (std::isinf(dh) || std::isinf(dk)) {
        if (dh == -std::numeric_limits<double>::infinity()) return normal_cdf(-dk);
        if (dk == -std::numeric_limits<double>::infinity()) return normal_cdf(-dh);
        return 0.0;
    }
    if (r >= 1.0) return normal_cdf(-std::max(dh, dk));
    if (r <= -1.0) return std::max(0.0, normal_cdf(-dh) - normal_cdf(dk));

    const HalfRule& rule = bvn_rule(std::abs(r));
    const std::size_t lg = rule.x.size();

    double h = dh;
    double k = dk;
    double hk = h * k;
    double bvn = 0.0;

    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r) / 2.0;
        for (std::size_t i = 0; i < lg; ++i) {
            for (const double sign : {-1.0, 1.0}) {
                const double sn = std::sin(asr * (1.0 + sign * rule.x[i]));
                bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        }
        return bvn * asr / kTwoPi + normal_cdf(-h) * normal_cdf(-k);
    }

    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 80.0;
        double asr = -(bs / as + hk) / 2.0;
        if (asr > -100.0) {
            bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
        }
        if (hk > -100.0) {
            const double b = std::sqrt(bs);
            const double sp = std::sqrt(kTwoPi) * normal_cdf(-b / a);
            bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
        }
        a /= 2.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < lg; ++i) {
            for (const double sign : {-1.0, 1.0}) {
                const double xs = std::pow(a * (1.0 + sign * rule.x[i]), 2);
                asr = -(bs / xs + hk) / 2.0;
                if (asr > -100.0) {
                    const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    const double rs = std::sqrt(1.0 - xs);
                    const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
                    sum += rule.w[i] * std::exp(asr) * (sp - ep);
                }
            }
        }
        bvn = (a * sum - bvn) / kTwoPi;
    }
    if (r > 0.0) return bvn + normal_cdf(-std::max(h, k));
    if (h >= k) return -bvn;
    const double l = h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
    return l - bvn;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_pdf(double z) {
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double normal_quantile(double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("normal_quantile: u outside [0,1]");
    if (u == 0.0) return -std::numeric_limits<double>::infinity();
    if (u == 1.0) return std::numeric_limits<double>::infinity();
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

double normal_upper_quantile(double q) { return -normal_quantile(q); }

double bivariate_normal_upper(double h, double k, double r) {
    return std::clamp(bvnu(h, k, r), 0.0, 1.0);
}

double bivariate_normal_cdf(double h, double k, double r) {
    return std::clamp(bvnu(-h, -k, r), 0.0, 1.0);
}

GaussLegendreRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    if (n == 1) return {{0.0}, {2.0}};
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute derivative at the converged root for the weight.
        double p0 = 1.0;
        double p1 = x;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace pgsim
