#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pgsim {

/// Marginal distribution families and their parameter order:
///
///   Gaussian      (mu, sigma)
///   Weibull       (beta, gamma)                 F = 1 - exp(-(x/beta)^gamma)
///   GenGamma      (beta, gamma1, gamma2)        (x/beta)^gamma2 ~ Gamma(gamma1/gamma2, 1)
///   BurrXII       (beta, gamma1, gamma2)        F = 1 - (1 + gamma2 (x/beta)^gamma1)^(-1/(gamma1 gamma2))
///   BurrIII       (beta, gamma1, gamma2)        F = (1 + (x/beta)^(-1/gamma2) / gamma1)^(-gamma1 gamma2)
///   ParetoII      (beta, gamma)                 F = 1 - (1 + gamma x / beta)^(-1/gamma)
///   Beta          (a, b)
///   Kumaraswamy   (a, b)                        F = 1 - (1 - x^a)^b
///   Bernoulli     (p0)                          P(X = 0) = p0, P(X = 1) = 1 - p0
///   PolyaAeppli   (lambda, p)                   Poisson(lambda) sum of geometric
///                                               clusters P(Y = k) = (1 - p) p^(k-1), k >= 1
enum class Family {
    Gaussian,
    Weibull,
    GenGamma,
    BurrXII,
    BurrIII,
    ParetoII,
    Beta,
    Kumaraswamy,
    Bernoulli,
    PolyaAeppli,
};

std::string_view family_name(Family family);
Family family_from_name(std::string_view name);
std::size_t parameter_count(Family family);
bool is_discrete(Family family);

struct Support {
    double lower = 0.0;
    double upper = 0.0;
    bool discrete = false;
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Behaviour of quantile() at u = 0 or u = 1 when the support bound is infinite.
enum class BoundPolicy { Error, Clamp };

struct QuantileOptions {
    BoundPolicy policy = BoundPolicy::Error;
    double clamp_tail = 1e-12;  // u = 1 is replaced by 1 - clamp_tail (and u = 0 by clamp_tail)
};

class DiscreteTable;

/// A single parametric distribution. Immutable value type; all members are
/// pure, so instances can be shared freely between threads.
class MarginalModel {
public:
    MarginalModel(Family family, std::vector<double> params);

    static MarginalModel gaussian(double mu, double sigma) { return {Family::Gaussian, {mu, sigma}}; }
    static MarginalModel weibull(double beta, double gamma) { return {Family::Weibull, {beta, gamma}}; }
    static MarginalModel gen_gamma(double beta, double g1, double g2) { return {Family::GenGamma, {beta, g1, g2}}; }
    static MarginalModel burr_xii(double beta, double g1, double g2) { return {Family::BurrXII, {beta, g1, g2}}; }
    static MarginalModel burr_iii(double beta, double g1, double g2) { return {Family::BurrIII, {beta, g1, g2}}; }
    static MarginalModel pareto_ii(double beta, double gamma) { return {Family::ParetoII, {beta, gamma}}; }
    static MarginalModel beta(double a, double b) { return {Family::Beta, {a, b}}; }
    static MarginalModel kumaraswamy(double a, double b) { return {Family::Kumaraswamy, {a, b}}; }
    static MarginalModel bernoulli(double p0) { return {Family::Bernoulli, {p0}}; }
    static MarginalModel polya_aeppli(double lambda, double p) { return {Family::PolyaAeppli, {lambda, p}}; }

    Family family() const noexcept { return family_; }
    std::span<const double> params() const noexcept { return params_; }
    bool discrete() const noexcept { return is_discrete(family_); }
    Support support() const;

    double cdf(double x) const;
    /// Survival function 1 - cdf(x), computed without cancellation.
    double sf(double x) const;
    /// Density for continuous families, probability mass for discrete ones.
    double pdf(double x) const;

    double quantile(double u, const QuantileOptions& options = {}) const;
    /// Q(1 - q) for q in [0, 1], accurate for tiny q.
    double upper_quantile(double q, const QuantileOptions& options = {}) const;

    /// Closed-form mean and variance. Throws InfiniteMoment when the tail is too heavy.
    Moments moments() const;

    /// True when the variance is finite (tail-index condition for the power-type families).
    bool has_finite_variance() const;

    std::string describe() const;

    friend bool operator==(const MarginalModel& a, const MarginalModel& b) {
        return a.family_ == b.family_ && a.params_ == b.params_;
    }

private:
    Family family_;
    std::vector<double> params_;
    std::shared_ptr<const DiscreteTable> table_;  // Polya-Aeppli only
};

/// Intermittent marginal: an atom p0 at zero plus a continuous law for X | X > 0.
class MixedMarginal {
public:
    MixedMarginal(double p0, MarginalModel continuous);

    double p0() const noexcept { return p0_; }
    const MarginalModel& continuous() const noexcept { return continuous_; }

    friend bool operator==(const MixedMarginal& a, const MixedMarginal& b) {
        return a.p0_ == b.p0_ && a.continuous_ == b.continuous_;
    }

private:
    double p0_;
    MarginalModel continuous_;
};

using Marginal = std::variant<MarginalModel, MixedMarginal>;

double cdf(const Marginal& m, double x);
double sf(const Marginal& m, double x);
double quantile(const Marginal& m, double u, const QuantileOptions& options = {});
double upper_quantile(const Marginal& m, double q, const QuantileOptions& options = {});
Moments moments(const Marginal& m);
bool has_finite_variance(const Marginal& m);
std::string describe(const Marginal& m);
Support support(const Marginal& m);

/// Probability of the atom at zero (0 for continuous models, P(X=0) for discrete).
double zero_probability(const Marginal& m);

/// True for purely discrete marginals or mixed ones: anything with an atom.
bool has_atoms(const Marginal& m);

/// Integer-valued marginals with unit steps (Bernoulli, Polya-Aeppli): X = #{k : Z > a_k}.
bool is_lattice(const Marginal& m);

/// The parent-Gaussian to target map g(z) = Q_X(Phi(z)). Upper tails go through
/// the complementary probability so g stays finite and accurate for large z.
double transform(const Marginal& m, double z);

/// Gaussian-space abscissae where g(z) jumps, ascending. For lattice marginals
/// these are the thresholds a_k above; for mixed ones the single point Q_Z(p0).
std::vector<double> jump_points(const Marginal& m);

/// Mean and variance by adaptive tanh-sinh quadrature of the quantile function
/// over (0, 1), split at p0 and at 1/2 (upper half via the complementary
/// quantile). Discrete families sum their mass function. Independent of the
/// closed forms in moments().
Moments quadrature_moments(const Marginal& m);

}  // namespace pgsim
