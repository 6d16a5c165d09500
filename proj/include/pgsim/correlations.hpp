#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pgsim {

/// Parametric autocorrelation structures and their parameter order:
///
///   Weibull    (b, c)        exp(-(tau/b)^c)
///   ParetoII   (b, c)        (1 + c tau/b)^(-1/c)
///   BurrXII    (b, c1, c2)   (1 + c2 (tau/b)^c1)^(-1/(c1 c2))
///   GenLog     (b, c)        (1 + ln(1 + c tau/b))^(-1/c)
///   FGN        (H)           (|tau-1|^2H - 2|tau|^2H + |tau+1|^2H) / 2
///   Markovian  (rho1)        rho1^tau
enum class AcsFamily { Weibull, ParetoII, BurrXII, GenLog, FGN, Markovian };

std::string_view acs_family_name(AcsFamily family);
AcsFamily acs_family_from_name(std::string_view name);
std::size_t acs_parameter_count(AcsFamily family);

class CorrelationModel {
public:
    CorrelationModel(AcsFamily family, std::vector<double> params);

    static CorrelationModel weibull(double b, double c) { return {AcsFamily::Weibull, {b, c}}; }
    static CorrelationModel pareto_ii(double b, double c) { return {AcsFamily::ParetoII, {b, c}}; }
    static CorrelationModel burr_xii(double b, double c1, double c2) { return {AcsFamily::BurrXII, {b, c1, c2}}; }
    static CorrelationModel gen_log(double b, double c) { return {AcsFamily::GenLog, {b, c}}; }
    static CorrelationModel fgn(double hurst) { return {AcsFamily::FGN, {hurst}}; }
    static CorrelationModel markovian(double rho1) { return {AcsFamily::Markovian, {rho1}}; }

    AcsFamily family() const noexcept { return family_; }
    std::span<const double> params() const noexcept { return params_; }

    /// rho(tau) for tau >= 0; rho(0) = 1.
    double operator()(double tau) const;

    /// rho(1), ..., rho(max_lag).
    std::vector<double> head(int max_lag) const;

    std::string describe() const;

    friend bool operator==(const CorrelationModel& a, const CorrelationModel& b) {
        return a.family_ == b.family_ && a.params_ == b.params_;
    }

private:
    AcsFamily family_;
    std::vector<double> params_;
};

/// Asymmetric cross-correlation structure: rho(tau) = positive(tau + 1) for
/// tau >= 0 and negative(1 - tau) for tau <= 0. Both branches must agree at tau = 0.
class CrossCorrelationModel {
public:
    CrossCorrelationModel(CorrelationModel positive, CorrelationModel negative);
    explicit CrossCorrelationModel(CorrelationModel both) : CrossCorrelationModel(both, both) {}

    const CorrelationModel& positive_branch() const noexcept { return positive_; }
    const CorrelationModel& negative_branch() const noexcept { return negative_; }

    double operator()(double tau) const;

private:
    CorrelationModel positive_;
    CorrelationModel negative_;
};

double acs_eval(const CorrelationModel& model, double tau);
double ccs_eval(const CrossCorrelationModel& model, double tau);

/// Biased (divide-by-n) sample autocorrelation for lags 0..max_lag; element 0 is 1.
/// A note is appended to `warnings` when max_lag exceeds a third of the sample.
std::vector<double> empirical_acs(std::span<const double> data, int max_lag,
                                  std::vector<std::string>* warnings = nullptr);

/// Sample cross-correlation Cor[x(t), y(t + lag)] with the same biased normalization.
double empirical_cross_correlation(std::span<const double> x, std::span<const double> y, int lag);

struct AcsFitOptions {
    int max_lag = 0;                 // 0: use every lag supplied
    double lag_weight_scale = 0.0;   // 0: equal weights; otherwise weight exp(-tau / scale)
};

struct AcsFit {
    CorrelationModel model;
    double rms = 0.0;       // unweighted residual RMS over the fitted lags
    double max_abs = 0.0;
    std::string note;       // set when the fit sits at a limiting case of the family
};

/// Least-squares fit of a parametric ACS to emp[1..L] (emp[0] is lag 0 and ignored).
AcsFit fit_acs(std::span<const double> emp, AcsFamily family, const AcsFitOptions& options = {});

/// Two-column CSV "lag,rho" starting at lag 0.
void write_acs_csv(std::ostream& out, std::span<const double> rho);

}  // namespace pgsim
