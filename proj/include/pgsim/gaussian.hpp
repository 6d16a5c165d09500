#pragma once

#include "pgsim/correlations.hpp"
#include "pgsim/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pgsim {

// ---------------------------------------------------------------------------
// AR(p)

/// Z(t) = sum_i a_i Z(t-i) + e(t), e ~ N(0, noise_var), unit process variance.
struct ArModel {
    std::vector<double> coeffs;
    double noise_var = 1.0;

    int order() const noexcept { return static_cast<int>(coeffs.size()); }
};

/// Yule-Walker fit to rho(1..p) (head.size() == p). Levinson-Durbin, with a dense
/// Cholesky solve when a reflection coefficient reaches 1 - 1e-10 in magnitude.
/// Throws NotPositiveDefinite for an invalid correlation sequence.
ArModel fit_ar(std::span<const double> head);
ArModel fit_ar(const CorrelationModel& acs, int p);

/// Dense reference solve of the same Toeplitz system.
ArModel fit_ar_dense(std::span<const double> head);

/// max_k |rho(k) - sum_i a_i rho(|k - i|)| over k = 1..p: zero when the model
/// reproduces the head exactly.
double yule_walker_residual(const ArModel& model, std::span<const double> head);

/// rho(1..tau_max): the head for tau <= p, then rho(tau) = sum_i a_i rho(tau - i).
std::vector<double> ar_extrapolate_acs(const ArModel& model, std::span<const double> head, int tau_max);

/// Stateful AR generator. The history starts i.i.d. N(0,1) and `burn_in` steps
/// are discarded (negative: max(10 p, 1000)). next(other) advances with another
/// model on the same history, which is how seasonal switching carries state.
class ArGenerator {
public:
    ArGenerator(ArModel model, std::uint64_t seed, int burn_in = -1);

    double next() { return next(model_); }
    double next(const ArModel& model);
    std::vector<double> generate(std::size_t n);

    const ArModel& model() const noexcept { return model_; }

private:
    void ensure_capacity(int order);

    ArModel model_;
    Rng rng_;
    std::vector<double> buffer_;  // doubled ring buffer: history is contiguous at [pos_, pos_ + cap_)
    std::size_t cap_ = 0;
    std::size_t pos_ = 0;
};

std::vector<double> simulate_ar(const ArModel& model, std::size_t n, std::uint64_t seed, int burn_in = -1);

// ---------------------------------------------------------------------------
// Sum of independent AR(1) components

struct SumAr1Model {
    struct Component {
        double rho1 = 0.0;
        double variance = 1.0;
    };
    std::vector<Component> components;

    /// sum_i rho_i^tau var_i
    double acs(double tau) const;
};

struct SumAr1Fit {
    SumAr1Model model;
    double max_abs_error = 0.0;
};

/// Fits rho(1..L) = head by k components with total variance 1, minimizing the
/// maximum absolute error over the lags.
SumAr1Fit fit_sum_ar1(std::span<const double> head, int components);

class SumAr1Generator {
public:
    SumAr1Generator(SumAr1Model model, std::uint64_t seed);
    double next();
    std::vector<double> generate(std::size_t n);

private:
    SumAr1Model model_;
    Rng rng_;
    std::vector<double> state_;
};

std::vector<double> simulate_sum_ar1(const SumAr1Model& model, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// MAR(1)

/// Z(t) = A Z(t-1) + B e(t). Lag matrices follow K1(i, j) = Cor[Z_i(t), Z_j(t-1)].
struct Mar1Model {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd K0;   // stationary lag-0 correlation, used to start in equilibrium
    std::string warning;  // set when B B^T needed eigenvalue clipping

    int dimension() const noexcept { return static_cast<int>(A.rows()); }
};

/// A = K1 K0^-1 and B B^T = K0 - A K1^T, so the model reproduces K0 and K1 exactly.
Mar1Model fit_mar1(const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1);

class Mar1Generator {
public:
    Mar1Generator(Mar1Model model, std::uint64_t seed);
    const Eigen::VectorXd& next() { return next(model_); }
    const Eigen::VectorXd& next(const Mar1Model& model);
    /// n x dimension matrix, one row per time step.
    Eigen::MatrixXd generate(std::size_t n);

private:
    Mar1Model model_;
    Rng rng_;
    Eigen::VectorXd state_;
    Eigen::VectorXd noise_;
    Eigen::VectorXd scratch_;
};

Eigen::MatrixXd simulate_mar1(const Mar1Model& model, std::size_t n, std::uint64_t seed);

}  // namespace pgsim
