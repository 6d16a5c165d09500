#pragma once

#include "pgsim/marginals.hpp"

#include <array>
#include <span>
#include <string>

namespace pgsim {

enum class FitMethod { LMoments, MaximumLikelihood };

struct FitOptions {
    FitMethod method = FitMethod::LMoments;
    /// Treat values <= zero_threshold as dry / calm: p0 = n0 / n and the family
    /// is fitted to the remaining positive values only.
    bool mixed = false;
    double zero_threshold = 0.0;
};

struct MarginalFit {
    Marginal model;
    double objective = 0.0;   // final L-moment residual or negative log-likelihood
    std::size_t n_used = 0;   // values entering the continuous / discrete fit
};

/// Sample L-moments (l1, l2, t3, t4) from unbiased probability-weighted moments.
std::array<double, 4> sample_l_moments(std::span<const double> data);

/// Model L-moments (l1, l2, t3, t4) by quadrature of the quantile function
/// against shifted Legendre polynomials.
std::array<double, 4> model_l_moments(const MarginalModel& model);

MarginalFit fit_marginal(std::span<const double> data, Family family, const FitOptions& options = {});

}  // namespace pgsim
