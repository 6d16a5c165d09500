#pragma once

#include <span>
#include <vector>

namespace pgsim {

/// Standard normal cdf Phi(z).
double normal_cdf(double z);

/// Standard normal density.
double normal_pdf(double z);

/// Standard normal quantile Q_Z(u); returns -inf / +inf at u = 0 / 1.
double normal_quantile(double u);

/// Q_Z(1 - q) evaluated from the complementary probability without cancellation.
double normal_upper_quantile(double q);

/// Lower orthant probability P(Z1 <= h, Z2 <= k) of a standard bivariate normal
/// with correlation r. Drezner-Wesolowsky integration with Genz's refinements;
/// absolute accuracy around 1e-15.
double bivariate_normal_cdf(double h, double k, double r);

/// Upper orthant probability P(Z1 > h, Z2 > k).
double bivariate_normal_upper(double h, double k, double r);

struct GaussLegendreRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] computed by Newton iteration on P_n.
GaussLegendreRule gauss_legendre(int n);

}  // namespace pgsim
