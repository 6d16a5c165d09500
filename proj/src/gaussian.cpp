#include "pgsim/gaussian.hpp"

#include "pgsim/error.hpp"
#include "pgsim/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pgsim {

namespace {

constexpr double kReflectionLimit = 1.0 - 1e-10;

void validate_head(std::span<const double> head) {
    require(!head.empty(), ErrorCode::Input, "AR fit needs at least one lag");
    for (double r : head) {
        require(std::isfinite(r) && std::abs(r) <= 1.0, ErrorCode::NotPositiveDefinite,
                "AR fit: correlation head must lie in [-1, 1]");
    }
}

double noise_variance(const std::vector<double>& a, std::span<const double> head) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * head[i];
    const double v = 1.0 - s;
    require(v > 0.0, ErrorCode::NotPositiveDefinite,
            "AR fit: innovation variance 1 - sum a_i rho_i is not positive");
    return v;
}

}  // namespace

ArModel fit_ar_dense(std::span<const double> head) {
    validate_head(head);
    const auto p = static_cast<Eigen::Index>(head.size());
    Eigen::MatrixXd P(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            P(i, j) = i == j ? 1.0 : head[static_cast<std::size_t>(std::abs(i - j) - 1)];
    const Eigen::VectorXd rho = Eigen::Map<const Eigen::VectorXd>(head.data(), p);
    Eigen::LLT<Eigen::MatrixXd> llt(P);
    require(llt.info() == Eigen::Success, ErrorCode::NotPositiveDefinite,
            "AR fit: Toeplitz correlation matrix is not positive definite");
    const Eigen::VectorXd a = llt.solve(rho);
    ArModel m;
    m.coeffs.assign(a.data(), a.data() + p);
    m.noise_var = noise_variance(m.coeffs, head);
    return m;
}

ArModel fit_ar(std::span<const double> head) {
    validate_head(head);
    const std::size_t p = head.size();
    auto r = [&](std::size_t k) { return k == 0 ? 1.0 : head[k - 1]; };
    std::vector<double> a, prev;
    a.reserve(p);
    double err = 1.0;
    for (std::size_t m = 1; m <= p; ++m) {
        double acc = r(m);
        for (std::size_t i = 1; i < m; ++i) acc -= a[i - 1] * r(m - i);
        const double k = acc / err;
        if (!(std::abs(k) < kReflectionLimit)) return fit_ar_dense(head);
        prev = a;
        for (std::size_t i = 1; i < m; ++i) a[i - 1] = prev[i - 1] - k * prev[m - i - 1];
        a.push_back(k);
        err *= (1.0 - k) * (1.0 + k);
    }
    ArModel model;
    model.coeffs = std::move(a);
    model.noise_var = noise_variance(model.coeffs, head);
    return model;
}

ArModel fit_ar(const CorrelationModel& acs, int p) {
    require(p >= 1, ErrorCode::Input, "AR order must be >= 1");
    const std::vector<double> head = acs.head(p);
    return fit_ar(head);
}

double yule_walker_residual(const ArModel& model, std::span<const double> head) {
    require(head.size() >= model.coeffs.size(), ErrorCode::Input, "head shorter than AR order");
    const std::size_t p = model.coeffs.size();
    auto r = [&](std::size_t k) { return k == 0 ? 1.0 : head[k - 1]; };
    double worst = 0.0;
    for (std::size_t k = 1; k <= p; ++k) {
        double s = 0.0;
        for (std::size_t i = 1; i <= p; ++i) s += model.coeffs[i - 1] * r(k > i ? k - i : i - k);
        worst = std::max(worst, std::abs(r(k) - s));
    }
    return worst;
}

std::vector<double> ar_extrapolate_acs(const ArModel& model, std::span<const double> head, int tau_max) {
    const std::size_t p = model.coeffs.size();
    require(head.size() >= p, ErrorCode::Input, "head shorter than AR order");
    std::vector<double> rho(static_cast<std::size_t>(std::max(tau_max, 0)) + 1);
    rho[0] = 1.0;
    for (std::size_t t = 1; t < rho.size(); ++t) {
        if (t <= p) {
            rho[t] = head[t - 1];
            continue;
        }
        double s = 0.0;
        for (std::size_t i = 1; i <= p; ++i) s += model.coeffs[i - 1] * rho[t - i];
        rho[t] = s;
    }
    rho.erase(rho.begin());
    return rho;
}

// ---------------------------------------------------------------------------

ArGenerator::ArGenerator(ArModel model, std::uint64_t seed, int burn_in)
    : model_(std::move(model)), rng_(seed) {
    require(model_.noise_var > 0.0, ErrorCode::ParameterDomain, "AR noise variance must be > 0");
    ensure_capacity(std::max(model_.order(), 1));
    const int steps = burn_in >= 0 ? burn_in : std::max(10 * model_.order(), 1000);
    for (int i = 0; i < steps; ++i) next();
}

void ArGenerator::ensure_capacity(int order) {
    const auto need = static_cast<std::size_t>(order);
    if (need <= cap_) return;
    // Rebuild with older history first; missing history is drawn i.i.d. N(0,1).
    std::vector<double> history(need);
    const std::size_t have = cap_;
    for (std::size_t i = 0; i < need - have; ++i) history[i] = rng_.normal();
    for (std::size_t i = 0; i < have; ++i) history[need - have + i] = buffer_[pos_ + i];
    cap_ = need;
    buffer_.assign(2 * cap_, 0.0);
    for (std::size_t i = 0; i < cap_; ++i) buffer_[i] = buffer_[i + cap_] = history[i];
    pos_ = 0;
}

double ArGenerator::next(const ArModel& model) {
    ensure_capacity(std::max(model.order(), 1));
    // History window [pos_, pos_ + cap_) holds Z(t - cap) .. Z(t - 1), newest last.
    const double* newest = buffer_.data() + pos_ + cap_ - 1;
    const std::size_t p = model.coeffs.size();
    const double* a = model.coeffs.data();
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= p; i += 4) {
        const auto k = static_cast<std::ptrdiff_t>(i);
        acc[0] += a[i] * newest[-k];
        acc[1] += a[i + 1] * newest[-k - 1];
        acc[2] += a[i + 2] * newest[-k - 2];
        acc[3] += a[i + 3] * newest[-k - 3];
    }
    for (; i < p; ++i) acc[0] += a[i] * newest[-static_cast<std::ptrdiff_t>(i)];
    double z = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    z += std::sqrt(model.noise_var) * rng_.normal();
    buffer_[pos_] = z;
    buffer_[pos_ + cap_] = z;
    pos_ = pos_ + 1 == cap_ ? 0 : pos_ + 1;
    return z;
}

std::vector<double> ArGenerator::generate(std::size_t n) {
    std::vector<double> out(n);
    for (double& v : out) v = next();
    return out;
}

std::vector<double> simulate_ar(const ArModel& model, std::size_t n, std::uint64_t seed, int burn_in) {
    require(n >= 1, ErrorCode::Input, "series length must be >= 1");
    ArGenerator gen(model, seed, burn_in);
    return gen.generate(n);
}

// ---------------------------------------------------------------------------

double SumAr1Model::acs(double tau) const {
    double s = 0.0;
    for (const auto& c : components) s += std::pow(c.rho1, tau) * c.variance;
    return s;
}

namespace {

SumAr1Model decode_sum(const std::vector<double>& t, std::size_t k) {
    SumAr1Model m;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) top = std::max(top, t[k + i]);
    double total = 0.0;
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) total += (w[i] = std::exp(t[k + i] - top));
    for (std::size_t i = 0; i < k; ++i) {
        m.components.push_back({1.0 / (1.0 + std::exp(-t[i])), w[i] / total});
    }
    return m;
}

}  // namespace

SumAr1Fit fit_sum_ar1(std::span<const double> head, int components) {
    require(components >= 1, ErrorCode::Input, "sum-of-AR(1) needs at least one component");
    require(!head.empty(), ErrorCode::Input, "sum-of-AR(1) fit needs at least one lag");
    const auto k = static_cast<std::size_t>(components);
    const std::size_t L = head.size();

    double peak = 0.0;
    for (double r : head) peak = std::max(peak, std::abs(r));
    if (peak == 0.0) return {SumAr1Model{{{0.0, 1.0}}}, 0.0};

    auto squared = [&](const std::vector<double>& t) {
        const SumAr1Model m = decode_sum(t, k);
        double s = 0.0;
        for (std::size_t tau = 1; tau <= L; ++tau) {
            const double e = m.acs(static_cast<double>(tau)) - head[tau - 1];
            s += e * e;
        }
        return s;
    };
    auto maxabs = [&](const std::vector<double>& t) {
        const SumAr1Model m = decode_sum(t, k);
        double worst = 0.0;
        for (std::size_t tau = 1; tau <= L; ++tau)
            worst = std::max(worst, std::abs(m.acs(static_cast<double>(tau)) - head[tau - 1]));
        return worst;
    };

    // Starts: component time scales spread geometrically over [1, L].
    std::vector<std::vector<double>> starts;
    for (double shift : {0.0, 0.5, -0.5}) {
        std::vector<double> t(2 * k, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const double frac = (static_cast<double>(i) + 0.5 + shift * 0.5) / static_cast<double>(k);
            const double scale = std::pow(static_cast<double>(std::max<std::size_t>(L, 2)), frac);
            const double rho = std::exp(-1.0 / scale);
            t[i] = std::log(rho / (1.0 - rho));
        }
        starts.push_back(t);
    }
    if (k == 1) {
        const double r1 = std::clamp(head[0], 1e-6, 1.0 - 1e-9);
        starts.push_back({std::log(r1 / (1.0 - r1)), 0.0});
    }
    NelderMeadOptions nm;
    nm.max_evaluations = 40000;
    nm.x_tolerance = 1e-12;
    nm.restarts = 4;
    const MinimizeResult ls = multi_start_minimize(squared, starts, nm);
    const MinimizeResult mm = nelder_mead(maxabs, ls.x, nm);
    const std::vector<double>& best = mm.value <= maxabs(ls.x) ? mm.x : ls.x;
    SumAr1Fit fit{decode_sum(best, k), maxabs(best)};
    require(std::isfinite(fit.max_abs_error), ErrorCode::Fit, "sum-of-AR(1) fit failed");
    return fit;
}

SumAr1Generator::SumAr1Generator(SumAr1Model model, std::uint64_t seed)
    : model_(std::move(model)), rng_(seed) {
    double total = 0.0;
    for (const auto& c : model_.components) {
        require(c.rho1 >= 0.0 && c.rho1 < 1.0 && c.variance >= 0.0, ErrorCode::ParameterDomain,
                "sum-of-AR(1) component outside its domain");
        total += c.variance;
    }
    require(std::abs(total - 1.0) <= 1e-9, ErrorCode::ParameterDomain,
            "sum-of-AR(1) component variances must add to 1");
    // Start each component from its stationary law, so no burn-in is needed.
    for (const auto& c : model_.components) state_.push_back(std::sqrt(c.variance) * rng_.normal());
}

double SumAr1Generator::next() {
    double z = 0.0;
    for (std::size_t i = 0; i < state_.size(); ++i) {
        const auto& c = model_.components[i];
        state_[i] = c.rho1 * state_[i] + std::sqrt((1.0 - c.rho1 * c.rho1) * c.variance) * rng_.normal();
        z += state_[i];
    }
    return z;
}

std::vector<double> SumAr1Generator::generate(std::size_t n) {
    std::vector<double> out(n);
    for (double& v : out) v = next();
    return out;
}

std::vector<double> simulate_sum_ar1(const SumAr1Model& model, std::size_t n, std::uint64_t seed) {
    require(n >= 1, ErrorCode::Input, "series length must be >= 1");
    SumAr1Generator gen(model, seed);
    return gen.generate(n);
}

// ---------------------------------------------------------------------------

Mar1Model fit_mar1(const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1) {
    const Eigen::Index n = K0.rows();
    require(n >= 1 && K0.cols() == n && K1.rows() == n && K1.cols() == n, ErrorCode::Input,
            "MAR(1) fit: K0 and K1 must be square and of equal size");
    require((K0 - K0.transpose()).cwiseAbs().maxCoeff() <= 1e-12, ErrorCode::Input,
            "MAR(1) fit: K0 must be symmetric");
    for (Eigen::Index i = 0; i < n; ++i)
        require(std::abs(K0(i, i) - 1.0) <= 1e-12, ErrorCode::Input, "MAR(1) fit: K0 must have unit diagonal");
    Eigen::LLT<Eigen::MatrixXd> k0(K0);
    require(k0.info() == Eigen::Success, ErrorCode::Input, "MAR(1) fit: K0 is not positive definite");

    Mar1Model m;
    m.K0 = K0;
    // A K0 = K1 with K0 symmetric: A^T = K0^-1 K1^T.
    m.A = k0.solve(K1.transpose()).transpose();
    const Eigen::VectorXcd eig = m.A.eigenvalues();
    const double radius = eig.cwiseAbs().maxCoeff();
    if (!(radius < 1.0)) {
        std::ostringstream os;
        os << "MAR(1) fit: A is not stationary (spectral radius " << radius << ")";
        fail(ErrorCode::Infeasible, os.str());
    }

    Eigen::MatrixXd S = K0 - m.A * K1.transpose();
    S = 0.5 * (S + S.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() == Eigen::Success) {
        m.B = llt.matrixL();
        return m;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const double smallest = es.eigenvalues().minCoeff();
    if (smallest < -1e-10) {
        std::ostringstream os;
        os << "MAR(1) fit: innovation covariance B B^T is indefinite (smallest eigenvalue " << smallest
           << "); the lag-0/lag-1 targets are jointly inconsistent, consider repairing the correlation matrices";
        fail(ErrorCode::Infeasible, os.str());
    }
    const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    m.B = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    std::ostringstream os;
    os << "B B^T marginally indefinite (smallest eigenvalue " << smallest << "), clipped to 0";
    m.warning = os.str();
    return m;
}

Mar1Generator::Mar1Generator(Mar1Model model, std::uint64_t seed) : model_(std::move(model)), rng_(seed) {
    const Eigen::Index n = model_.A.rows();
    noise_.resize(n);
    scratch_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) noise_(i) = rng_.normal();
    // Start in the stationary law N(0, K0).
    Eigen::LLT<Eigen::MatrixXd> llt(model_.K0);
    state_ = llt.matrixL() * noise_;
}

const Eigen::VectorXd& Mar1Generator::next(const Mar1Model& model) {
    require(model.A.rows() == state_.size(), ErrorCode::Input, "MAR(1) dimension changed between seasons");
    for (Eigen::Index i = 0; i < noise_.size(); ++i) noise_(i) = rng_.normal();
    scratch_.noalias() = model.A * state_;
    scratch_.noalias() += model.B * noise_;
    state_.swap(scratch_);
    return state_;
}

Eigen::MatrixXd Mar1Generator::generate(std::size_t n) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), state_.size());
    for (std::size_t t = 0; t < n; ++t) out.row(static_cast<Eigen::Index>(t)) = next().transpose();
    return out;
}

Eigen::MatrixXd simulate_mar1(const Mar1Model& model, std::size_t n, std::uint64_t seed) {
    require(n >= 1, ErrorCode::Input, "series length must be >= 1");
    Mar1Generator gen(model, seed);
    return gen.generate(n);
}

}  // namespace pgsim
