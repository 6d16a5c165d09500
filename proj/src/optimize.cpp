#include "pgsim/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pgsim {

namespace {

double safe_eval(const Objective& f, const std::vector<double>& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

MinimizeResult nelder_mead_once(const Objective& f, const std::vector<double>& start,
                                const NelderMeadOptions& opt, int budget) {
    const std::size_t n = start.size();
    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double step = start[i] != 0.0 ? opt.initial_step * std::max(1.0, std::abs(start[i]))
                                            : opt.initial_step;
        simplex[i + 1][i] += step;
    }
    int evals = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        values[i] = safe_eval(f, simplex[i]);
        ++evals;
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    bool converged = false;

    auto point = [&](double t, std::vector<double>& out, const std::vector<double>& worst) {
        for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + t * (worst[j] - centroid[j]);
    };

    while (evals < budget) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        double diameter = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[best][j]));
        const double spread = values[worst] - values[best];
        if (diameter <= opt.x_tolerance ||
            (std::isfinite(spread) && spread <= opt.f_tolerance * std::abs(values[best]))) {
            converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
        }

        point(-1.0, trial, simplex[worst]);
        const double fr = safe_eval(f, trial);
        ++evals;
        if (fr < values[best]) {
            point(-2.0, trial2, simplex[worst]);
            const double fe = safe_eval(f, trial2);
            ++evals;
            if (fe < fr) {
                simplex[worst] = trial2;
                values[worst] = fe;
            } else {
                simplex[worst] = trial;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = trial;
            values[worst] = fr;
            continue;
        }
        // Contraction: outside if the reflection improved on the worst, else inside.
        const bool outside = fr < values[worst];
        point(outside ? -0.5 : 0.5, trial2, simplex[worst]);
        const double fc = safe_eval(f, trial2);
        ++evals;
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = trial2;
            values[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j)
                simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
            values[i] = safe_eval(f, simplex[i]);
            ++evals;
        }
    }

    const auto it = std::min_element(values.begin(), values.end());
    const std::size_t best = static_cast<std::size_t>(it - values.begin());
    return {simplex[best], values[best], evals, converged};
}

}  // namespace

MinimizeResult nelder_mead(const Objective& f, std::vector<double> start,
                           const NelderMeadOptions& options) {
    if (start.empty()) {
        const double v = safe_eval(f, start);
        return {start, v, 1, true};
    }
    MinimizeResult result = nelder_mead_once(f, start, options, options.max_evaluations);
    int total = result.evaluations;
    for (int r = 0; r < options.restarts && total < options.max_evaluations; ++r) {
        NelderMeadOptions local = options;
        local.initial_step = options.initial_step * 0.1;
        MinimizeResult again =
            nelder_mead_once(f, result.x, local, options.max_evaluations - total);
        total += again.evaluations;
        const bool improved = again.value < result.value;
        if (again.value <= result.value) result = again;
        if (!improved) break;
    }
    result.evaluations = total;
    return result;
}

MinimizeResult multi_start_minimize(const Objective& f,
                                    const std::vector<std::vector<double>>& starts,
                                    const NelderMeadOptions& options) {
    if (starts.empty()) throw std::invalid_argument("multi_start_minimize: no start points");
    MinimizeResult best;
    best.value = std::numeric_limits<double>::infinity();
    int total = 0;
    for (const auto& s : starts) {
        MinimizeResult r = nelder_mead(f, s, options);
        total += r.evaluations;
        if (r.value < best.value || best.x.empty()) best = std::move(r);
    }
    best.evaluations = total;
    return best;
}

}  // namespace pgsim
