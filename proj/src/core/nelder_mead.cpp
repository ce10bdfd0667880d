#include "etsfs/core/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace etsfs {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

double sanitize(double v) {
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

} // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const NelderMeadOptions& options,
                             std::span<const double> steps) {
    const std::size_t dim = x0.size();
    NelderMeadResult result;
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return sanitize(f(x));
    };

    if (dim == 0) {
        result.x = x0;
        result.value = eval(x0);
        result.evaluations = evals;
        result.converged = true;
        return result;
    }

    std::vector<std::vector<double>> simplex(dim + 1, x0);
    std::vector<double> values(dim + 1);
    values[0] = eval(x0);
    for (std::size_t i = 0; i < dim; ++i) {
        const double step = steps.size() == dim ? steps[i] : options.initial_step;
        simplex[i + 1][i] += step;
        values[i + 1] = eval(simplex[i + 1]);
    }

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);

    while (evals < options.max_evaluations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        // stable sort keeps the earliest vertex first among ties
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[dim - 1];

        double diameter = 0.0;
        for (std::size_t v = 0; v <= dim; ++v) {
            double d2 = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const double d = simplex[v][i] - simplex[best][i];
                d2 += d * d;
            }
            diameter = std::max(diameter, std::sqrt(d2));
        }
        if (diameter < options.diameter_tol) {
            result.converged = true;
            break;
        }
        if (std::isfinite(values[worst]) &&
            values[worst] - values[best] <=
                options.rel_tol * (std::abs(values[best]) + options.rel_tol)) {
            result.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t v = 0; v <= dim; ++v) {
            if (v == worst) continue;
            for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[v][i];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        for (std::size_t i = 0; i < dim; ++i)
            trial[i] = centroid[i] + kReflect * (centroid[i] - simplex[worst][i]);
        const double f_reflect = eval(trial);

        if (f_reflect < values[best]) {
            for (std::size_t i = 0; i < dim; ++i)
                trial2[i] = centroid[i] + kExpand * (trial[i] - centroid[i]);
            const double f_expand = eval(trial2);
            if (f_expand < f_reflect) {
                simplex[worst] = trial2;
                values[worst] = f_expand;
            } else {
                simplex[worst] = trial;
                values[worst] = f_reflect;
            }
            continue;
        }
        if (f_reflect < values[second_worst]) {
            simplex[worst] = trial;
            values[worst] = f_reflect;
            continue;
        }

        const bool outside = f_reflect < values[worst];
        for (std::size_t i = 0; i < dim; ++i) {
            const double base = outside ? trial[i] : simplex[worst][i];
            trial2[i] = centroid[i] + kContract * (base - centroid[i]);
        }
        const double f_contract = eval(trial2);
        if (f_contract < std::min(f_reflect, values[worst]) ||
            (!outside && f_contract < values[worst])) {
            simplex[worst] = trial2;
            values[worst] = f_contract;
            continue;
        }

        for (std::size_t v = 0; v <= dim; ++v) {
            if (v == best) continue;
            for (std::size_t i = 0; i < dim; ++i)
                simplex[v][i] = simplex[best][i] + kShrink * (simplex[v][i] - simplex[best][i]);
            values[v] = eval(simplex[v]);
        }
    }

    std::size_t best = 0;
    for (std::size_t v = 1; v <= dim; ++v)
        if (values[v] < values[best]) best = v;
    result.x = simplex[best];
    result.value = values[best];
    result.evaluations = evals;
    return result;
}

} // namespace etsfs
