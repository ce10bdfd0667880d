#pragma once

#include <functional>
#include <span>
#include <vector>

namespace etsfs {

struct NelderMeadOptions {
    int max_evaluations = 2000;
    /// Stop when the largest vertex distance from the best vertex falls below this.
    double diameter_tol = 1e-8;
    /// Stop when the objective spread across the simplex is below
    /// rel_tol * (|f_best| + rel_tol).
    double rel_tol = 1e-10;
    double initial_step = 0.5;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Unconstrained simplex minimizer. Non-finite objective values are treated as
/// +infinity, so callers encode infeasibility by returning inf or NaN.
/// `steps` optionally overrides the per-coordinate initial simplex offsets.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const NelderMeadOptions& options,
                             std::span<const double> steps = {});

} // namespace etsfs
