#pragma once

#include <cstddef>

namespace etsfs::features::idx {

// zero-based manifest positions
enum : std::size_t {
    x_acf1, x_acf10, diff1_acf1, diff1_acf10, diff2_acf1, diff2_acf10, seas_acf1,
    arch_lm, crossing_point, entropy, flat_spots, arch_acf, garch_acf, arch_r2, garch_r2,
    hurst, lumpiness, nonlinearity, x_pacf5, diff1x_pacf5, diff2x_pacf5, seas_pacf,
    nperiods, seasonal_period, trend, spike, linearity, curvature, e_acf1, e_acf10,
    seasonal_strength, peak, trough, stability, unitroot_kpss, unitroot_pp, series_length,
    histogram_mode5, histogram_mode10, binary_mean_longstretch1, outlier_p, outlier_n,
    f1ecac, firstmin_ac, welch_area_5_1, welch_centroid, local_mean3_stderr, trev_1_num,
    histogram_ami_2_5, ami_40_fmmi, pnn40, binary_diff_longstretch0, motif_three_hh,
    local_mean1_tauresrat, embed2_expfit_meandiff, fluct_dfa, fluct_rsrange,
    transition_matrix_sumdiagcov, periodicity_wang,
};

} // namespace etsfs::features::idx
