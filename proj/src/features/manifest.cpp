#include "etsfs/core/error.hpp"
#include "etsfs/features/features.hpp"

namespace etsfs::features {

const std::array<std::string_view, kNumFeatures>& manifest() {
    static constexpr std::array<std::string_view, kNumFeatures> names{
        "x_acf1",
        "x_acf10",
        "diff1_acf1",
        "diff1_acf10",
        "diff2_acf1",
        "diff2_acf10",
        "seas_acf1",
        "ARCH.LM",
        "crossing_point",
        "entropy",
        "flat_spots",
        "arch_acf",
        "garch_acf",
        "arch_r2",
        "garch_r2",
        "hurst",
        "lumpiness",
        "nonlinearity",
        "x_pacf5",
        "diff1x_pacf5",
        "diff2x_pacf5",
        "seas_pacf",
        "nperiods",
        "seasonal_period",
        "trend",
        "spike",
        "linearity",
        "curvature",
        "e_acf1",
        "e_acf10",
        "seasonal_strength",
        "peak",
        "trough",
        "stability",
        "unitRoot_kpss",
        "unitRoot_pp",
        "series_length",
        "histogram_mode5",
        "histogram_mode10",
        "binaryStats_mean_longStretch1",
        "outlierInclude_p_001_mdrmd",
        "outlierInclude_n_001_mdrmd",
        "f1ecac",
        "firstmin_ac",
        "summaries_welch_rect_area_5_1",
        "summaries_welch_rect_centroid",
        "localSimple_mean3_stdErr",
        "trev_1_num",
        "histogramAMI_even_2_5",
        "autoMutualInfoStats_40_gaussian_fmmi",
        "hrv_classic_pnn40",
        "binaryStats_diff_longStretch0",
        "motifThree_quantile_hh",
        "localSimple_mean1_tauresrat",
        "embed2_dist_tau_d_expFit_meanDiff",
        "fluctAnal_2_dfa_50_1_2_logi_prop_r1",
        "fluctAnal_2_rsrangefit_50_1_logi_prop_r1",
        "transitionMatrix_3ac_sumDiagCov",
        "periodicityWang_th0_01",
    };
    return names;
}

std::size_t index_of(std::string_view name) {
    const auto& names = manifest();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw Error(ErrorCode::InvalidArgument, "unknown feature '" + std::string(name) + "'");
}

} // namespace etsfs::features
