#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace etsfs::eval {

/// One series' holdout: actuals, forecasts, interval bounds and the in-sample
/// history that supplies the scaling denominator.
struct EvalRecord {
    std::string id;
    std::vector<double> history;
    std::vector<double> actuals;
    std::vector<double> point;
    std::vector<double> lower;  // may be empty when only point metrics are needed
    std::vector<double> upper;
    int period = 1;

    std::size_t horizon() const { return actuals.size(); }
    /// Throws DimensionMismatch / InvalidArgument on broken invariants.
    void validate(bool need_interval = false) const;
};

/// 1-based inclusive horizon range, e.g. {1, 2}.
struct HorizonBand {
    std::size_t first = 1;
    std::size_t last = 1;
    std::string label() const;
};

/// Parses "1-2,3-4,5-6" (single steps like "7" allowed). Throws Config.
std::vector<HorizonBand> parse_bands(const std::string& text);

/// Mean absolute lag-s naive error of the history (lag 1 when s = 1).
/// Throws ZeroDenominator when it is 0 and InvalidArgument if history <= s.
double naive_scale(const std::vector<double>& history, int period);

double mase(const EvalRecord& r);
double mase(const EvalRecord& r, const HorizonBand& band);
double smape(const EvalRecord& r);
double smape(const EvalRecord& r, const HorizonBand& band);
double msis(const EvalRecord& r, double alpha = 0.05);
double msis(const EvalRecord& r, const HorizonBand& band, double alpha = 0.05);

/// Percentage of positions where truth equals prediction.
double accuracy(const std::vector<std::string>& truth, const std::vector<std::string>& pred);

/// Per-class F1 (percent) over the declared class set; a class with no true
/// and no predicted members scores 0.
std::vector<double> f1_per_class(const std::vector<std::string>& truth, const std::vector<std::string>& pred,
                                 const std::vector<std::string>& classes);
double macro_f1(const std::vector<std::string>& truth, const std::vector<std::string>& pred,
                const std::vector<std::string>& classes);

enum class Loss { Squared, Absolute };
enum class DmDirection { NoDifference, FavorsA, FavorsB };
const char* to_string(DmDirection d);

struct DmResult {
    double statistic = 0.0;
    double p_value = 1.0;
    DmDirection direction = DmDirection::NoDifference;
};

/// Harvey-adjusted Diebold-Mariano test on L(a) - L(b); negative statistic
/// means a has lower loss. Throws DegenerateDifferential on a constant
/// differential and InvalidArgument unless size > h.
DmResult dm_test(const std::vector<double>& errors_a, const std::vector<double>& errors_b, std::size_t h,
                 Loss loss = Loss::Squared, double level = 0.05);

struct Embedding2D {
    std::vector<std::array<double, 2>> points;
    std::string source;
};

/// Share of the n_bins x n_bins grid (over the union bounding box) occupied by
/// ref but not by sim.
double miscoverage(const Embedding2D& sim, const Embedding2D& ref, std::size_t n_bins = 30);

/// Two-component PCA on column-standardized rows.
class Pca2 {
public:
    static Pca2 fit(const std::vector<std::vector<double>>& rows);
    Embedding2D project(const std::vector<std::vector<double>>& rows, std::string source) const;

private:
    std::vector<double> mean_, scale_;
    std::array<std::vector<double>, 2> axes_;
};

struct Summary {
    double mean = 0.0;
    double median = 0.0;
    std::size_t count = 0;
};

/// Mean and median ignoring non-finite values.
Summary summarize(std::vector<double> values);

} // namespace etsfs::eval
