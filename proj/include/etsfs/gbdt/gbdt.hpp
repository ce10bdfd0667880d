#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace etsfs::gbdt {

/// Dense row-major matrix with named columns.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::vector<std::string> names) : names_(std::move(names)) {}

    void add_row(std::span<const double> row);
    std::size_t rows() const { return names_.empty() ? 0 : values_.size() / names_.size(); }
    std::size_t cols() const { return names_.size(); }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values_).subspan(i * cols(), cols());
    }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
    const std::vector<std::string>& names() const { return names_; }
    /// Rows selected by index, in the given order.
    FeatureMatrix subset(std::span<const std::size_t> rows) const;

private:
    std::vector<std::string> names_;
    std::vector<double> values_;
};

struct TrainConfig {
    double eta = 0.1;
    int num_leaves = 31;
    int min_data_in_leaf = 20;
    int max_bin = 255;
    int num_boost_round = 100;
    double bagging_fraction = 1.0;
    int bagging_freq = 0;
    double feature_fraction = 1.0;
    std::uint64_t seed = 0;
    /// L2 penalty on leaf values.
    double lambda = 1e-3;
    double min_gain = 0.0;
    double min_sum_hessian = 1e-3;
    unsigned threads = 1;

    /// Throws Config on out-of-range values.
    void validate() const;

    // Table-9 style defaults for the three component classifiers.
    static TrainConfig error_classifier();
    static TrainConfig trend_classifier();
    static TrainConfig season_classifier();
};

struct Node {
    /// -1 marks a leaf.
    std::int32_t feature = -1;
    /// Rows with x <= threshold go left; NaN goes right.
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    /// Leaf output, already scaled by the learning rate.
    double value = 0.0;
    double gain = 0.0;
    std::uint32_t count = 0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::int32_t class_index = 0;
    std::vector<Node> nodes;  // root at 0

    double predict(std::span<const double> x) const;
    std::size_t num_leaves() const;
};

struct SplitRecord {
    int round = 0;
    int class_index = 0;
    int feature = 0;
    double gain = 0.0;
};

struct TrainLog {
    std::vector<SplitRecord> splits;
    /// Multiclass log-loss on the full training set after each round.
    std::vector<double> train_loss;
};

struct TreeEnsemble {
    std::vector<std::string> class_labels;
    std::vector<std::string> feature_names;
    /// Per-class starting score; -inf for classes absent from training data.
    std::vector<double> base_score;
    std::vector<std::vector<double>> bin_edges;
    /// Round-major: trees[r * n_classes + k] belongs to class k.
    std::vector<Tree> trees;
    std::vector<double> gain_by_feature;
    TrainConfig config;

    std::size_t n_classes() const { return class_labels.size(); }
    std::size_t n_features() const { return feature_names.size(); }

    std::vector<double> raw_scores(std::span<const double> x) const;
    /// Softmax of raw scores. Throws DimensionMismatch on wrong length.
    std::vector<double> predict_proba(std::span<const double> x) const;
    std::size_t predict_class(std::span<const double> x) const;

    /// Features by descending total gain; ties keep feature order.
    std::vector<std::pair<std::string, double>> feature_gain() const;

    std::vector<std::byte> save() const;
    static TreeEnsemble load(std::span<const std::byte> bytes);
    /// Human-readable dump; not accepted by load().
    std::string to_json() const;
};

inline constexpr std::uint32_t kFormatVersion = 1;

/// Quantile bin boundaries: midpoints between distinct values when they fit
/// in max_bin bins, equal-frequency cut points otherwise.
std::vector<double> bin_edges(std::span<const double> column, int max_bin);

/// Trains a softmax ensemble. `y` holds indices into `class_labels`.
TreeEnsemble train(const FeatureMatrix& x, std::span<const int> y, std::vector<std::string> class_labels,
                   const TrainConfig& config, TrainLog* log = nullptr);

/// Macro-averaged one-vs-rest ROC AUC; classes with no positives or no
/// negatives are skipped.
double macro_auc(const std::vector<std::vector<double>>& proba, std::span<const int> y, std::size_t n_classes);

struct TuneGrid {
    std::vector<int> num_leaves;
    std::vector<int> min_data_in_leaf;
    std::vector<int> max_bin;
    std::vector<int> num_boost_round;
};

struct TuneResult {
    TrainConfig best;
    double best_auc = 0.0;
    std::vector<std::pair<TrainConfig, double>> scores;
};

/// Exhaustive grid search scored by k-fold cross-validated macro AUC.
TuneResult tune(const FeatureMatrix& x, std::span<const int> y, const std::vector<std::string>& class_labels,
                const TrainConfig& base, const TuneGrid& grid, int folds = 5);

} // namespace etsfs::gbdt
