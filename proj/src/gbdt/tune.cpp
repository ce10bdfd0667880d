#include <algorithm>
#include <numeric>

#include "etsfs/core/error.hpp"
#include "etsfs/core/rng.hpp"
#include "etsfs/gbdt/gbdt.hpp"

namespace etsfs::gbdt {

double macro_auc(const std::vector<std::vector<double>>& proba, std::span<const int> y, std::size_t n_classes) {
    if (proba.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "probabilities and labels differ in length");
    const std::size_t n = y.size();
    double total = 0.0;
    int used = 0;
    std::vector<std::size_t> order(n);
    std::vector<double> rank(n);
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return proba[a][c] < proba[b][c]; });
        // average ranks over ties
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j + 1 < n && proba[order[j + 1]][c] == proba[order[i]][c]) ++j;
            const double r = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
            i = j + 1;
        }
        double pos = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<std::size_t>(y[i]) == c) {
                pos += 1.0;
                sum += rank[i];
            }
        }
        const double neg = static_cast<double>(n) - pos;
        if (pos == 0.0 || neg == 0.0) continue;
        total += (sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
        ++used;
    }
    return used > 0 ? total / used : 0.5;
}

TuneResult tune(const FeatureMatrix& x, std::span<const int> y, const std::vector<std::string>& class_labels,
                const TrainConfig& base, const TuneGrid& grid, int folds) {
    if (folds < 2) throw Error(ErrorCode::Config, "cross-validation needs at least 2 folds");
    const std::size_t n = x.rows();
    if (n < static_cast<std::size_t>(folds)) throw Error(ErrorCode::InvalidArgument, "fewer rows than folds");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(mix_seed(base.seed, 0xf01d));
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<int> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));

    auto values = [](const std::vector<int>& v, int fallback) { return v.empty() ? std::vector<int>{fallback} : v; };
    TuneResult result;
    result.best = base;
    result.best_auc = -1.0;
    for (int leaves : values(grid.num_leaves, base.num_leaves))
        for (int min_data : values(grid.min_data_in_leaf, base.min_data_in_leaf))
            for (int max_bin : values(grid.max_bin, base.max_bin))
                for (int rounds : values(grid.num_boost_round, base.num_boost_round)) {
                    TrainConfig cfg = base;
                    cfg.num_leaves = leaves;
                    cfg.min_data_in_leaf = min_data;
                    cfg.max_bin = max_bin;
                    cfg.num_boost_round = rounds;
                    double auc = 0.0;
                    for (int f = 0; f < folds; ++f) {
                        std::vector<std::size_t> tr, te;
                        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? te : tr).push_back(i);
                        std::vector<int> ytr, yte;
                        for (auto i : tr) ytr.push_back(y[i]);
                        for (auto i : te) yte.push_back(y[i]);
                        const auto model = train(x.subset(tr), ytr, class_labels, cfg);
                        std::vector<std::vector<double>> proba;
                        for (auto i : te) proba.push_back(model.predict_proba(x.row(i)));
                        auc += macro_auc(proba, yte, class_labels.size());
                    }
                    auc /= folds;
                    result.scores.emplace_back(cfg, auc);
                    if (auc > result.best_auc) {
                        result.best_auc = auc;
                        result.best = cfg;
                    }
                }
    return result;
}

} // namespace etsfs::gbdt
