#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "etsfs/core/error.hpp"
#include "etsfs/core/parallel.hpp"
#include "etsfs/core/rng.hpp"
#include "etsfs/gbdt/gbdt.hpp"

namespace etsfs::gbdt {

void FeatureMatrix::add_row(std::span<const double> row) {
    if (row.size() != cols())
        throw Error(ErrorCode::DimensionMismatch, "row has " + std::to_string(row.size()) + " values, expected " +
                                                      std::to_string(cols()));
    values_.insert(values_.end(), row.begin(), row.end());
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> rows) const {
    FeatureMatrix out(names_);
    out.values_.reserve(rows.size() * cols());
    for (std::size_t r : rows) out.add_row(row(r));
    return out;
}

void TrainConfig::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::Config, what); };
    if (!(eta > 0.0 && eta <= 1.0)) bad("eta must lie in (0, 1]");
    if (num_leaves < 2) bad("num_leaves must be at least 2");
    if (min_data_in_leaf < 1) bad("min_data_in_leaf must be positive");
    if (max_bin < 2 || max_bin > 255) bad("max_bin must lie in [2, 255]");
    if (num_boost_round < 0) bad("num_boost_round must be non-negative");
    if (!(bagging_fraction > 0.0 && bagging_fraction <= 1.0)) bad("bagging_fraction must lie in (0, 1]");
    if (bagging_freq < 0) bad("bagging_freq must be non-negative");
    if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) bad("feature_fraction must lie in (0, 1]");
    if (!(lambda >= 0.0)) bad("lambda must be non-negative");
    if (!(min_gain >= 0.0)) bad("min_gain must be non-negative");
    if (!(min_sum_hessian >= 0.0)) bad("min_sum_hessian must be non-negative");
}

namespace {

TrainConfig table_defaults(int leaves, int min_data, int max_bin, int rounds) {
    TrainConfig c;
    c.eta = 0.05;
    c.num_leaves = leaves;
    c.min_data_in_leaf = min_data;
    c.max_bin = max_bin;
    c.num_boost_round = rounds;
    c.bagging_fraction = 0.8;
    c.bagging_freq = 4;
    c.feature_fraction = 0.7;
    c.seed = 123;
    return c;
}

} // namespace

TrainConfig TrainConfig::error_classifier() { return table_defaults(92, 90, 175, 600); }
TrainConfig TrainConfig::trend_classifier() { return table_defaults(80, 100, 225, 800); }
TrainConfig TrainConfig::season_classifier() { return table_defaults(64, 60, 175, 1000); }

std::vector<double> bin_edges(std::span<const double> column, int max_bin) {
    std::vector<double> sorted(column.begin(), column.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> edges;
    if (distinct.size() <= static_cast<std::size_t>(max_bin)) {
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i) edges.push_back(0.5 * (distinct[i] + distinct[i + 1]));
        return edges;
    }
    // Equal-frequency cut positions, each nudged within half a bin width to
    // the widest gap between neighbouring values so clusters are not split.
    const std::size_t n = sorted.size();
    const double width = static_cast<double>(n) / max_bin;
    std::size_t last = 0;
    for (int k = 1; k < max_bin; ++k) {
        const double centre = k * width;
        const auto lo = std::max<std::size_t>(last + 1, static_cast<std::size_t>(std::ceil(centre - 0.5 * width)));
        const auto hi = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::floor(centre + 0.5 * width)));
        std::size_t pick = 0;
        double best_gap = 0.0, best_dist = 0.0;
        for (std::size_t pos = lo; pos <= hi; ++pos) {
            const double gap = sorted[pos] - sorted[pos - 1];
            if (!(gap > 0.0)) continue;
            const double dist = std::abs(static_cast<double>(pos) - centre);
            if (pick == 0 || gap > best_gap || (gap == best_gap && dist < best_dist)) {
                pick = pos;
                best_gap = gap;
                best_dist = dist;
            }
        }
        if (pick == 0) {
            // no value change near the target: cut below the next new value
            const auto it = std::upper_bound(sorted.begin() + static_cast<std::ptrdiff_t>(hi), sorted.end(),
                                             sorted[hi == 0 ? 0 : hi - 1]);
            if (it == sorted.end()) break;
            pick = static_cast<std::size_t>(it - sorted.begin());
            if (pick <= last) continue;
        }
        edges.push_back(0.5 * (sorted[pick - 1] + sorted[pick]));
        last = pick;
    }
    return edges;
}

namespace {

struct BinStat {
    double g = 0.0;
    double h = 0.0;
    std::uint32_t n = 0;
};

struct Split {
    double gain = 0.0;
    int feature = -1;
    int bin = -1;
};

struct Leaf {
    std::vector<std::uint32_t> rows;
    std::vector<BinStat> hist;
    double g = 0.0;
    double h = 0.0;
    Split best;
    std::int32_t node = 0;
};

class Grower {
public:
    Grower(const std::vector<std::vector<std::uint8_t>>& bins, const std::vector<std::vector<double>>& edges,
           const TrainConfig& cfg)
        : bins_(bins), edges_(edges), cfg_(cfg) {
        offsets_.resize(bins.size() + 1, 0);
        for (std::size_t f = 0; f < bins.size(); ++f) offsets_[f + 1] = offsets_[f] + edges[f].size() + 1;
    }

    Tree grow(std::vector<std::uint32_t> rows, std::span<const double> g, std::span<const double> h,
              const std::vector<int>& features, std::vector<std::pair<int, double>>& splits) {
        g_ = g;
        h_ = h;
        features_ = &features;
        Tree tree;
        tree.nodes.emplace_back();
        std::vector<Leaf> leaves(1);
        leaves[0].rows = std::move(rows);
        build(leaves[0]);
        evaluate(leaves[0]);

        while (leaves.size() < static_cast<std::size_t>(cfg_.num_leaves)) {
            std::size_t pick = leaves.size();
            double best = cfg_.min_gain;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (leaves[i].best.feature >= 0 && leaves[i].best.gain > best) {
                    best = leaves[i].best.gain;
                    pick = i;
                }
            }
            if (pick == leaves.size()) break;

            Leaf& parent = leaves[pick];
            const auto f = static_cast<std::size_t>(parent.best.feature);
            const auto b = static_cast<std::uint8_t>(parent.best.bin);
            Leaf left, right;
            for (std::uint32_t r : parent.rows) (bins_[f][r] <= b ? left.rows : right.rows).push_back(r);

            Leaf& small = left.rows.size() <= right.rows.size() ? left : right;
            Leaf& large = left.rows.size() <= right.rows.size() ? right : left;
            build(small);
            large.hist = std::move(parent.hist);
            for (std::size_t i = 0; i < large.hist.size(); ++i) {
                large.hist[i].g -= small.hist[i].g;
                large.hist[i].h -= small.hist[i].h;
                large.hist[i].n -= small.hist[i].n;
            }
            totals(large);

            Node& node = tree.nodes[static_cast<std::size_t>(parent.node)];
            node.feature = static_cast<std::int32_t>(f);
            node.threshold = edges_[f][b];
            node.gain = parent.best.gain;
            node.left = static_cast<std::int32_t>(tree.nodes.size());
            node.right = node.left + 1;
            left.node = node.left;
            right.node = node.right;
            splits.emplace_back(static_cast<int>(f), parent.best.gain);
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();

            evaluate(left);
            evaluate(right);
            leaves[pick] = std::move(left);
            leaves.push_back(std::move(right));
        }
        for (auto& leaf : leaves) {
            Node& node = tree.nodes[static_cast<std::size_t>(leaf.node)];
            node.value = -cfg_.eta * leaf.g / (leaf.h + cfg_.lambda);
            node.count = static_cast<std::uint32_t>(leaf.rows.size());
        }
        return tree;
    }

private:
    void build(Leaf& leaf) const {
        leaf.hist.assign(offsets_.back(), BinStat{});
        const auto& feats = *features_;
        parallel_for(feats.size(), cfg_.threads, [&](std::size_t i) {
            const auto f = static_cast<std::size_t>(feats[i]);
            BinStat* hist = leaf.hist.data() + offsets_[f];
            const auto& col = bins_[f];
            for (std::uint32_t r : leaf.rows) {
                BinStat& s = hist[col[r]];
                s.g += g_[r];
                s.h += h_[r];
                ++s.n;
            }
        });
        totals(leaf);
    }

    void totals(Leaf& leaf) const {
        leaf.g = 0.0;
        leaf.h = 0.0;
        for (std::uint32_t r : leaf.rows) {
            leaf.g += g_[r];
            leaf.h += h_[r];
        }
    }

    void evaluate(Leaf& leaf) const {
        leaf.best = Split{};
        const std::uint32_t n = static_cast<std::uint32_t>(leaf.rows.size());
        const auto min_data = static_cast<std::uint32_t>(cfg_.min_data_in_leaf);
        if (n < 2 * min_data) return;
        const double lam = cfg_.lambda;
        const double parent = leaf.g * leaf.g / (leaf.h + lam);
        double best = cfg_.min_gain;
        for (int fi : *features_) {
            const auto f = static_cast<std::size_t>(fi);
            const std::size_t nb = edges_[f].size() + 1;
            const BinStat* hist = leaf.hist.data() + offsets_[f];
            double gl = 0.0, hl = 0.0;
            std::uint32_t nl = 0;
            for (std::size_t b = 0; b + 1 < nb; ++b) {
                gl += hist[b].g;
                hl += hist[b].h;
                nl += hist[b].n;
                if (nl < min_data) continue;
                const std::uint32_t nr = n - nl;
                if (nr < min_data) break;
                const double gr = leaf.g - gl, hr = leaf.h - hl;
                if (hl < cfg_.min_sum_hessian || hr < cfg_.min_sum_hessian) continue;
                const double gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent;
                if (gain > best) {
                    best = gain;
                    leaf.best = Split{gain, fi, static_cast<int>(b)};
                }
            }
        }
    }

    const std::vector<std::vector<std::uint8_t>>& bins_;
    const std::vector<std::vector<double>>& edges_;
    const TrainConfig& cfg_;
    std::vector<std::size_t> offsets_;
    std::span<const double> g_, h_;
    const std::vector<int>* features_ = nullptr;
};

void softmax_inplace(std::span<double> s) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : s) m = std::max(m, v);
    double z = 0.0;
    for (double& v : s) {
        v = std::isinf(v) && v < 0 ? 0.0 : std::exp(v - m);
        z += v;
    }
    for (double& v : s) v /= z;
}

} // namespace

TreeEnsemble train(const FeatureMatrix& x, std::span<const int> y, std::vector<std::string> class_labels,
                   const TrainConfig& config, TrainLog* log) {
    config.validate();
    const std::size_t n = x.rows(), nf = x.cols();
    const std::size_t k = class_labels.size();
    if (y.size() != n)
        throw Error(ErrorCode::DimensionMismatch, std::to_string(n) + " rows but " + std::to_string(y.size()) + " labels");
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "no class labels given");
    if (n == 0 || n < static_cast<std::size_t>(config.min_data_in_leaf))
        throw Error(ErrorCode::InvalidArgument, "training set smaller than min_data_in_leaf");
    std::vector<std::size_t> class_count(k, 0);
    for (int c : y) {
        if (c < 0 || static_cast<std::size_t>(c) >= k)
            throw Error(ErrorCode::InvalidArgument, "label index " + std::to_string(c) + " out of range");
        ++class_count[static_cast<std::size_t>(c)];
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t f = 0; f < nf; ++f)
            if (!std::isfinite(x.at(r, f)))
                throw Error(ErrorCode::DegenerateData, "non-finite value in row " + std::to_string(r) + ", column " +
                                                           x.names()[f]);

    TreeEnsemble model;
    model.class_labels = std::move(class_labels);
    model.feature_names = x.names();
    model.config = config;
    model.gain_by_feature.assign(nf, 0.0);
    model.base_score.resize(k);
    std::size_t present = 0;
    for (std::size_t c = 0; c < k; ++c) {
        model.base_score[c] = class_count[c] > 0 ? 0.0 : -std::numeric_limits<double>::infinity();
        present += class_count[c] > 0 ? 1 : 0;
    }

    model.bin_edges.resize(nf);
    std::vector<std::vector<std::uint8_t>> bins(nf, std::vector<std::uint8_t>(n));
    parallel_for(nf, config.threads, [&](std::size_t f) {
        std::vector<double> col(n);
        for (std::size_t r = 0; r < n; ++r) col[r] = x.at(r, f);
        model.bin_edges[f] = bin_edges(col, config.max_bin);
        const auto& e = model.bin_edges[f];
        for (std::size_t r = 0; r < n; ++r)
            bins[f][r] = static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), col[r]) - e.begin());
    });
    if (present < 2) return model;

    std::vector<double> scores(n * k);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < k; ++c) scores[r * k + c] = model.base_score[c];
    std::vector<double> prob(n * k), g(n), h(n);
    std::vector<std::uint32_t> bag(n);
    std::iota(bag.begin(), bag.end(), 0u);
    std::vector<int> all_features(nf);
    std::iota(all_features.begin(), all_features.end(), 0);

    Grower grower(bins, model.bin_edges, config);
    const bool bagging = config.bagging_freq > 0 && config.bagging_fraction < 1.0;
    const auto bag_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.bagging_fraction * static_cast<double>(n))));
    const auto feat_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.feature_fraction * static_cast<double>(nf))));

    for (int round = 0; round < config.num_boost_round; ++round) {
        if (bagging && round % config.bagging_freq == 0) {
            std::vector<std::uint32_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0u);
            Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(round)));
            std::shuffle(perm.begin(), perm.end(), rng.engine());
            bag.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(bag_size));
            std::sort(bag.begin(), bag.end());
        }
        prob = scores;
        for (std::size_t r = 0; r < n; ++r) softmax_inplace(std::span<double>(prob).subspan(r * k, k));

        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t r = 0; r < n; ++r) {
                const double p = prob[r * k + c];
                g[r] = p - (static_cast<std::size_t>(y[r]) == c ? 1.0 : 0.0);
                h[r] = p * (1.0 - p);
            }
            std::vector<int> features = all_features;
            if (feat_count < nf) {
                Rng rng(mix_seed(config.seed ^ 0x5a17c0de5a17c0deULL,
                                 static_cast<std::uint64_t>(round) * k + c));
                std::shuffle(features.begin(), features.end(), rng.engine());
                features.resize(feat_count);
                std::sort(features.begin(), features.end());
            }
            std::vector<std::pair<int, double>> splits;
            Tree tree = grower.grow(bag, g, h, features, splits);
            tree.class_index = static_cast<std::int32_t>(c);
            for (const auto& [f, gain] : splits) {
                model.gain_by_feature[static_cast<std::size_t>(f)] += gain;
                if (log) log->splits.push_back({round, static_cast<int>(c), f, gain});
            }
            for (std::size_t r = 0; r < n; ++r) scores[r * k + c] += tree.predict(x.row(r));
            model.trees.push_back(std::move(tree));
        }
        if (log) {
            double loss = 0.0;
            std::vector<double> p(k);
            for (std::size_t r = 0; r < n; ++r) {
                std::copy_n(scores.begin() + static_cast<std::ptrdiff_t>(r * k), k, p.begin());
                softmax_inplace(p);
                loss -= std::log(std::max(p[static_cast<std::size_t>(y[r])], 1e-300));
            }
            log->train_loss.push_back(loss / static_cast<double>(n));
        }
    }
    return model;
}

} // namespace etsfs::gbdt
