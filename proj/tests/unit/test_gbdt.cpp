#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "etsfs/core/error.hpp"
#include "etsfs/core/rng.hpp"
#include "etsfs/gbdt/gbdt.hpp"
#include "reference_gbdt.hpp"

using namespace etsfs;
using namespace etsfs::gbdt;

namespace {

std::vector<std::string> names(std::size_t k) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back("f" + std::to_string(i));
    return out;
}

struct Data {
    FeatureMatrix x;
    std::vector<int> y;
};

/// Three classes driven by features 0 and 1; the rest are noise.
Data three_class(std::size_t n, std::size_t nf, std::uint64_t seed) {
    Rng rng(seed);
    Data d{FeatureMatrix(names(nf)), {}};
    std::vector<double> row(nf);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : row) v = rng.normal();
        const double s = row[0] + 0.5 * row[1] + 0.3 * rng.normal();
        d.y.push_back(s < -0.4 ? 0 : (s < 0.5 ? 1 : 2));
        d.x.add_row(row);
    }
    return d;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io;  // sentinel: nothing thrown
}

} // namespace

TEST(Config, TableDefaultsValidate) {
    for (const auto& c : {TrainConfig::error_classifier(), TrainConfig::trend_classifier(), TrainConfig::season_classifier()}) {
        EXPECT_NO_THROW(c.validate());
        EXPECT_EQ(c.eta, 0.05);
        EXPECT_EQ(c.bagging_fraction, 0.8);
        EXPECT_EQ(c.bagging_freq, 4);
        EXPECT_EQ(c.feature_fraction, 0.7);
    }
    EXPECT_EQ(TrainConfig::error_classifier().num_leaves, 92);
    EXPECT_EQ(TrainConfig::trend_classifier().max_bin, 225);
    EXPECT_EQ(TrainConfig::season_classifier().num_boost_round, 1000);
    TrainConfig c;
    c.max_bin = 256;
    EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::Config);
    c = {};
    c.eta = 0.0;
    EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::Config);
}

TEST(BinEdges, MidpointsAndQuantiles) {
    std::vector<double> v{3, 1, 2, 2, 5};
    EXPECT_EQ(bin_edges(v, 255), (std::vector<double>{1.5, 2.5, 4.0}));
    std::vector<double> many(1000);
    std::iota(many.begin(), many.end(), 0.0);
    const auto e = bin_edges(many, 10);
    EXPECT_EQ(e.size(), 9u);
    EXPECT_TRUE(std::is_sorted(e.begin(), e.end()));
    EXPECT_TRUE(bin_edges(std::vector<double>(10, 1.0), 255).empty());
}

TEST(Train, SingleClassPredictsCertainty) {
    Data d = three_class(100, 3, 1);
    std::fill(d.y.begin(), d.y.end(), 2);
    TrainConfig cfg;
    cfg.num_boost_round = 5;
    const auto m = train(d.x, d.y, {"A", "B", "C"}, cfg);
    EXPECT_TRUE(m.trees.empty());
    const auto p = m.predict_proba(std::vector<double>{9, -9, 0});
    EXPECT_EQ(p[2], 1.0);
    EXPECT_EQ(p[0] + p[1], 0.0);
}

TEST(Train, SeparableClustersPerfectWithinFiveRounds) {
    Rng rng(5);
    FeatureMatrix x(names(3));
    std::vector<int> y;
    for (int i = 0; i < 1000; ++i) {
        const int c = i % 2;
        x.add_row(std::vector<double>{(c == 0 ? -2.0 : 2.0) + rng.uniform(-1, 1), rng.normal(), rng.normal()});
        y.push_back(c);
    }
    TrainConfig cfg;
    cfg.num_boost_round = 5;
    const auto m = train(x, y, {"neg", "pos"}, cfg);
    int correct = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) correct += static_cast<int>(m.predict_class(x.row(r))) == y[r];
    EXPECT_EQ(correct, 1000);
    const auto gains = m.feature_gain();
    double total = 0;
    for (auto& [n, g] : gains) total += g;
    EXPECT_EQ(gains[0].first, "f0");
    EXPECT_GT(gains[0].second, 0.99 * total);
}

TEST(Train, DeterministicBytes) {
    const Data d = three_class(400, 6, 2);
    TrainConfig cfg;
    cfg.num_boost_round = 20;
    cfg.bagging_fraction = 0.7;
    cfg.bagging_freq = 2;
    cfg.feature_fraction = 0.5;
    cfg.seed = 99;
    const auto a = train(d.x, d.y, {"a", "b", "c"}, cfg).save();
    const auto b = train(d.x, d.y, {"a", "b", "c"}, cfg).save();
    EXPECT_EQ(a, b);
    cfg.seed = 100;
    EXPECT_NE(a, train(d.x, d.y, {"a", "b", "c"}, cfg).save());
}

TEST(Train, MonotoneLossWithoutBagging) {
    const Data d = three_class(500, 5, 3);
    TrainConfig cfg;
    cfg.num_boost_round = 60;
    cfg.min_data_in_leaf = 10;
    TrainLog log;
    train(d.x, d.y, {"a", "b", "c"}, cfg, &log);
    ASSERT_EQ(log.train_loss.size(), 60u);
    EXPECT_LT(log.train_loss.front(), std::log(3.0));
    for (std::size_t i = 1; i < log.train_loss.size(); ++i) EXPECT_LE(log.train_loss[i], log.train_loss[i - 1] + 1e-12);
}

TEST(Train, LeafLimitsAndGainAccounting) {
    const Data d = three_class(600, 5, 4);
    TrainConfig cfg;
    cfg.num_boost_round = 15;
    cfg.num_leaves = 7;
    cfg.min_data_in_leaf = 25;
    TrainLog log;
    const auto m = train(d.x, d.y, {"a", "b", "c"}, cfg, &log);
    for (const Tree& t : m.trees) {
        EXPECT_LE(t.num_leaves(), 7u);
        for (const Node& n : t.nodes)
            if (n.is_leaf()) {
                EXPECT_GE(n.count, 25u);
            }
    }
    double logged = 0, stored = 0;
    for (const auto& s : log.splits) logged += s.gain;
    for (double g : m.gain_by_feature) {
        EXPECT_GE(g, 0.0);
        stored += g;
    }
    EXPECT_NEAR(logged, stored, 1e-9 * logged);
}

TEST(Train, ConstantFeatureHasZeroGain) {
    Data d = three_class(300, 1, 6);
    FeatureMatrix x(std::vector<std::string>{"signal", "flat"});
    for (std::size_t r = 0; r < d.x.rows(); ++r) x.add_row(std::vector<double>{d.x.at(r, 0), 7.0});
    TrainConfig cfg;
    cfg.num_boost_round = 10;
    const auto m = train(x, d.y, {"a", "b", "c"}, cfg);
    EXPECT_EQ(m.gain_by_feature[1], 0.0);
    EXPECT_GT(m.gain_by_feature[0], 0.0);
    EXPECT_EQ(m.feature_gain().back().first, "flat");
}

TEST(Train, HistogramMatchesExhaustiveSplits) {
    const Data d = three_class(180, 4, 7);
    TrainConfig cfg;
    cfg.num_boost_round = 8;
    cfg.num_leaves = 6;
    cfg.min_data_in_leaf = 8;
    cfg.eta = 0.3;
    const auto m = train(d.x, d.y, {"a", "b", "c"}, cfg);
    const auto ref = etsfs::testing::reference_boost(d.x, d.y, 3, cfg);
    ASSERT_EQ(m.trees.size(), ref.size());
    for (std::size_t t = 0; t < ref.size(); ++t) {
        ASSERT_EQ(m.trees[t].nodes.size(), ref[t].nodes.size()) << "tree " << t;
        for (std::size_t i = 0; i < ref[t].nodes.size(); ++i) {
            const Node& a = m.trees[t].nodes[i];
            const Node& b = ref[t].nodes[i];
            EXPECT_EQ(a.feature, b.feature);
            EXPECT_EQ(a.threshold, b.threshold);
            EXPECT_NEAR(a.value, b.value, 1e-9);
            EXPECT_NEAR(a.gain, b.gain, 1e-9 * (1 + b.gain));
        }
    }
}

TEST(Train, Errors) {
    Data d = three_class(50, 2, 8);
    TrainConfig cfg;
    FeatureMatrix bad(names(2));
    for (std::size_t r = 0; r < d.x.rows(); ++r) {
        std::vector<double> row(d.x.row(r).begin(), d.x.row(r).end());
        if (r == 10) row[1] = std::numeric_limits<double>::quiet_NaN();
        bad.add_row(row);
    }
    EXPECT_EQ(code_of([&] { train(bad, d.y, {"a", "b", "c"}, cfg); }), ErrorCode::DegenerateData);
    cfg.num_boost_round = 2;
    const auto m = train(d.x, d.y, {"a", "b", "c"}, cfg);
    EXPECT_EQ(code_of([&] { m.predict_proba(std::vector<double>{1.0}); }), ErrorCode::DimensionMismatch);
}

TEST(Predict, ZeroRoundsUniform) {
    const Data d = three_class(100, 3, 9);
    TrainConfig cfg;
    cfg.num_boost_round = 0;
    const auto m = train(d.x, d.y, {"a", "b", "c"}, cfg);
    for (double p : m.predict_proba(d.x.row(0))) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(Predict, HandBuiltTreeSoftmax) {
    TreeEnsemble m;
    m.class_labels = {"A", "Ad", "N"};
    m.feature_names = {"x", "z"};
    m.base_score = {0, 0, 0};
    m.bin_edges = {{}, {}};
    m.gain_by_feature = {1, 0};
    Tree t0;
    t0.class_index = 0;
    t0.nodes = {Node{0, 0.5, 1, 2}, Node{-1, 0, -1, -1, 0.7}, Node{-1, 0, -1, -1, -0.2}};
    Tree t2;
    t2.class_index = 2;
    t2.nodes = {Node{-1, 0, -1, -1, 1.3}};
    m.trees = {t0, Tree{1, {Node{-1, 0, -1, -1, 0.0}}}, t2};
    const auto p = m.predict_proba(std::vector<double>{0.1, 0.0});
    const double z = std::exp(0.7) + std::exp(0.0) + std::exp(1.3);
    EXPECT_NEAR(p[0], std::exp(0.7) / z, 1e-12);
    EXPECT_NEAR(p[1], 1.0 / z, 1e-12);
    EXPECT_NEAR(p[2], std::exp(1.3) / z, 1e-12);
    const auto q = m.predict_proba(std::vector<double>{std::numeric_limits<double>::quiet_NaN(), 0.0});
    EXPECT_NEAR(q[0], std::exp(-0.2) / (std::exp(-0.2) + 1.0 + std::exp(1.3)), 1e-12);
}

TEST(Predict, ProbabilitiesSumToOne) {
    const Data d = three_class(300, 4, 10);
    TrainConfig cfg;
    cfg.num_boost_round = 30;
    const auto m = train(d.x, d.y, {"a", "b", "c"}, cfg);
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> v(4);
        for (auto& x : v) x = rng.normal(0, 10);
        const auto p = m.predict_proba(v);
        EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
        for (double q : p) {
            EXPECT_GT(q, 0.0);
            EXPECT_LT(q, 1.0);
        }
    }
}

TEST(Serialize, RoundTripAndCorruption) {
    const Data d = three_class(300, 5, 11);
    TrainConfig cfg;
    cfg.num_boost_round = 12;
    cfg.bagging_fraction = 0.8;
    cfg.bagging_freq = 3;
    const auto m = train(d.x, d.y, {"a", "b", "c"}, cfg);
    const auto bytes = m.save();
    const auto back = TreeEnsemble::load(bytes);
    EXPECT_EQ(back.save(), bytes);
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v(5);
        for (auto& x : v) x = rng.normal(0, 2);
        const auto a = m.predict_proba(v), b = back.predict_proba(v);
        for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(a[c], b[c]);
    }
    EXPECT_FALSE(m.to_json().empty());

    auto truncated = bytes;
    truncated.resize(bytes.size() / 2);
    EXPECT_EQ(code_of([&] { TreeEnsemble::load(truncated); }), ErrorCode::CorruptArtifact);
    auto flipped = bytes;
    flipped[40] ^= std::byte{0x01};
    EXPECT_EQ(code_of([&] { TreeEnsemble::load(flipped); }), ErrorCode::CorruptArtifact);
    auto newer = bytes;
    newer[4] = std::byte{static_cast<unsigned char>(kFormatVersion + 1)};
    EXPECT_EQ(code_of([&] { TreeEnsemble::load(newer); }), ErrorCode::VersionMismatch);
    EXPECT_EQ(code_of([&] { TreeEnsemble::load(std::vector<std::byte>{}); }), ErrorCode::CorruptArtifact);
}

TEST(Auc, PerfectAndReversed) {
    std::vector<int> y{0, 0, 1, 1};
    std::vector<std::vector<double>> good{{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.1, 0.9}};
    EXPECT_DOUBLE_EQ(macro_auc(good, y, 2), 1.0);
    std::vector<std::vector<double>> bad{{0.1, 0.9}, {0.2, 0.8}, {0.7, 0.3}, {0.9, 0.1}};
    EXPECT_DOUBLE_EQ(macro_auc(bad, y, 2), 0.0);
    std::vector<std::vector<double>> flat(4, {0.5, 0.5});
    EXPECT_DOUBLE_EQ(macro_auc(flat, y, 2), 0.5);
}

TEST(Tune, PicksFromGrid) {
    const Data d = three_class(300, 4, 12);
    TrainConfig base;
    base.num_boost_round = 10;
    TuneGrid grid;
    grid.num_leaves = {2, 8};
    grid.min_data_in_leaf = {10, 40};
    const auto res = tune(d.x, d.y, {"a", "b", "c"}, base, grid, 3);
    EXPECT_EQ(res.scores.size(), 4u);
    double best = 0;
    for (auto& [c, s] : res.scores) best = std::max(best, s);
    EXPECT_EQ(res.best_auc, best);
    EXPECT_GT(res.best_auc, 0.8);
}
