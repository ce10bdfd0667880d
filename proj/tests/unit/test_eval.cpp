#include <cmath>

#include <gtest/gtest.h>

#include "etsfs/core/error.hpp"
#include "etsfs/core/rng.hpp"
#include "etsfs/eval/eval.hpp"

using namespace etsfs;
using namespace etsfs::eval;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io;
}

EvalRecord rec(std::vector<double> hist, std::vector<double> y, std::vector<double> f, std::vector<double> lo = {},
               std::vector<double> hi = {}, int period = 1) {
    return {"r", std::move(hist), std::move(y), std::move(f), std::move(lo), std::move(hi), period};
}

} // namespace

TEST(Metrics, MaseOracles) {
    EXPECT_NEAR(mase(rec({1, 2, 3, 4}, {5}, {4})), 1.0, 1e-10);
    EXPECT_EQ(mase(rec({1, 2, 3, 4}, {5, 6}, {5, 6})), 0.0);
    EXPECT_EQ(code_of([] { mase(rec({3, 3, 3, 3}, {5}, {4})); }), ErrorCode::ZeroDenominator);
    // seasonal lag: history 1..8 at period 4 has naive error 4
    EXPECT_NEAR(mase(rec({1, 2, 3, 4, 5, 6, 7, 8}, {9, 10}, {7, 10}, {}, {}, 4)), 0.25, 1e-12);
    EXPECT_EQ(code_of([] { mase(rec({1, 2}, {5}, {4}, {}, {}, 4)); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { mase(rec({1, 2, 3}, {5, 6}, {4})); }), ErrorCode::DimensionMismatch);
}

TEST(Metrics, SmapeOracles) {
    EXPECT_NEAR(smape(rec({1, 2}, {100}, {50})), 2.0 / 3.0, 1e-10);
    EXPECT_EQ(smape(rec({1, 2}, {1, 2}, {1, 2})), 0.0);
    EXPECT_NEAR(smape(rec({1, 2}, {7}, {-7})), 2.0, 1e-12);
    EXPECT_EQ(smape(rec({1, 2}, {0, 4}, {0, 4})), 0.0);
}

TEST(Metrics, MsisOracles) {
    EXPECT_NEAR(msis(rec({1, 2, 3, 4}, {12}, {5}, {0}, {10})), 90.0, 1e-10);
    EXPECT_NEAR(msis(rec({1, 2, 3, 4}, {5, 5}, {5, 5}, {3, 4}, {7, 6})), 3.0, 1e-12);
    EXPECT_EQ(msis(rec({1, 2, 3, 4}, {5}, {5}, {5}, {5})), 0.0);
    EXPECT_NEAR(msis(rec({1, 2, 3, 4}, {-1}, {5}, {0}, {10})), 10 + 40, 1e-10);
    EXPECT_EQ(code_of([] { msis(rec({1, 2, 3, 4}, {5}, {5})); }), ErrorCode::DimensionMismatch);
}

TEST(Metrics, ScaleInvarianceAndBands) {
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        EvalRecord r;
        r.period = 4;
        for (int i = 0; i < 20; ++i) r.history.push_back(10 + rng.normal());
        for (int i = 0; i < 6; ++i) {
            r.actuals.push_back(10 + rng.normal());
            r.point.push_back(10 + rng.normal());
            r.lower.push_back(r.point.back() - 1.5);
            r.upper.push_back(r.point.back() + 1.5);
        }
        auto s = r;
        const double c = rng.uniform(0.01, 100.0);
        for (auto* v : {&s.history, &s.actuals, &s.point, &s.lower, &s.upper})
            for (auto& x : *v) x *= c;
        EXPECT_NEAR(mase(s), mase(r), 1e-9 * mase(r));
        EXPECT_NEAR(msis(s), msis(r), 1e-9 * msis(r));
        EXPECT_NEAR(smape(s), smape(r), 1e-12);
        const double parts = mase(r, {1, 2}) + mase(r, {3, 4}) + mase(r, {5, 6});
        EXPECT_NEAR(parts / 3.0, mase(r), 1e-12);
    }
}

TEST(Metrics, Bands) {
    const auto b = parse_bands("1-2,3-4,5");
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[2].first, 5u);
    EXPECT_EQ(b[2].last, 5u);
    EXPECT_EQ(b[1].label(), "3-4");
    EXPECT_EQ(code_of([] { parse_bands("2-1"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_bands("a-b"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { mase(rec({1, 2, 3}, {1}, {1}), {1, 2}); }), ErrorCode::InvalidArgument);
}

TEST(Classification, AccuracyOracles) {
    EXPECT_EQ(accuracy({"A", "B"}, {"A", "B"}), 100.0);
    EXPECT_EQ(accuracy({"A", "B"}, {"B", "A"}), 0.0);
    EXPECT_EQ(accuracy({"A", "B", "A", "A"}, {"A", "B", "A", "B"}), 75.0);
}

TEST(Classification, MacroF1Oracles) {
    EXPECT_NEAR(macro_f1({"A", "B", "A"}, {"A", "B", "A"}, {"A", "B"}), 100.0, 1e-10);
    const auto f1 = f1_per_class({"A", "A", "B", "B"}, {"A", "B", "B", "B"}, {"A", "B"});
    EXPECT_NEAR(f1[0], 200.0 / 3.0, 1e-10);
    EXPECT_NEAR(f1[1], 80.0, 1e-10);
    EXPECT_NEAR(macro_f1({"A", "A", "B", "B"}, {"A", "B", "B", "B"}, {"A", "B"}), 73.33333333333333, 1e-10);
    EXPECT_NEAR(macro_f1({"A", "B", "C"}, {"A", "B", "B"}, {"A", "B", "C"}), (100.0 + 200.0 / 3.0 + 0.0) / 3.0, 1e-10);
    // balanced classes with a symmetric confusion matrix
    const std::vector<std::string> t{"A", "A", "A", "B", "B", "B"}, p{"A", "A", "B", "B", "B", "A"};
    EXPECT_NEAR(macro_f1(t, p, {"A", "B"}), accuracy(t, p), 1e-10);
    EXPECT_LE(macro_f1({"A", "B"}, {"A", "A"}, {"A", "B", "C"}), 100.0);
}

TEST(DieboldMariano, Oracles) {
    std::vector<double> a(100, 0.0), b(100);
    Rng rng(11);
    for (auto& x : a) x = 1e-3 * rng.normal();
    EXPECT_EQ(code_of([&] { dm_test(a, a, 1); }), ErrorCode::DegenerateDifferential);
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = a[i] + 10.0;
    const auto r = dm_test(a, b, 1);
    EXPECT_LT(r.p_value, 0.001);
    EXPECT_EQ(r.direction, DmDirection::FavorsA);
    const auto s = dm_test(b, a, 1);
    EXPECT_NEAR(s.statistic, -r.statistic, 1e-9 * std::abs(r.statistic));
    EXPECT_EQ(s.direction, DmDirection::FavorsB);
    EXPECT_EQ(code_of([&] { dm_test(std::vector<double>(3, 1.0), std::vector<double>(3, 2.0), 3); }),
              ErrorCode::InvalidArgument);
}

TEST(DieboldMariano, HandComputedStatistic) {
    // d = |a| - |b| = {1, -1, 2, 0}: mean 0.5, gamma0 = 1.25, DM = 0.5 / sqrt(1.25/4)
    const std::vector<double> a{2, 1, 3, 1}, b{1, 2, 1, 1};
    const auto r = dm_test(a, b, 1, Loss::Absolute);
    const double harvey = std::sqrt((4.0 + 1.0 - 2.0) / 4.0);
    EXPECT_NEAR(r.statistic, harvey * 0.5 / std::sqrt(1.25 / 4.0), 1e-12);
    EXPECT_GT(r.p_value, 0.05);
    EXPECT_EQ(r.direction, DmDirection::NoDifference);
}

TEST(DieboldMariano, SizeUnderNull) {
    Rng rng(2024);
    int reject = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<double> a(100), b(100);
        for (auto& x : a) x = rng.normal();
        for (auto& x : b) x = rng.normal();
        reject += dm_test(a, b, 1).p_value < 0.05;
    }
    EXPECT_GE(reject, 30);
    EXPECT_LE(reject, 70);
}

TEST(Miscoverage, Oracles) {
    Embedding2D ref{{{0, 0}, {1, 1}, {0.5, 0.2}}, "ref"};
    EXPECT_EQ(miscoverage(ref, ref), 0.0);
    // ref sits in the corner cell, sim covers the opposite corner only
    Embedding2D one{{{0, 0}}, "ref"}, far{{{1, 1}, {0.9, 0.95}}, "sim"};
    EXPECT_DOUBLE_EQ(miscoverage(far, one), 1.0 / 900.0);
    EXPECT_EQ(code_of([&] { miscoverage(Embedding2D{}, one); }), ErrorCode::InvalidArgument);
}

TEST(Miscoverage, BoundsAndMonotone) {
    Rng rng(8);
    Embedding2D sim, ref;
    for (int i = 0; i < 400; ++i) sim.points.push_back({rng.normal(), rng.normal()});
    for (int i = 0; i < 300; ++i) ref.points.push_back({rng.normal() + 0.5, rng.normal()});
    double prev = miscoverage(sim, ref);
    EXPECT_GE(prev, 0.0);
    EXPECT_LE(prev, 1.0);
    // shrinking sim inside the fixed union box never lowers miscoverage
    sim.points.push_back({-100, -100});
    sim.points.push_back({100, 100});
    prev = miscoverage(sim, ref, 10);
    while (sim.points.size() > 2) {
        sim.points.erase(sim.points.begin());
        const double m = miscoverage(sim, ref, 10);
        ASSERT_GE(m, prev);
        prev = m;
    }
}

TEST(Pca, ProjectsOntoDominantDirection) {
    Rng rng(3);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 200; ++i) {
        const double t = rng.normal();
        rows.push_back({t, 2 * t + 0.01 * rng.normal(), rng.normal()});
    }
    const auto pca = Pca2::fit(rows);
    const auto e = pca.project(rows, "x");
    ASSERT_EQ(e.points.size(), 200u);
    double v0 = 0, v1 = 0;
    for (const auto& p : e.points) {
        v0 += p[0] * p[0];
        v1 += p[1] * p[1];
    }
    EXPECT_NEAR(v0 / 199.0, 2.0, 0.05);
    EXPECT_NEAR(v1 / 199.0, 1.0, 0.05);
    EXPECT_EQ(code_of([&] { pca.project({{1.0, 2.0}}, "y"); }), ErrorCode::DimensionMismatch);
}

TEST(Summary, MeanMedianPermutation) {
    const auto s = summarize({3, 1, 2, 10, NAN});
    EXPECT_EQ(s.count, 4u);
    EXPECT_DOUBLE_EQ(s.mean, 4.0);
    EXPECT_DOUBLE_EQ(s.median, 2.5);
    const auto t = summarize({10, 2, 1, 3});
    EXPECT_DOUBLE_EQ(t.mean, s.mean);
    EXPECT_DOUBLE_EQ(t.median, s.median);
}
