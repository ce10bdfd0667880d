#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "etsfs/core/error.hpp"
#include "etsfs/core/rng.hpp"
#include "etsfs/selector/selector.hpp"

using namespace etsfs;
using namespace etsfs::selector;
using ets::ErrorForm;
using ets::EtsSpec;
using ets::SeasonForm;
using ets::TrendForm;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io;
}

ComponentPrediction pred(std::array<double, 2> e, std::array<double, 3> t, std::array<double, 3> s) {
    return {e, t, s};
}

const Corpus& small_corpus() {
    static const Corpus c = build_corpus(SimulationPlan::scaled(0.1), 7);
    return c;
}

const TrainingSet& small_set() {
    static const TrainingSet d = featurize(small_corpus());
    return d;
}

SelectorTrainConfig quick_config(int rounds) {
    SelectorTrainConfig cfg;
    for (auto* c : {&cfg.error, &cfg.trend, &cfg.season}) {
        c->num_boost_round = rounds;
        c->min_data_in_leaf = 10;
        c->num_leaves = 15;
    }
    return cfg;
}

const SelectorModel& small_model() {
    static const SelectorModel m = train_selector(small_set(), quick_config(40)).first;
    return m;
}

} // namespace

TEST(Corpus, DeskPlanCounts) {
    const auto plan = SimulationPlan::desk();
    std::map<std::string, std::size_t> per_model;
    for (const auto& b : plan.blocks) {
        const auto specs = ets::applicable_specs(b.period);
        const auto counts = model_counts(b.count, specs.size());
        EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), b.count);
        for (std::size_t i = 0; i < specs.size(); ++i) per_model[specs[i].code()] += counts[i];
    }
    EXPECT_EQ(per_model.size(), 15u);
    for (const auto& [code, n] : per_model) {
        if (code.back() == 'N')
            EXPECT_EQ(n, 220u) << code;
        else
            EXPECT_EQ(n, 120u) << code;
    }
    EXPECT_EQ(model_counts(17, 6), (std::vector<std::size_t>{3, 3, 3, 3, 3, 2}));
}

TEST(Corpus, SamplersRespectRanges) {
    const auto plan = SimulationPlan::desk();
    Rng rng(3);
    for (const auto& spec : ets::applicable_specs(12)) {
        for (int i = 0; i < 200; ++i) {
            double sd = 0;
            const auto p = sample_params(spec, plan, rng, &sd);
            EXPECT_NO_THROW(p.validate(spec));
            EXPECT_GE(p.alpha, 0.05);
            EXPECT_LE(p.alpha, 0.95);
            if (p.phi) {
                EXPECT_GE(*p.phi, 0.80);
                EXPECT_LE(*p.phi, 0.98);
            }
            EXPECT_GE(p.level0, 50.0);
            EXPECT_LE(p.level0, 5000.0);
            if (spec.error() == ErrorForm::Multiplicative) {
                EXPECT_GE(sd, 0.01);
                EXPECT_LE(sd, 0.05);
            } else {
                EXPECT_GE(sd, 0.01 * p.level0);
                EXPECT_LE(sd, 0.10 * p.level0);
            }
        }
    }
}

TEST(Corpus, LabelsLengthsAndDeterminism) {
    const auto& c = small_corpus();
    EXPECT_EQ(c.items.size(), 240u);
    for (const auto& it : c.items) {
        const int m = it.series.period();
        EXPECT_EQ(it.spec.period(), m);
        if (m == 1) {
            EXPECT_EQ(it.spec.season(), SeasonForm::None);
            EXPECT_GE(it.series.size(), 19u);
            EXPECT_LE(it.series.size(), 100u);
        } else if (m == 4) {
            EXPECT_GE(it.series.size(), 24u);
            EXPECT_LE(it.series.size(), 300u);
        } else {
            EXPECT_EQ(m, 12);
            EXPECT_GE(it.series.size(), 60u);
            EXPECT_LE(it.series.size(), 600u);
        }
        if (it.spec.needs_positive_data()) {
            EXPECT_FALSE(it.series.has_nonpositive()) << it.series.id();
        }
    }
    EXPECT_EQ(build_corpus(SimulationPlan::scaled(0.1), 7).digest, c.digest);
    EXPECT_NE(build_corpus(SimulationPlan::scaled(0.1), 8).digest, c.digest);
    EXPECT_EQ(build_corpus(SimulationPlan::scaled(0.1), 7, 3).digest, c.digest);
}

TEST(Corpus, InvalidPlan) {
    auto plan = SimulationPlan::desk();
    plan.phi_hi = 0.99;
    EXPECT_EQ(code_of([&] { build_corpus(plan, 1); }), ErrorCode::Config);
    plan = SimulationPlan::desk();
    plan.blocks[2].min_length = 20;
    EXPECT_EQ(code_of([&] { build_corpus(plan, 1); }), ErrorCode::Config);
}

TEST(CheckAndAdjust, Check1YearlySeasonality) {
    const auto [spec, log] = check_and_adjust(pred({0.7, 0.3}, {0.2, 0.2, 0.6}, {0.1, 0.8, 0.1}), 1, false, 50);
    EXPECT_EQ(spec.code(), "ANN");
    ASSERT_FALSE(log.steps.empty());
    EXPECT_EQ(log.steps[0].check, 1);
    EXPECT_EQ(log.initial, "ANM");
}

TEST(CheckAndAdjust, Check2ProductMaximum) {
    const auto [spec, log] = check_and_adjust(pred({0.6, 0.4}, {0.1, 0.1, 0.8}, {0.1, 0.7, 0.2}), 12, false, 100);
    EXPECT_EQ(log.initial, "ANM");
    EXPECT_EQ(spec.code(), "MNM");
    ASSERT_EQ(log.steps.size(), 1u);
    EXPECT_EQ(log.steps[0].check, 2);
    EXPECT_EQ(log.steps[0].after, "MNM");
}

TEST(CheckAndAdjust, Check3NonPositive) {
    // argmax MNM on data with a zero: error becomes A, ANM is not applicable
    auto [spec, log] = check_and_adjust(pred({0.3, 0.7}, {0.1, 0.1, 0.8}, {0.25, 0.6, 0.15}), 12, true, 100);
    EXPECT_EQ(spec.code(), "ANA");
    EXPECT_EQ(log.steps.back().check, 3);
    std::tie(spec, log) = check_and_adjust(pred({0.3, 0.7}, {0.1, 0.1, 0.8}, {0.1, 0.6, 0.3}), 12, true, 100);
    EXPECT_EQ(spec.code(), "ANN");
}

TEST(CheckAndAdjust, Check4ShortDamped) {
    // AAdA at period 4 has 10 parameters: length 8 <= 14
    const auto [spec, log] = check_and_adjust(pred({0.8, 0.2}, {0.3, 0.5, 0.2}, {0.7, 0.1, 0.2}), 4, false, 8);
    EXPECT_EQ(spec.code(), "AAA");
    EXPECT_EQ(log.steps.back().check, 4);
    // tie between A and N: N ranks first
    const auto [tied, _] = check_and_adjust(pred({0.8, 0.2}, {0.25, 0.5, 0.25}, {0.7, 0.1, 0.2}), 4, false, 8);
    EXPECT_EQ(tied.code(), "ANA");
    // long enough: untouched
    const auto [kept, klog] = check_and_adjust(pred({0.8, 0.2}, {0.3, 0.5, 0.2}, {0.7, 0.1, 0.2}), 4, false, 15);
    EXPECT_EQ(kept.code(), "AAdA");
    EXPECT_TRUE(klog.steps.empty());
}

TEST(CheckAndAdjust, PropertyTotalityIdempotenceInvariance) {
    Rng rng(77);
    auto draw = [&](auto& arr) {
        double s = 0;
        for (auto& v : arr) s += v = rng.uniform() + (rng.uniform() < 0.1 ? 0.0 : 1e-3);
        for (auto& v : arr) v /= s;
    };
    const int periods[] = {1, 4, 12};
    for (int i = 0; i < 20000; ++i) {
        ComponentPrediction p;
        draw(p.p_error);
        draw(p.p_trend);
        draw(p.p_season);
        if (i % 7 == 0) p.p_trend = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        const int m = periods[rng.uniform_int(0, 2)];
        const bool nonpos = rng.uniform() < 0.3;
        const auto len = static_cast<std::size_t>(rng.uniform_int(8, 40));
        const auto [spec, log] = check_and_adjust(p, m, nonpos, len);

        const auto specs = ets::applicable_specs(m);
        ASSERT_NE(std::find(specs.begin(), specs.end(), spec), specs.end());
        if (nonpos) {
            ASSERT_FALSE(spec.needs_positive_data());
        }
        if (spec.damped()) {
            ASSERT_GT(len, static_cast<std::size_t>(spec.n_params() + 4));
        }
        ASSERT_EQ(log.final_spec, spec.code());

        // argmax invariance under positive rescaling
        ComponentPrediction q = p;
        for (auto& v : q.p_error) v *= 3.0;
        for (auto& v : q.p_trend) v *= 0.5;
        for (auto& v : q.p_season) v *= 7.0;
        for (auto* arr : {&q.p_trend, &q.p_season}) {
            const double s = (*arr)[0] + (*arr)[1] + (*arr)[2];
            for (auto& v : *arr) v /= s;
        }
        const double se = q.p_error[0] + q.p_error[1];
        for (auto& v : q.p_error) v /= se;
        ASSERT_EQ(check_and_adjust(q, m, nonpos, len).first, spec);

        // idempotence: already-feasible argmax triples pass untouched
        const auto e = std::max_element(p.p_error.begin(), p.p_error.end()) - p.p_error.begin();
        const auto t = std::max_element(p.p_trend.begin(), p.p_trend.end()) - p.p_trend.begin();
        const auto s = std::max_element(p.p_season.begin(), p.p_season.end()) - p.p_season.begin();
        const auto ef = error_form(static_cast<int>(e));
        const auto tf = trend_form(static_cast<int>(t));
        const auto sf = season_form(static_cast<int>(s));
        const bool feasible = EtsSpec::applicable(ef, sf) && !(m == 1 && sf != SeasonForm::None) &&
                              !(nonpos && (ef == ErrorForm::Multiplicative || sf == SeasonForm::Multiplicative)) &&
                              !(tf == TrendForm::Damped && len <= static_cast<std::size_t>(EtsSpec(ef, tf, sf, m).n_params() + 4));
        if (feasible) {
            ASSERT_TRUE(log.steps.empty());
            ASSERT_EQ(spec, EtsSpec(ef, tf, sf, m));
        }
    }
}

TEST(Selector, SingleClassComponentsRefuse) {
    const auto& c = small_corpus();
    TrainingSet only;
    for (std::size_t i = 0; i < c.items.size(); ++i) {
        const auto code = c.items[i].spec.code();
        if (code == "ANN" || code == "MNN") {
            only.ids.push_back(c.items[i].series.id());
            only.features.push_back(small_set().features[i]);
            only.specs.push_back(c.items[i].spec);
        }
    }
    ASSERT_GE(only.specs.size(), 20u);
    std::vector<std::size_t> rows(only.specs.size());
    std::iota(rows.begin(), rows.end(), 0);
    gbdt::TrainConfig cfg;
    cfg.num_boost_round = 5;
    cfg.min_data_in_leaf = 5;
    EXPECT_NO_THROW(train_component(Component::Error, only, rows, cfg));
    EXPECT_EQ(code_of([&] { train_component(Component::Trend, only, rows, cfg); }), ErrorCode::SingleClass);
    EXPECT_EQ(code_of([&] { train_component(Component::Season, only, rows, cfg); }), ErrorCode::SingleClass);
    EXPECT_EQ(code_of([&] { train_selector(only, quick_config(5)); }), ErrorCode::SingleClass);
}

TEST(Selector, StubModelIsUniform) {
    const auto [m, diag] = train_selector(small_set(), quick_config(0));
    const auto p = predict_components(m, small_set().features[0]);
    EXPECT_DOUBLE_EQ(p.p_error[0], 0.5);
    for (double v : p.p_trend) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
    for (double v : p.p_season) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
    EXPECT_EQ(diag.train_size + diag.test_size, small_set().features.size());
    EXPECT_EQ(diag.test_size, 48u);
}

TEST(Selector, PredictionsNormalizedAndManifestChecked) {
    const auto& m = small_model();
    for (std::size_t i = 0; i < small_set().features.size(); i += 7) {
        const auto p = predict_components(m, small_set().features[i]);
        EXPECT_NEAR(p.p_error[0] + p.p_error[1], 1.0, 1e-9);
        EXPECT_NEAR(p.p_trend[0] + p.p_trend[1] + p.p_trend[2], 1.0, 1e-9);
        EXPECT_NEAR(p.p_season[0] + p.p_season[1] + p.p_season[2], 1.0, 1e-9);
    }
    auto fv = small_set().features[0];
    fv.manifest_version = features::kManifestVersion + 1;
    EXPECT_EQ(code_of([&] { predict_components(m, fv); }), ErrorCode::ManifestMismatch);
}

TEST(Selector, ArtifactRoundTripAndDeterminism) {
    const auto& m = small_model();
    const auto bytes = m.save();
    const auto back = SelectorModel::load(bytes);
    EXPECT_EQ(back.save(), bytes);
    EXPECT_EQ(back.corpus_digest, small_corpus().digest);
    EXPECT_EQ(train_selector(small_set(), quick_config(40)).first.save(), bytes);
    auto bad = bytes;
    bad[bad.size() / 2] ^= std::byte{0x10};
    EXPECT_EQ(code_of([&] { SelectorModel::load(bad); }), ErrorCode::CorruptArtifact);
    auto newer = bytes;
    newer[4] = std::byte{2};
    EXPECT_EQ(code_of([&] { SelectorModel::load(newer); }), ErrorCode::VersionMismatch);
}

TEST(Pipeline, ConstantSeriesForecastsConstant) {
    const TimeSeries s("const", 12, std::vector<double>(48, 42.0));
    const auto sel = select_and_forecast(small_model(), s, 12);
    ASSERT_EQ(sel.forecast.horizon(), 12u);
    for (double v : sel.forecast.point) EXPECT_NEAR(v, 42.0, 1e-6);
    EXPECT_EQ(sel.log.id, "const");
}

TEST(Pipeline, BatchTotalityAndDeterminism) {
    const auto plan = [] {
        SimulationPlan p = SimulationPlan::desk();
        p.blocks = {{12, 100, 60, 120}};
        return p;
    }();
    const auto batch = build_corpus(plan, 99);
    int n = 0;
    for (const auto& it : batch.items) {
        const auto sel = select_and_forecast(small_model(), it.series, 18, 0.95, 5);
        const auto specs = ets::applicable_specs(12);
        ASSERT_NE(std::find(specs.begin(), specs.end(), sel.spec), specs.end());
        ASSERT_EQ(sel.forecast.horizon(), 18u);
        for (std::size_t i = 0; i < 18; ++i) {
            ASSERT_TRUE(std::isfinite(sel.forecast.point[i]));
            ASSERT_LE(sel.forecast.lower[i], sel.forecast.upper[i]);
        }
        if (n < 5) {
            const auto again = select_and_forecast(small_model(), it.series, 18, 0.95, 5);
            EXPECT_EQ(again.spec, sel.spec);
            EXPECT_EQ(again.forecast.point, sel.forecast.point);
            EXPECT_EQ(again.forecast.upper, sel.forecast.upper);
        }
        ++n;
    }
    EXPECT_EQ(n, 100);
}

TEST(Pipeline, ShortSeriesUsesSimplerSpecOrRejects) {
    Rng rng(1);
    std::vector<double> v(12);
    for (auto& x : v) x = 10 + rng.normal();
    const auto sel = select_and_forecast(small_model(), TimeSeries("q", 4, v), 4);
    EXPECT_GE(v.size(), static_cast<std::size_t>(sel.spec.n_params() + 4));
    EXPECT_EQ(sel.log.final_spec, sel.spec.code());
    EXPECT_EQ(code_of([&] { select_and_forecast(small_model(), TimeSeries("q", 4, std::vector<double>(11, 1.0)), 4); }),
              ErrorCode::SeriesTooShort);
}

TEST(Pipeline, AdjustmentLogJson) {
    const auto [spec, log] = check_and_adjust(pred({0.6, 0.4}, {0.1, 0.1, 0.8}, {0.1, 0.7, 0.2}), 12, false, 100);
    const auto j = log.to_json();
    EXPECT_NE(j.find("\"final\":\"MNM\""), std::string::npos);
    EXPECT_NE(j.find("\"check\":2"), std::string::npos);
}
