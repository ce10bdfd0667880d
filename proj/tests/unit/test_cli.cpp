#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "etsfs/cli/benchmark.hpp"
#include "etsfs/cli/cli.hpp"
#include "etsfs/cli/config.hpp"
#include "etsfs/cli/io.hpp"
#include "etsfs/core/error.hpp"
#include "etsfs/core/rng.hpp"

using namespace etsfs;
using namespace etsfs::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run etsfs_cmd(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    static const fs::path root = [] {
        auto p = fs::temp_directory_path() / ("etsfs_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

std::string write_config(const std::string& name, const std::string& text) {
    const auto p = scratch() / name;
    write_text(p, text);
    return p.string();
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) n += !line.empty();
    return n;
}

// small corpus with holdouts and a model trained on it, shared by the tests
class Pipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        const auto cfg = write_config(
            "small.json",
            R"({"format_version":1,"simulate":{"scale":0.05,"holdout":{"yearly":6,"quarterly":8,"monthly":18}},)"
            R"("train":{"max_rounds":20,"error":{"min_data_in_leaf":10},"trend":{"min_data_in_leaf":10},"season":{"min_data_in_leaf":10}},)"
            R"("benchmark":{"paths":200},"forecast":{"paths":200}})");
        config_ = cfg;
        ASSERT_EQ(etsfs_cmd({"--config", cfg, "--seed", "5", "--out", (scratch() / "sim").string(), "simulate"}).code, 0);
        ASSERT_EQ(etsfs_cmd({"--out", (scratch() / "feat").string(), "extract", "--input",
                             (scratch() / "sim/series.jsonl").string()})
                      .code,
                  0);
        const auto r = etsfs_cmd({"--config", cfg, "--out", (scratch() / "model").string(), "train", "--features",
                                  (scratch() / "feat/features.csv").string(), "--labels",
                                  (scratch() / "sim/series.jsonl").string()});
        ASSERT_EQ(r.code, 0) << r.err;
        train_stdout_ = r.out;
    }
    static std::string config_, train_stdout_;
    static fs::path p(const std::string& rel) { return scratch() / rel; }
};
std::string Pipeline::config_, Pipeline::train_stdout_;

} // namespace

TEST(Io, SeriesRoundTrip) {
    Rng rng(1);
    std::vector<double> v(30), t(5);
    for (auto& x : v) x = rng.normal() * 1e3 + 1.0 / 3.0;
    for (auto& x : t) x = rng.normal();
    std::vector<SeriesRecord> recs{{TimeSeries("a", 4, v), ets::EtsSpec::parse("MAdM", 4), t},
                                   {TimeSeries("b", 1, {1.5, 2.5, 3.5}), std::nullopt, {}}};
    write_series(scratch() / "rt.jsonl", recs);
    const auto back = read_series(scratch() / "rt.jsonl");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].series.values(), v);
    EXPECT_EQ(back[0].test, t);
    EXPECT_EQ(back[0].spec->code(), "MAdM");
    EXPECT_EQ(back[0].series.period(), 4);
    EXPECT_FALSE(back[1].spec.has_value());
    EXPECT_THROW(parse_series_line(R"({"id":"x","period":1,"values":[1,2],"bogus":1})"), Error);
    EXPECT_THROW(parse_series_line(R"({"id":"x","period":1,"values":[1,2],"spec":"ANA"})"), Error);
    EXPECT_THROW(parse_series_line("not json"), Error);
}

TEST(Io, FeatureCsvRoundTripExact) {
    FeatureTable t;
    Rng rng(2);
    for (int i = 0; i < 3; ++i) {
        features::FeatureVector fv;
        for (auto& x : fv.values) x = rng.normal() * std::pow(10.0, rng.uniform_int(-8, 8));
        t.ids.push_back("s" + std::to_string(i));
        t.rows.push_back(fv);
    }
    write_features(scratch() / "f.csv", t);
    const auto back = read_features(scratch() / "f.csv");
    ASSERT_EQ(back.ids, t.ids);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(back.rows[i].values, t.rows[i].values);
    write_text(scratch() / "g.csv", "id,x\nA,1\n");
    try {
        read_features(scratch() / "g.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ManifestMismatch);
    }
}

TEST(Config, ParseValidateAndEcho) {
    const auto c = RunConfig::parse(R"({"format_version":1,"train":{"max_rounds":50,"trend":{"eta":0.1}}})");
    EXPECT_EQ(c.train.max_rounds, 50);
    EXPECT_EQ(c.train.trend.eta, 0.1);
    EXPECT_EQ(c.train.trend.num_leaves, gbdt::TrainConfig::trend_classifier().num_leaves);
    const auto again = RunConfig::parse(c.to_json());
    EXPECT_EQ(again.to_json(), c.to_json());
    auto code = [](const std::string& text) {
        try {
            RunConfig::parse(text);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };
    EXPECT_EQ(code("{}"), ErrorCode::Config);
    EXPECT_EQ(code(R"({"format_version":2})"), ErrorCode::Config);
    EXPECT_EQ(code(R"({"format_version":1,"train":{"rounds":5}})"), ErrorCode::Config);
    EXPECT_EQ(code(R"({"format_version":1,"simulate":{"phi":[0.5,0.9]}})"), ErrorCode::Config);
    EXPECT_EQ(code(R"({"format_version":1,"simulate":{"blocks":[{"frequency":"hourly","count":3}]}})"), ErrorCode::Config);
    EXPECT_EQ(code("{not json"), ErrorCode::Config);
    EXPECT_EQ(default_horizon(1), 6u);
    EXPECT_EQ(default_horizon(4), 8u);
    EXPECT_EQ(default_horizon(12), 18u);
}

TEST(Simulate, DeskCountsAndReproducibleFiles) {
    const auto a = etsfs_cmd({"--seed", "3", "--out", (scratch() / "deskA").string(), "simulate"});
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = etsfs_cmd({"--seed", "3", "--threads", "3", "--out", (scratch() / "deskB").string(), "simulate"});
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(count_lines(scratch() / "deskA/series.jsonl"), 2400u);
    EXPECT_EQ(read_text(scratch() / "deskA/series.jsonl"), read_text(scratch() / "deskB/series.jsonl"));
    const auto m = json::parse(read_text(scratch() / "deskA/manifest.json"));
    EXPECT_EQ(m["total"], 2400);
    EXPECT_EQ(m["seed"], 3);
    EXPECT_EQ(m["models"].size(), 15u);
    EXPECT_EQ(m["models"]["ANN"], 220);
    EXPECT_EQ(m["models"]["MAM"], 120);
}

TEST(Simulate, ExitCodes) {
    const auto bad = write_config("bad.json", R"({"format_version":1,"simulate":{"blocks":[{"frequency":"weekly","count":5}]}})");
    EXPECT_EQ(etsfs_cmd({"--config", bad, "--out", (scratch() / "x").string(), "simulate"}).code, kExitConfig);
    EXPECT_EQ(etsfs_cmd({"--config", (scratch() / "missing.json").string(), "simulate"}).code, kExitIo);
    write_text(scratch() / "plainfile", "x");
    EXPECT_EQ(etsfs_cmd({"--out", (scratch() / "plainfile/sub").string(), "simulate"}).code, kExitIo);
    EXPECT_EQ(etsfs_cmd({"frobnicate"}).code, kExitConfig);
    EXPECT_EQ(etsfs_cmd({}).code, kExitConfig);
    EXPECT_EQ(etsfs_cmd({"--threads", "0", "simulate"}).code, kExitConfig);
    EXPECT_EQ(etsfs_cmd({"--help"}).code, kExitOk);
    write_text(scratch() / "broken.jsonl", "{\"id\":\"a\"}\n");
    EXPECT_EQ(etsfs_cmd({"--out", (scratch() / "x").string(), "extract", "--input", (scratch() / "broken.jsonl").string()}).code,
              kExitData);
}

TEST(Extract, RowsHeaderAndSkips) {
    std::vector<SeriesRecord> recs;
    Rng rng(4);
    for (int i = 0; i < 5; ++i) {
        std::vector<double> v(40);
        for (auto& x : v) x = 10 + rng.normal();
        recs.push_back({TimeSeries("ok" + std::to_string(i), 1, v), std::nullopt, {}});
    }
    recs.push_back({TimeSeries("tiny", 12, {1, 2, 3}), std::nullopt, {}});
    write_series(scratch() / "ex.jsonl", recs);
    const auto r = etsfs_cmd({"--out", (scratch() / "ex").string(), "extract", "--input", (scratch() / "ex.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("skipped tiny"), std::string::npos);
    const auto t = read_features(scratch() / "ex/features.csv");
    EXPECT_EQ(t.ids.size(), 5u);
    std::ifstream in(scratch() / "ex/features.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), 59);
}

TEST_F(Pipeline, TrainReportAndDeterminism) {
    EXPECT_NE(train_stdout_.find("error"), std::string::npos);
    EXPECT_NE(train_stdout_.find("trend"), std::string::npos);
    EXPECT_NE(train_stdout_.find("seasonality"), std::string::npos);
    EXPECT_NE(train_stdout_.find("whole-model"), std::string::npos);
    const auto rep = json::parse(read_text(p("model/train_report.json")));
    EXPECT_EQ(rep["tasks"].size(), 4u);
    EXPECT_EQ(rep["test_size"], 24);
    const auto r = etsfs_cmd({"--config", config_, "--out", p("model2").string(), "train", "--features",
                              p("feat/features.csv").string(), "--labels", p("sim/series.jsonl").string()});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(read_text(p("model/selector.fsel")), read_text(p("model2/selector.fsel")));
}

TEST_F(Pipeline, SingleClassLabelsNameTheTask) {
    auto recs = read_series(p("sim/series.jsonl"));
    std::erase_if(recs, [](const SeriesRecord& r) { return r.spec->code() != "ANN" && r.spec->code() != "MNN"; });
    write_series(p("nn.jsonl"), recs);
    ASSERT_EQ(etsfs_cmd({"--out", p("nnfeat").string(), "extract", "--input", p("nn.jsonl").string()}).code, 0);
    const auto r = etsfs_cmd({"--config", config_, "--out", p("nnmodel").string(), "train", "--features", p("nnfeat/features.csv").string(),
                              "--labels", p("nn.jsonl").string()});
    EXPECT_EQ(r.code, kExitData);
    EXPECT_NE(r.err.find("trend classifier"), std::string::npos) << r.err;
}

TEST_F(Pipeline, ForecastBatchTimingAndReproducibility) {
    auto recs = read_series(p("sim/series.jsonl"));
    recs.erase(recs.begin() + 100, recs.end());
    write_series(p("batch.jsonl"), recs);
    const auto a = etsfs_cmd({"--config", config_, "--out", p("fcA").string(), "forecast", "--model",
                              p("model/selector.fsel").string(), "--input", p("batch.jsonl").string()});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(count_lines(p("fcA/forecasts.jsonl")), 100u);
    EXPECT_NE(a.out.find("Feature extraction"), std::string::npos);
    EXPECT_NE(a.out.find("Model selection and forecasting"), std::string::npos);
    const auto timing = json::parse(read_text(p("fcA/timing.json")));
    EXPECT_TRUE(timing.contains("Feature extraction"));
    EXPECT_TRUE(timing.contains("Model selection and forecasting"));
    const auto b = etsfs_cmd({"--config", config_, "--threads", "2", "--out", p("fcB").string(), "forecast", "--model",
                              p("model/selector.fsel").string(), "--input", p("batch.jsonl").string()});
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(read_text(p("fcA/forecasts.jsonl")), read_text(p("fcB/forecasts.jsonl")));
    std::istringstream lines(read_text(p("fcA/forecasts.jsonl")));
    std::string line;
    while (std::getline(lines, line)) {
        const auto j = json::parse(line);
        EXPECT_EQ(j["log"]["final"], j["spec"]);
        EXPECT_EQ(j["point"].size(), j["lower"].size());
    }
    EXPECT_EQ(etsfs_cmd({"--out", p("fcC").string(), "forecast", "--model", p("nothing.fsel").string(), "--input",
                         p("batch.jsonl").string()})
                  .code,
              kExitIo);
    write_text(p("junk.fsel"), "FSELjunk");
    EXPECT_EQ(etsfs_cmd({"--out", p("fcC").string(), "forecast", "--model", p("junk.fsel").string(), "--input",
                         p("batch.jsonl").string()})
                  .code,
              kExitData);
}

TEST_F(Pipeline, BenchmarkReportsBothMethods) {
    auto recs = read_series(p("sim/series.jsonl"));
    recs.erase(recs.begin() + 40, recs.end());
    write_series(p("bm.jsonl"), recs);
    const auto r = etsfs_cmd({"--config", config_, "--out", p("bm").string(), "benchmark", "--model",
                              p("model/selector.fsel").string(), "--input", p("bm.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("feature-based"), std::string::npos);
    EXPECT_NE(r.out.find("information-criteria"), std::string::npos);
    const auto rep = json::parse(read_text(p("bm/benchmark.json")));
    for (const char* metric : {"MASE", "sMAPE", "MSIS"}) {
        int methods = 0;
        for (const auto& m : rep["metrics"])
            if (m["metric"] == metric && m["band"] == "all") ++methods;
        EXPECT_EQ(methods, 2) << metric;
    }
    EXPECT_TRUE(rep.contains("model_recovery_pct"));
    const auto t = json::parse(read_text(p("bm/timing.json")));
    EXPECT_TRUE(t["feature-based"].contains("Feature extraction"));

    // same selected spec means identical fits and seeds, so the per-series
    // DM test must land in the degenerate bucket rather than fail
    std::size_t same = 0;
    for (const auto& s : rep["series"]) same += s["feature-based"] == s["information-criteria"];
    ASSERT_GT(same, 0u);
    const double pct = rep["dm_per_series_pct"]["degenerate"].get<double>();
    EXPECT_GE(pct + 1e-9, 100.0 * static_cast<double>(same) / rep["compared"].get<double>());

    const auto again = etsfs_cmd({"--config", config_, "--out", p("bm2").string(), "benchmark", "--model",
                                  p("model/selector.fsel").string(), "--input", p("bm.jsonl").string()});
    ASSERT_EQ(again.code, 0);
    EXPECT_EQ(read_text(p("bm/benchmark.json")), read_text(p("bm2/benchmark.json")));
    EXPECT_EQ(read_text(p("bm/metrics.csv")), read_text(p("bm2/metrics.csv")));
}

TEST_F(Pipeline, EvaluateForecastsAndCoverage) {
    auto recs = read_series(p("sim/series.jsonl"));
    recs.erase(recs.begin() + 30, recs.end());
    write_series(p("ev.jsonl"), recs);
    ASSERT_EQ(etsfs_cmd({"--config", config_, "--out", p("evfc").string(), "forecast", "--model",
                         p("model/selector.fsel").string(), "--input", p("ev.jsonl").string()})
                  .code,
              0);
    const auto r = etsfs_cmd({"--out", p("ev").string(), "evaluate", "--forecasts", p("evfc/forecasts.jsonl").string(),
                              "--actuals", p("ev.jsonl").string(), "--bands", "1-2,3-4"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto summary = json::parse(read_text(p("ev/summary.json")));
    EXPECT_EQ(summary["series"], 30);
    EXPECT_EQ(summary["summary"].size(), 9u);

    const auto c = etsfs_cmd({"--out", p("cov").string(), "evaluate", "--sim-features", p("feat/features.csv").string(),
                              "--ref-features", p("feat/features.csv").string()});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_EQ(json::parse(read_text(p("cov/coverage.json")))["miscoverage"], 0.0);
    EXPECT_EQ(etsfs_cmd({"--out", p("cov").string(), "evaluate"}).code, kExitConfig);
}
