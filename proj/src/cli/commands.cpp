#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "etsfs/cli/benchmark.hpp"
#include "etsfs/cli/cli.hpp"
#include "etsfs/cli/config.hpp"
#include "etsfs/cli/io.hpp"
#include "etsfs/core/digest.hpp"
#include "etsfs/core/parallel.hpp"
#include "etsfs/eval/eval.hpp"

namespace etsfs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::Config: return kExitConfig;
    case ErrorCode::Io: return kExitIo;
    default: return kExitData;
    }
}

namespace {

struct Globals {
    std::uint64_t seed = 1;
    unsigned threads = default_threads();
    std::string config;
    std::string out = ".";
    RunConfig cfg;
};

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path out_path(const Globals& g, const std::string& name) { return fs::path(g.out) / name; }

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---- simulate ---------------------------------------------------------------

void cmd_simulate(const Globals& g, std::optional<double> scale, std::ostream& out) {
    auto plan = g.cfg.simulate.plan;
    if (scale) {
        if (!(*scale > 0.0)) throw Error(ErrorCode::Config, "--scale must be positive");
        for (auto& b : plan.blocks) b.count = static_cast<std::size_t>(std::llround(static_cast<double>(b.count) * *scale));
    }
    const auto& holdout = g.cfg.simulate.holdout;
    auto gen = plan;
    for (auto& b : gen.blocks) {
        const auto it = holdout.find(b.period);
        if (it != holdout.end()) {
            b.min_length += static_cast<int>(it->second);
            b.max_length += static_cast<int>(it->second);
        }
    }
    const auto corpus = selector::build_corpus(gen, g.seed, g.threads);

    std::vector<SeriesRecord> records;
    std::map<std::string, std::size_t> per_model;
    for (const auto& item : corpus.items) {
        const auto& v = item.series.values();
        const auto it = holdout.find(item.series.period());
        const std::size_t h = it == holdout.end() ? 0 : it->second;
        std::vector<double> train(v.begin(), v.end() - static_cast<std::ptrdiff_t>(h));
        std::vector<double> test(v.end() - static_cast<std::ptrdiff_t>(h), v.end());
        records.push_back({TimeSeries(item.series.id(), item.series.period(), std::move(train)), item.spec, std::move(test)});
        ++per_model[item.spec.code()];
    }
    write_series(out_path(g, "series.jsonl"), records);

    json blocks = json::array();
    for (const auto& b : plan.blocks)
        blocks.push_back({{"period", b.period}, {"count", b.count}, {"min_length", b.min_length}, {"max_length", b.max_length}});
    json hold = json::object();
    for (const auto& [p, h] : holdout) hold[std::to_string(p)] = h;
    Digest file_digest;
    file_digest.update(read_text(out_path(g, "series.jsonl")));
    const json manifest = {{"format_version", kConfigVersion},
                           {"seed", g.seed},
                           {"total", records.size()},
                           {"corpus_digest", hex64(corpus.digest)},
                           {"series_file_digest", file_digest.hex()},
                           {"resampled_draws", corpus.resampled},
                           {"blocks", blocks},
                           {"models", per_model},
                           {"holdout", hold}};
    write_text(out_path(g, "manifest.json"), manifest.dump(2) + "\n");
    out << "simulated " << records.size() << " series into " << out_path(g, "series.jsonl").string() << "\n";
}

// ---- extract ----------------------------------------------------------------

void cmd_extract(const Globals& g, const std::string& input, std::ostream& out, std::ostream& err) {
    const auto records = read_series(input);
    const std::size_t n = records.size();
    std::vector<std::optional<features::FeatureVector>> slots(n);
    std::vector<std::string> skip(n);
    parallel_for(n, g.threads, [&](std::size_t i) {
        try {
            slots[i] = features::extract(records[i].series);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SeriesTooShort) throw Error(e.code(), records[i].series.id() + ": " + e.what());
            skip[i] = e.what();
        }
    });
    FeatureTable table;
    std::map<std::string, std::size_t> sanitized;
    std::size_t sanitized_series = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!slots[i]) {
            err << "skipped " << records[i].series.id() << ": " << skip[i] << "\n";
            continue;
        }
        if (!slots[i]->sanitized.empty()) ++sanitized_series;
        for (auto k : slots[i]->sanitized) ++sanitized[std::string(features::manifest()[k])];
        table.ids.push_back(records[i].series.id());
        table.rows.push_back(std::move(*slots[i]));
    }
    write_features(out_path(g, "features.csv"), table);
    err << "extracted " << table.rows.size() << " of " << n << " series; " << sanitized_series
        << " series had non-finite features replaced by 0\n";
    for (const auto& [name, count] : sanitized) err << "  sanitized " << name << ": " << count << "\n";
    out << "wrote " << out_path(g, "features.csv").string() << "\n";
}

// ---- train ------------------------------------------------------------------

selector::TrainingSet join_labels(const FeatureTable& table, const std::vector<SeriesRecord>& labels) {
    std::map<std::string, const SeriesRecord*> by_id;
    for (const auto& r : labels) by_id[r.series.id()] = &r;
    selector::TrainingSet data;
    Digest d;
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        const auto it = by_id.find(table.ids[i]);
        if (it == by_id.end() || !it->second->spec)
            throw Error(ErrorCode::InvalidArgument, "no spec label for series '" + table.ids[i] + "'");
        data.ids.push_back(table.ids[i]);
        data.features.push_back(table.rows[i]);
        data.specs.push_back(*it->second->spec);
        d.update(table.ids[i]);
        d.update(it->second->spec->code());
        for (double v : table.rows[i].values) d.update(v);
    }
    data.digest = d.value();
    return data;
}

void cmd_train(const Globals& g, const std::string& features_path, const std::string& labels_path,
               std::optional<int> max_rounds, std::ostream& out) {
    const auto data = join_labels(read_features(features_path), read_series(labels_path));
    auto cfg = g.cfg.train;
    cfg.threads = g.threads;
    if (max_rounds) cfg.max_rounds = *max_rounds;
    const auto [model, diag] = selector::train_selector(data, cfg);
    write_bytes(out_path(g, "selector.fsel"), model.save());

    std::vector<std::string> te, pe, tt, pt, ts, ps, tw, pw;
    auto argmax = [](const auto& a) { return static_cast<int>(std::max_element(a.begin(), a.end()) - a.begin()); };
    for (auto r : diag.test_index) {
        const auto p = selector::predict_components(model, data.features[r]);
        const auto& s = data.specs[r];
        te.push_back(selector::kErrorClasses[selector::error_label(s.error())]);
        tt.push_back(selector::kTrendClasses[selector::trend_label(s.trend())]);
        ts.push_back(selector::kSeasonClasses[selector::season_label(s.season())]);
        pe.push_back(selector::kErrorClasses[argmax(p.p_error)]);
        pt.push_back(selector::kTrendClasses[argmax(p.p_trend)]);
        ps.push_back(selector::kSeasonClasses[argmax(p.p_season)]);
        tw.push_back(te.back() + tt.back() + ts.back());
        pw.push_back(pe.back() + pt.back() + ps.back());
    }
    std::vector<std::string> whole_classes = tw;
    std::sort(whole_classes.begin(), whole_classes.end());
    whole_classes.erase(std::unique(whole_classes.begin(), whole_classes.end()), whole_classes.end());

    json tasks = json::array();
    std::ostringstream table;
    table << "task          accuracy  macro_f1\n";
    auto row = [&](const char* task, const auto& truth, const auto& pred, const std::vector<std::string>& classes) {
        const double acc = truth.empty() ? std::nan("") : eval::accuracy(truth, pred);
        const double f1 = truth.empty() ? std::nan("") : eval::macro_f1(truth, pred, classes);
        tasks.push_back({{"task", task}, {"accuracy", num(acc)}, {"macro_f1", num(f1)}});
        char line[96];
        std::snprintf(line, sizeof line, "%-12s %9.2f %9.2f\n", task, acc, f1);
        table << line;
    };
    row("error", te, pe, selector::kErrorClasses);
    row("trend", tt, pt, selector::kTrendClasses);
    row("seasonality", ts, ps, selector::kSeasonClasses);
    row("whole-model", tw, pw, whole_classes);

    json importance;
    for (auto [name, ens] : {std::pair{"error", &model.f_e}, std::pair{"trend", &model.f_t}, std::pair{"season", &model.f_s}}) {
        json top = json::array();
        const auto gains = ens->feature_gain();
        for (std::size_t k = 0; k < std::min<std::size_t>(10, gains.size()); ++k)
            top.push_back({{"feature", gains[k].first}, {"gain", gains[k].second}});
        importance[name] = top;
    }
    const json report = {{"train_size", diag.train_size},
                         {"test_size", diag.test_size},
                         {"tasks", tasks},
                         {"top10_gain", importance},
                         {"config", json::parse(g.cfg.to_json())["train"]}};
    write_text(out_path(g, "train_report.json"), report.dump(2) + "\n");
    out << "held-out evaluation (" << diag.test_size << " series)\n" << table.str();
    out << "wrote " << out_path(g, "selector.fsel").string() << "\n";
}

// ---- forecast ---------------------------------------------------------------

selector::SelectorModel load_model(const std::string& path) {
    return selector::SelectorModel::load(read_bytes(path));
}

void cmd_forecast(const Globals& g, const std::string& model_path, const std::string& input,
                  std::optional<std::size_t> horizon, std::optional<double> confidence, std::ostream& out,
                  std::ostream& err) {
    const auto model = load_model(model_path);
    const auto records = read_series(input);
    const double conf = confidence.value_or(g.cfg.forecast.confidence);
    if (!(conf > 0.0 && conf < 1.0)) throw Error(ErrorCode::Config, "confidence must lie in (0, 1)");
    const std::size_t n = records.size();
    std::vector<std::optional<selector::Selection>> sel(n);
    std::vector<std::string> failure(n);
    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(n, g.threads, [&](std::size_t i) {
        const auto& s = records[i].series;
        const std::size_t h = horizon.value_or(g.cfg.forecast.horizon ? g.cfg.forecast.horizon : default_horizon(s.period()));
        try {
            sel[i] = selector::select_and_forecast(model, s, h, conf, series_seed(g.seed, s.id()), g.cfg.forecast.paths);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SeriesTooShort && e.code() != ErrorCode::NoFeasibleModel) throw;
            failure[i] = e.what();
        }
    });
    const double wall = since(t0);

    std::string lines;
    double extract = 0.0, select = 0.0;
    std::size_t done = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!sel[i]) {
            err << "skipped " << records[i].series.id() << ": " << failure[i] << "\n";
            continue;
        }
        const auto& s = *sel[i];
        extract += s.extract_seconds;
        select += s.select_seconds;
        ++done;
        const json j = {{"id", records[i].series.id()},
                        {"spec", s.spec.code()},
                        {"confidence", conf},
                        {"point", s.forecast.point},
                        {"lower", s.forecast.lower},
                        {"upper", s.forecast.upper},
                        {"log", json::parse(s.log.to_json())}};
        lines += j.dump() + "\n";
    }
    write_text(out_path(g, "forecasts.jsonl"), lines);
    const json timing = {{"Feature extraction", extract},
                         {"Model selection and forecasting", select},
                         {"wall", wall},
                         {"series", done},
                         {"threads", g.threads}};
    write_text(out_path(g, "timing.json"), timing.dump(2) + "\n");
    char line[256];
    out << "phase                              seconds\n";
    std::snprintf(line, sizeof line, "%-32s %10.3f\n%-32s %10.3f\n%-32s %10.3f\n", "Feature extraction", extract,
                  "Model selection and forecasting", select, "wall", wall);
    out << line << "forecast " << done << " of " << n << " series\n";
}

// ---- benchmark --------------------------------------------------------------

void cmd_benchmark(const Globals& g, const std::string& model_path, const std::string& input,
                   std::optional<double> confidence, std::optional<std::string> bands, std::ostream& out) {
    const auto model = load_model(model_path);
    const auto records = read_series(input);
    auto settings = g.cfg.benchmark;
    if (confidence) settings.confidence = *confidence;
    if (bands) settings.bands = *bands;
    if (!(settings.confidence > 0.0 && settings.confidence < 1.0))
        throw Error(ErrorCode::Config, "confidence must lie in (0, 1)");
    eval::parse_bands(settings.bands);
    const auto rep = run_benchmark(model, records, settings, 1.0 - settings.confidence, g.seed, g.threads);
    write_text(out_path(g, "benchmark.json"), rep.to_json() + "\n");
    write_text(out_path(g, "metrics.csv"), rep.metrics_csv());
    write_text(out_path(g, "timing.json"), rep.timing_json() + "\n");
    out << rep.table();
}

// ---- evaluate ---------------------------------------------------------------

struct ForecastRow {
    std::vector<double> point, lower, upper;
};

std::map<std::string, ForecastRow> read_forecasts(const std::string& path) {
    std::istringstream in(read_text(path));
    std::map<std::string, ForecastRow> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            out[j.at("id").get<std::string>()] = {j.at("point").get<std::vector<double>>(),
                                                  j.at("lower").get<std::vector<double>>(),
                                                  j.at("upper").get<std::vector<double>>()};
        } catch (const json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, path + ": bad forecast line: " + e.what());
        }
    }
    return out;
}

void cmd_evaluate_forecasts(const Globals& g, const std::string& forecasts, const std::string& actuals,
                            const std::string& band_text, double alpha, std::ostream& out) {
    const auto fc = read_forecasts(forecasts);
    const auto records = read_series(actuals);
    const auto bands = eval::parse_bands(band_text);
    std::string csv = "id,band,mase,smape,msis\n";
    std::map<std::string, std::array<std::vector<double>, 3>> by_band;
    std::vector<std::string> order{"all"};
    for (const auto& b : bands) order.push_back(b.label());
    std::size_t matched = 0;
    for (const auto& r : records) {
        const auto it = fc.find(r.series.id());
        if (it == fc.end() || r.test.empty()) continue;
        ++matched;
        eval::EvalRecord rec{r.series.id(), r.series.values(), r.test, it->second.point, it->second.lower,
                             it->second.upper, r.series.period()};
        rec.validate(true);
        auto guard = [](auto&& fn) {
            try {
                return fn();
            } catch (const Error& e) {
                if (e.code() != ErrorCode::ZeroDenominator) throw;
                return std::nan("");
            }
        };
        for (std::size_t b = 0; b <= bands.size(); ++b) {
            const eval::HorizonBand band = b == 0 ? eval::HorizonBand{1, rec.horizon()} : bands[b - 1];
            if (band.last > rec.horizon()) continue;
            const double m = guard([&] { return eval::mase(rec, band); });
            const double s = eval::smape(rec, band);
            const double q = guard([&] { return eval::msis(rec, band, alpha); });
            auto& slot = by_band[order[b]];
            slot[0].push_back(m);
            slot[1].push_back(s);
            slot[2].push_back(q);
            auto cell = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); };
            csv += rec.id + "," + order[b] + "," + cell(m) + "," + cell(s) + "," + cell(q) + "\n";
        }
    }
    if (matched == 0) throw Error(ErrorCode::InvalidArgument, "no forecast matches a series with a test holdout");
    json summary = json::array();
    out << "band      metric      mean      median\n";
    for (const auto& label : order) {
        const auto it = by_band.find(label);
        if (it == by_band.end()) continue;
        const char* names[] = {"MASE", "sMAPE", "MSIS"};
        for (int k = 0; k < 3; ++k) {
            const auto s = eval::summarize(it->second[k]);
            summary.push_back({{"band", label}, {"metric", names[k]}, {"mean", num(s.mean)}, {"median", num(s.median)},
                               {"count", s.count}});
            char line[96];
            std::snprintf(line, sizeof line, "%-9s %-6s %10.4f %10.4f\n", label.c_str(), names[k], s.mean, s.median);
            out << line;
        }
    }
    write_text(out_path(g, "metrics.csv"), csv);
    write_text(out_path(g, "summary.json"), json{{"series", matched}, {"alpha", alpha}, {"summary", summary}}.dump(2) + "\n");
}

void cmd_evaluate_coverage(const Globals& g, const std::string& sim_path, const std::string& ref_path,
                           std::size_t n_bins, std::ostream& out) {
    const auto sim = read_features(sim_path), ref = read_features(ref_path);
    auto rows = [](const FeatureTable& t) {
        std::vector<std::vector<double>> r;
        for (const auto& fv : t.rows) r.emplace_back(fv.values.begin(), fv.values.end());
        return r;
    };
    const auto rs = rows(sim), rr = rows(ref);
    auto all = rs;
    all.insert(all.end(), rr.begin(), rr.end());
    const auto pca = eval::Pca2::fit(all);
    const double m = eval::miscoverage(pca.project(rs, "sim"), pca.project(rr, "ref"), n_bins);
    write_text(out_path(g, "coverage.json"),
               json{{"miscoverage", m}, {"n_bins", n_bins}, {"sim_series", rs.size()}, {"ref_series", rr.size()}}.dump(2) + "\n");
    out << "miscoverage " << format_double(m) << " (" << n_bins << "x" << n_bins << " bins)\n";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Feature-based ETS model selection toolkit", "etsfs"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Run seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--config", g.config, "JSON config file");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();

    std::optional<double> scale;
    auto* sim = app.add_subcommand("simulate", "Simulate a labelled corpus");
    sim->add_option("--scale", scale, "Multiply every block count");

    std::string input, model_path, features_path, labels_path, forecasts_path, sim_features, ref_features;
    std::optional<int> max_rounds;
    std::optional<std::size_t> horizon;
    std::optional<double> confidence, alpha;
    std::optional<std::string> bands;

    auto* ext = app.add_subcommand("extract", "Extract the feature matrix");
    ext->add_option("--input", input, "Series JSONL")->required();

    auto* trn = app.add_subcommand("train", "Train the three component classifiers");
    trn->add_option("--features", features_path, "Feature CSV")->required();
    trn->add_option("--labels", labels_path, "Series JSONL with spec labels")->required();
    trn->add_option("--max-rounds", max_rounds, "Cap boosting rounds");

    auto* fc = app.add_subcommand("forecast", "Select models and forecast");
    fc->add_option("--model", model_path, "Selector artifact")->required();
    fc->add_option("--input", input, "Series JSONL")->required();
    fc->add_option("--horizon", horizon, "Forecast horizon");
    fc->add_option("--confidence", confidence, "Interval confidence");

    auto* bm = app.add_subcommand("benchmark", "Compare against information-criterion selection");
    bm->add_option("--model", model_path, "Selector artifact")->required();
    bm->add_option("--input", input, "Series JSONL with test holdouts")->required();
    bm->add_option("--confidence", confidence, "Interval confidence");
    bm->add_option("--bands", bands, "Horizon bands, e.g. 1-2,3-4,5-6");

    auto* ev = app.add_subcommand("evaluate", "Score forecasts or measure instance-space miscoverage");
    auto* o_fc = ev->add_option("--forecasts", forecasts_path, "Forecast JSONL");
    auto* o_act = ev->add_option("--actuals", input, "Series JSONL with test holdouts");
    auto* o_sim = ev->add_option("--sim-features", sim_features, "Simulated feature CSV");
    auto* o_ref = ev->add_option("--ref-features", ref_features, "Reference feature CSV");
    ev->add_option("--bands", bands, "Horizon bands");
    ev->add_option("--alpha", alpha, "MSIS alpha");
    o_fc->needs(o_act);
    o_act->needs(o_fc);
    o_sim->needs(o_ref);
    o_ref->needs(o_sim);
    o_fc->excludes(o_sim);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (!g.config.empty()) g.cfg = RunConfig::parse(read_text(g.config));
        std::error_code ec;
        fs::create_directories(g.out, ec);
        if (ec || !fs::is_directory(g.out)) throw Error(ErrorCode::Io, "cannot create output directory " + g.out);

        if (*sim) {
            cmd_simulate(g, scale, out);
        } else if (*ext) {
            cmd_extract(g, input, out, err);
        } else if (*trn) {
            cmd_train(g, features_path, labels_path, max_rounds, out);
        } else if (*fc) {
            cmd_forecast(g, model_path, input, horizon, confidence, out, err);
        } else if (*bm) {
            cmd_benchmark(g, model_path, input, confidence, bands, out);
        } else if (*ev) {
            if (!forecasts_path.empty()) {
                const double a = alpha.value_or(g.cfg.evaluate.alpha);
                if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::Config, "alpha must lie in (0, 1)");
                cmd_evaluate_forecasts(g, forecasts_path, input, bands.value_or(g.cfg.evaluate.bands), a, out);
            } else if (!sim_features.empty()) {
                cmd_evaluate_coverage(g, sim_features, ref_features, g.cfg.evaluate.n_bins, out);
            } else {
                throw Error(ErrorCode::Config, "evaluate needs --forecasts/--actuals or --sim-features/--ref-features");
            }
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.code());
    }
    return kExitOk;
}

} // namespace etsfs::cli
