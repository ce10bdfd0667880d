#include <chrono>
#include <cmath>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "etsfs/cli/benchmark.hpp"
#include "etsfs/core/digest.hpp"
#include "etsfs/core/error.hpp"
#include "etsfs/core/parallel.hpp"
#include "etsfs/core/rng.hpp"

namespace etsfs::cli {

using nlohmann::json;

std::uint64_t series_seed(std::uint64_t seed, const std::string& id) {
    Digest d;
    d.update(id);
    return mix_seed(seed, d.value());
}

namespace {

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

eval::EvalRecord record_for(const SeriesRecord& r, const ets::Forecast& f) {
    return {r.series.id(), r.series.values(), r.test, f.point, f.lower, f.upper, r.series.period()};
}

double guarded(auto&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ZeroDenominator) return std::nan("");
        throw;
    }
}

struct BandValues {
    std::vector<double> mase, smape, msis;
};

} // namespace

BenchmarkReport run_benchmark(const selector::SelectorModel& model, const std::vector<SeriesRecord>& records,
                              const BenchmarkSettings& settings, double alpha, std::uint64_t seed, unsigned threads) {
    const auto bands = eval::parse_bands(settings.bands);
    std::vector<const SeriesRecord*> work;
    for (const auto& r : records)
        if (!r.test.empty()) work.push_back(&r);
    if (work.empty()) throw Error(ErrorCode::InvalidArgument, "no series carries a test holdout");
    const std::size_t n = work.size();

    BenchmarkReport rep;
    rep.timing.threads = threads;
    rep.series.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        rep.series[i].id = work[i]->series.id();
        rep.series[i].period = work[i]->series.period();
        rep.series[i].truth = work[i]->spec;
    }

    std::vector<double> extract_s(n, 0.0), select_s(n, 0.0);
    auto t0 = std::chrono::steady_clock::now();
    parallel_for(n, threads, [&](std::size_t i) {
        const auto& r = *work[i];
        auto& out = rep.series[i].feature_based;
        try {
            auto sel = selector::select_and_forecast(model, r.series, r.test.size(), settings.confidence,
                                                     series_seed(seed, r.series.id()), settings.paths);
            out.spec = sel.spec;
            out.forecast = std::move(sel.forecast);
            extract_s[i] = sel.extract_seconds;
            select_s[i] = sel.select_seconds;
        } catch (const Error& e) {
            out.error = e.what();
        }
    });
    rep.timing.fb_wall = since(t0);
    for (std::size_t i = 0; i < n; ++i) {
        rep.timing.fb_extract += extract_s[i];
        rep.timing.fb_select += select_s[i];
    }

    t0 = std::chrono::steady_clock::now();
    parallel_for(n, threads, [&](std::size_t i) {
        const auto& r = *work[i];
        auto& out = rep.series[i].ic;
        try {
            const auto fit = ets::select_by_ic(r.series, settings.criterion);
            out.spec = fit.spec;
            out.forecast = ets::forecast(fit, r.test.size(), settings.confidence, settings.paths,
                                         series_seed(seed, r.series.id()));
        } catch (const Error& e) {
            out.error = e.what();
        }
    });
    rep.timing.ic_wall = since(t0);

    // paired metrics on series where both methods produced forecasts
    const std::size_t nb = bands.size() + 1;
    std::vector<BandValues> fb(nb), ic(nb);
    std::size_t better = 0, worse = 0, same = 0, degenerate = 0;
    std::vector<std::vector<double>> pooled_fb(bands.size()), pooled_ic(bands.size());
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = rep.series[i];
        if (!s.feature_based.error.empty() || !s.ic.error.empty()) {
            ++rep.failed;
            continue;
        }
        ++rep.compared;
        const auto& r = *work[i];
        const auto ra = record_for(r, s.feature_based.forecast);
        const auto rb = record_for(r, s.ic.forecast);
        const std::size_t h = r.test.size();
        bool zero = false;
        for (std::size_t b = 0; b < nb; ++b) {
            const eval::HorizonBand band = b == 0 ? eval::HorizonBand{1, h} : bands[b - 1];
            if (band.last > h) continue;
            const std::string label = b == 0 ? "all" : band.label();
            for (auto [rec, dst, outcome] : {std::tuple{&ra, &fb[b], &s.feature_based}, std::tuple{&rb, &ic[b], &s.ic}}) {
                BandMetrics bm{label, guarded([&] { return eval::mase(*rec, band); }), eval::smape(*rec, band),
                               guarded([&] { return eval::msis(*rec, band, alpha); })};
                zero = zero || std::isnan(bm.mase);
                dst->mase.push_back(bm.mase);
                dst->smape.push_back(bm.smape);
                dst->msis.push_back(bm.msis);
                outcome->metrics.push_back(bm);
            }
            if (b > 0 && std::isfinite(fb[b].mase.back()) && std::isfinite(ic[b].mase.back())) {
                pooled_fb[b - 1].push_back(fb[b].mase.back());
                pooled_ic[b - 1].push_back(ic[b].mase.back());
            }
        }
        rep.zero_scale += zero;

        std::vector<double> ea(h), eb(h);
        for (std::size_t t = 0; t < h; ++t) {
            ea[t] = r.test[t] - ra.point[t];
            eb[t] = r.test[t] - rb.point[t];
        }
        try {
            if (h < 2) throw Error(ErrorCode::DegenerateDifferential, "single-step holdout");
            const auto dm = eval::dm_test(ea, eb, 1, eval::Loss::Absolute);
            if (dm.direction == eval::DmDirection::FavorsA)
                ++better;
            else if (dm.direction == eval::DmDirection::FavorsB)
                ++worse;
            else
                ++same;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateDifferential) throw;
            ++degenerate;
        }
    }
    if (rep.compared > 0) {
        const double c = static_cast<double>(rep.compared);
        rep.dm_better_pct = 100.0 * static_cast<double>(better) / c;
        rep.dm_worse_pct = 100.0 * static_cast<double>(worse) / c;
        rep.dm_same_pct = 100.0 * static_cast<double>(same) / c;
        rep.dm_degenerate_pct = 100.0 * static_cast<double>(degenerate) / c;
    }

    for (std::size_t b = 0; b < nb; ++b) {
        const std::string label = b == 0 ? "all" : bands[b - 1].label();
        for (auto [name, vals] : {std::pair{kFeatureBased, &fb[b]}, std::pair{kInformationCriteria, &ic[b]}}) {
            rep.metrics.push_back({name, "MASE", label, eval::summarize(vals->mase)});
            rep.metrics.push_back({name, "sMAPE", label, eval::summarize(vals->smape)});
            rep.metrics.push_back({name, "MSIS", label, eval::summarize(vals->msis)});
        }
    }
    for (std::size_t b = 0; b < bands.size(); ++b) {
        DmBand d;
        d.band = bands[b].label();
        d.series = pooled_fb[b].size();
        try {
            d.result = eval::dm_test(pooled_fb[b], pooled_ic[b], 1, eval::Loss::Absolute);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateDifferential && e.code() != ErrorCode::InvalidArgument) throw;
            d.note = e.code() == ErrorCode::DegenerateDifferential ? "degenerate: identical accuracy" : "too few series";
        }
        rep.dm_pooled.push_back(d);
    }

    bool labelled = rep.compared > 0;
    std::vector<std::string> truth, pf, pi;
    for (const auto& s : rep.series) {
        if (!s.feature_based.error.empty() || !s.ic.error.empty()) continue;
        if (!s.truth) {
            labelled = false;
            break;
        }
        truth.push_back(s.truth->code());
        pf.push_back(s.feature_based.spec->code());
        pi.push_back(s.ic.spec->code());
    }
    if (labelled) {
        rep.fb_recovery = eval::accuracy(truth, pf);
        rep.ic_recovery = eval::accuracy(truth, pi);
    }
    return rep;
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

std::string BenchmarkReport::to_json() const {
    json metrics_j = json::array();
    for (const auto& m : metrics)
        metrics_j.push_back({{"method", m.method},
                             {"metric", m.metric},
                             {"band", m.band},
                             {"mean", num(m.summary.mean)},
                             {"median", num(m.summary.median)},
                             {"count", m.summary.count}});
    json dm_j = json::array();
    for (const auto& d : dm_pooled) {
        json e = {{"band", d.band}, {"series", d.series}};
        if (d.result) {
            e["statistic"] = num(d.result->statistic);
            e["p_value"] = num(d.result->p_value);
            e["direction"] = d.result->direction == eval::DmDirection::FavorsA   ? "feature-based better"
                             : d.result->direction == eval::DmDirection::FavorsB ? "feature-based worse"
                                                                                 : "no significant difference";
        } else {
            e["note"] = d.note;
        }
        dm_j.push_back(e);
    }
    json series_j = json::array();
    for (const auto& s : series) {
        json e = {{"id", s.id}};
        if (s.truth) e["truth"] = s.truth->code();
        e[kFeatureBased] = s.feature_based.error.empty() ? json(s.feature_based.spec->code()) : json(nullptr);
        e[kInformationCriteria] = s.ic.error.empty() ? json(s.ic.spec->code()) : json(nullptr);
        if (!s.feature_based.error.empty()) e["feature_based_error"] = s.feature_based.error;
        if (!s.ic.error.empty()) e["ic_error"] = s.ic.error;
        series_j.push_back(e);
    }
    json j = {{"compared", compared},
              {"failed", failed},
              {"zero_scale_series", zero_scale},
              {"metrics", metrics_j},
              {"dm_pooled", dm_j},
              {"dm_per_series_pct",
               {{"feature_based_better", dm_better_pct},
                {"feature_based_worse", dm_worse_pct},
                {"no_significant_difference", dm_same_pct},
                {"degenerate", dm_degenerate_pct}}},
              {"series", series_j}};
    if (fb_recovery) j["model_recovery_pct"] = {{kFeatureBased, *fb_recovery}, {kInformationCriteria, *ic_recovery}};
    return j.dump(2);
}

std::string BenchmarkReport::timing_json() const {
    json j = {{kFeatureBased,
               {{"Feature extraction", timing.fb_extract},
                {"Model selection and forecasting", timing.fb_select},
                {"wall", timing.fb_wall}}},
              {kInformationCriteria, {{"wall", timing.ic_wall}}},
              {"threads", timing.threads},
              {"speed_ratio", timing.ic_wall > 0 ? timing.fb_wall / timing.ic_wall : 0.0}};
    return j.dump(2);
}

std::string BenchmarkReport::metrics_csv() const {
    std::string out = "id,method,spec,band,mase,smape,msis\n";
    auto cell = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); };
    for (const auto& m : series) {
        for (auto [name, o] : {std::pair{kFeatureBased, &m.feature_based}, std::pair{kInformationCriteria, &m.ic}}) {
            for (const auto& bm : o->metrics)
                out += m.id + "," + name + "," + o->spec->code() + "," + bm.band + "," + cell(bm.mase) + "," +
                       cell(bm.smape) + "," + cell(bm.msis) + "\n";
        }
    }
    return out;
}

std::string BenchmarkReport::table() const {
    std::ostringstream out;
    char line[160];
    out << "metric band      method                mean        median\n";
    for (const auto& m : metrics) {
        std::snprintf(line, sizeof line, "%-6s %-9s %-20s %10.4f %12.4f\n", m.metric.c_str(), m.band.c_str(),
                      m.method.c_str(), m.summary.mean, m.summary.median);
        out << line;
    }
    std::snprintf(line, sizeof line, "DM per series: better %.1f%%  worse %.1f%%  no difference %.1f%%  degenerate %.1f%%\n",
                  dm_better_pct, dm_worse_pct, dm_same_pct, dm_degenerate_pct);
    out << line;
    if (fb_recovery) {
        std::snprintf(line, sizeof line, "model recovery: feature-based %.2f%%  information-criteria %.2f%%\n",
                      *fb_recovery, *ic_recovery);
        out << line;
    }
    std::snprintf(line, sizeof line, "time (s): feature-based %.3f (extraction %.3f, selection+forecast %.3f)  IC %.3f\n",
                  timing.fb_wall, timing.fb_extract, timing.fb_select, timing.ic_wall);
    out << line;
    return out.str();
}

} // namespace etsfs::cli
