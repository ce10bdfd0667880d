#include <json.hpp>

#include "etsfs/cli/config.hpp"
#include "etsfs/core/error.hpp"

namespace etsfs::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::Config, what); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) bad(where + " must be an object");
    for (const auto& [k, _] : j.items()) {
        bool ok = false;
        for (const char* allowed : keys) ok = ok || k == allowed;
        if (!ok) bad("unknown key '" + k + "' in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        bad(std::string("wrong type for '") + key + "'");
    }
}

void read_range(const json& j, const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        bad(std::string("'") + key + "' must be a [lo, hi] pair");
    lo = v[0].get<double>();
    hi = v[1].get<double>();
}

void parse_plan(const json& j, SimulateSettings& s) {
    only_keys(j, "simulate", {"scale", "blocks", "alpha", "frac", "phi", "level", "trend", "season_amp", "add_noise",
                              "mult_noise", "max_retries", "holdout"});
    auto& p = s.plan;
    if (j.contains("blocks")) {
        p.blocks.clear();
        if (!j["blocks"].is_array()) bad("'blocks' must be an array");
        for (const auto& b : j["blocks"]) {
            only_keys(b, "simulate.blocks", {"frequency", "period", "count", "min_length", "max_length"});
            selector::FrequencyBlock fb;
            if (b.contains("frequency") == b.contains("period")) bad("each block needs exactly one of frequency/period");
            if (b.contains("frequency")) {
                std::string name;
                read(b, "frequency", name);
                fb.period = frequency_period(name);
            } else {
                read(b, "period", fb.period);
            }
            read(b, "count", fb.count);
            read(b, "min_length", fb.min_length);
            read(b, "max_length", fb.max_length);
            p.blocks.push_back(fb);
        }
    }
    if (j.contains("scale")) {
        double f = 1.0;
        read(j, "scale", f);
        if (!(f > 0.0)) bad("'scale' must be positive");
        for (auto& b : p.blocks) b.count = static_cast<std::size_t>(std::llround(static_cast<double>(b.count) * f));
    }
    read_range(j, "alpha", p.alpha_lo, p.alpha_hi);
    read_range(j, "frac", p.frac_lo, p.frac_hi);
    read_range(j, "phi", p.phi_lo, p.phi_hi);
    read_range(j, "level", p.level_lo, p.level_hi);
    read_range(j, "trend", p.trend_lo, p.trend_hi);
    read_range(j, "season_amp", p.season_amp_lo, p.season_amp_hi);
    read_range(j, "add_noise", p.add_noise_lo, p.add_noise_hi);
    read_range(j, "mult_noise", p.mult_noise_lo, p.mult_noise_hi);
    read(j, "max_retries", p.max_retries);
    if (j.contains("holdout")) {
        if (!j["holdout"].is_object()) bad("'holdout' must map period to horizon");
        for (const auto& [k, v] : j["holdout"].items()) {
            int period = 0;
            try {
                period = std::stoi(k);
            } catch (const std::exception&) {
                period = frequency_period(k);
            }
            if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) bad("holdout horizons must be positive integers");
            s.holdout[period] = v.get<std::size_t>();
        }
    }
    p.validate();
}

void parse_classifier(const json& j, const std::string& where, gbdt::TrainConfig& c) {
    only_keys(j, where, {"eta", "num_leaves", "min_data_in_leaf", "max_bin", "num_boost_round", "bagging_fraction",
                         "bagging_freq", "feature_fraction", "seed", "lambda", "min_gain", "min_sum_hessian"});
    read(j, "eta", c.eta);
    read(j, "num_leaves", c.num_leaves);
    read(j, "min_data_in_leaf", c.min_data_in_leaf);
    read(j, "max_bin", c.max_bin);
    read(j, "num_boost_round", c.num_boost_round);
    read(j, "bagging_fraction", c.bagging_fraction);
    read(j, "bagging_freq", c.bagging_freq);
    read(j, "feature_fraction", c.feature_fraction);
    read(j, "seed", c.seed);
    read(j, "lambda", c.lambda);
    read(j, "min_gain", c.min_gain);
    read(j, "min_sum_hessian", c.min_sum_hessian);
    c.validate();
}

json classifier_json(const gbdt::TrainConfig& c) {
    return {{"eta", c.eta},
            {"num_leaves", c.num_leaves},
            {"min_data_in_leaf", c.min_data_in_leaf},
            {"max_bin", c.max_bin},
            {"num_boost_round", c.num_boost_round},
            {"bagging_fraction", c.bagging_fraction},
            {"bagging_freq", c.bagging_freq},
            {"feature_fraction", c.feature_fraction},
            {"seed", c.seed},
            {"lambda", c.lambda},
            {"min_gain", c.min_gain},
            {"min_sum_hessian", c.min_sum_hessian}};
}

const char* criterion_name(ets::Criterion c) {
    switch (c) {
    case ets::Criterion::AIC: return "AIC";
    case ets::Criterion::BIC: return "BIC";
    default: return "AICc";
    }
}

void check_confidence(double c) {
    if (!(c > 0.0 && c < 1.0)) bad("confidence must lie in (0, 1)");
}

} // namespace

int frequency_period(const std::string& name) {
    if (name == "yearly") return 1;
    if (name == "quarterly") return 4;
    if (name == "monthly") return 12;
    bad("unknown frequency '" + name + "' (expected yearly, quarterly or monthly)");
}

std::size_t default_horizon(int period) {
    switch (period) {
    case 1: return 6;
    case 4: return 8;
    case 12: return 18;
    default: return static_cast<std::size_t>(2 * period);
    }
}

RunConfig RunConfig::parse(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        bad(std::string("config is not valid JSON: ") + e.what());
    }
    only_keys(j, "config", {"format_version", "simulate", "train", "forecast", "benchmark", "evaluate"});
    if (!j.contains("format_version")) bad("config lacks format_version");
    int version = 0;
    read(j, "format_version", version);
    if (version < 1 || version > kConfigVersion)
        bad("unsupported config format_version " + std::to_string(version));

    RunConfig c;
    if (j.contains("simulate")) parse_plan(j["simulate"], c.simulate);
    if (j.contains("train")) {
        const auto& t = j["train"];
        only_keys(t, "train", {"train_fraction", "split_seed", "max_rounds", "error", "trend", "season"});
        read(t, "train_fraction", c.train.train_fraction);
        read(t, "split_seed", c.train.split_seed);
        read(t, "max_rounds", c.train.max_rounds);
        if (!(c.train.train_fraction > 0.0 && c.train.train_fraction <= 1.0)) bad("train_fraction must lie in (0, 1]");
        if (c.train.max_rounds < 0) bad("max_rounds must be >= 0");
        if (t.contains("error")) parse_classifier(t["error"], "train.error", c.train.error);
        if (t.contains("trend")) parse_classifier(t["trend"], "train.trend", c.train.trend);
        if (t.contains("season")) parse_classifier(t["season"], "train.season", c.train.season);
    }
    if (j.contains("forecast")) {
        const auto& f = j["forecast"];
        only_keys(f, "forecast", {"horizon", "confidence", "paths"});
        read(f, "horizon", c.forecast.horizon);
        read(f, "confidence", c.forecast.confidence);
        read(f, "paths", c.forecast.paths);
        check_confidence(c.forecast.confidence);
        if (c.forecast.paths < 10) bad("paths must be at least 10");
    }
    if (j.contains("benchmark")) {
        const auto& b = j["benchmark"];
        only_keys(b, "benchmark", {"confidence", "paths", "bands", "criterion"});
        read(b, "confidence", c.benchmark.confidence);
        read(b, "paths", c.benchmark.paths);
        read(b, "bands", c.benchmark.bands);
        std::string crit = criterion_name(c.benchmark.criterion);
        read(b, "criterion", crit);
        if (crit == "AIC")
            c.benchmark.criterion = ets::Criterion::AIC;
        else if (crit == "AICc")
            c.benchmark.criterion = ets::Criterion::AICc;
        else if (crit == "BIC")
            c.benchmark.criterion = ets::Criterion::BIC;
        else
            bad("criterion must be AIC, AICc or BIC");
        check_confidence(c.benchmark.confidence);
        if (c.benchmark.paths < 10) bad("paths must be at least 10");
    }
    if (j.contains("evaluate")) {
        const auto& e = j["evaluate"];
        only_keys(e, "evaluate", {"alpha", "bands", "n_bins"});
        read(e, "alpha", c.evaluate.alpha);
        read(e, "bands", c.evaluate.bands);
        read(e, "n_bins", c.evaluate.n_bins);
        if (!(c.evaluate.alpha > 0.0 && c.evaluate.alpha < 1.0)) bad("alpha must lie in (0, 1)");
        if (c.evaluate.n_bins < 1) bad("n_bins must be positive");
    }
    return c;
}

std::string RunConfig::to_json() const {
    const auto& p = simulate.plan;
    json blocks = json::array();
    for (const auto& b : p.blocks)
        blocks.push_back({{"period", b.period}, {"count", b.count}, {"min_length", b.min_length}, {"max_length", b.max_length}});
    json holdout = json::object();
    for (const auto& [period, h] : simulate.holdout) holdout[std::to_string(period)] = h;
    json j = {
        {"format_version", kConfigVersion},
        {"simulate",
         {{"blocks", blocks},
          {"alpha", {p.alpha_lo, p.alpha_hi}},
          {"frac", {p.frac_lo, p.frac_hi}},
          {"phi", {p.phi_lo, p.phi_hi}},
          {"level", {p.level_lo, p.level_hi}},
          {"trend", {p.trend_lo, p.trend_hi}},
          {"season_amp", {p.season_amp_lo, p.season_amp_hi}},
          {"add_noise", {p.add_noise_lo, p.add_noise_hi}},
          {"mult_noise", {p.mult_noise_lo, p.mult_noise_hi}},
          {"max_retries", p.max_retries},
          {"holdout", holdout}}},
        {"train",
         {{"train_fraction", train.train_fraction},
          {"split_seed", train.split_seed},
          {"max_rounds", train.max_rounds},
          {"error", classifier_json(train.error)},
          {"trend", classifier_json(train.trend)},
          {"season", classifier_json(train.season)}}},
        {"forecast", {{"horizon", forecast.horizon}, {"confidence", forecast.confidence}, {"paths", forecast.paths}}},
        {"benchmark",
         {{"confidence", benchmark.confidence},
          {"paths", benchmark.paths},
          {"bands", benchmark.bands},
          {"criterion", criterion_name(benchmark.criterion)}}},
        {"evaluate", {{"alpha", evaluate.alpha}, {"bands", evaluate.bands}, {"n_bins", evaluate.n_bins}}},
    };
    return j.dump(2);
}

} // namespace etsfs::cli
