#include <algorithm>
#include <cmath>
#include <optional>

#include "etsfs/core/digest.hpp"
#include "etsfs/core/error.hpp"
#include "etsfs/core/parallel.hpp"
#include "etsfs/selector/selector.hpp"

namespace etsfs::selector {

using ets::ErrorForm;
using ets::SeasonForm;
using ets::TrendForm;

int error_label(ErrorForm e) { return e == ErrorForm::Additive ? 0 : 1; }
int trend_label(TrendForm t) {
    switch (t) {
    case TrendForm::Additive: return 0;
    case TrendForm::Damped: return 1;
    case TrendForm::None: break;
    }
    return 2;
}
int season_label(SeasonForm s) {
    switch (s) {
    case SeasonForm::Additive: return 0;
    case SeasonForm::Multiplicative: return 1;
    case SeasonForm::None: break;
    }
    return 2;
}
ErrorForm error_form(int label) { return label == 0 ? ErrorForm::Additive : ErrorForm::Multiplicative; }
TrendForm trend_form(int label) {
    return label == 0 ? TrendForm::Additive : (label == 1 ? TrendForm::Damped : TrendForm::None);
}
SeasonForm season_form(int label) {
    return label == 0 ? SeasonForm::Additive : (label == 1 ? SeasonForm::Multiplicative : SeasonForm::None);
}

void SimulationPlan::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::Config, what); };
    auto range = [&](double lo, double hi, const char* name) {
        if (!(lo <= hi)) bad(std::string(name) + " range is empty");
    };
    if (blocks.empty()) bad("simulation plan has no frequency blocks");
    for (const auto& b : blocks) {
        if (b.period < 1) bad("block period must be positive");
        if (b.min_length < 1 || b.min_length > b.max_length) bad("block length range is invalid");
        if (static_cast<std::size_t>(b.min_length) < 2 * static_cast<std::size_t>(b.period))
            bad("block minimum length must cover two seasonal cycles");
    }
    range(alpha_lo, alpha_hi, "alpha");
    if (!(alpha_lo > 0.0 && alpha_hi < 1.0)) bad("alpha range must lie inside (0, 1)");
    range(frac_lo, frac_hi, "beta/gamma fraction");
    if (!(frac_lo > 0.0 && frac_hi < 1.0)) bad("beta/gamma fractions must lie inside (0, 1)");
    range(phi_lo, phi_hi, "phi");
    if (phi_lo < ets::kPhiLower || phi_hi > ets::kPhiUpper) bad("phi range must lie within [0.80, 0.98]");
    range(level_lo, level_hi, "level0");
    range(trend_lo, trend_hi, "trend0");
    range(season_amp_lo, season_amp_hi, "seasonal amplitude");
    if (!(season_amp_lo >= 0.0 && season_amp_hi < 1.0)) bad("seasonal amplitude must lie in [0, 1)");
    range(add_noise_lo, add_noise_hi, "additive noise");
    range(mult_noise_lo, mult_noise_hi, "multiplicative noise");
    if (!(add_noise_lo > 0.0 && mult_noise_lo > 0.0)) bad("noise levels must be positive");
    if (max_retries < 1) bad("max_retries must be positive");
}

SimulationPlan SimulationPlan::desk() {
    SimulationPlan p;
    p.blocks = {{1, 600, 19, 100}, {4, 600, 24, 300}, {12, 1200, 60, 600}};
    return p;
}

SimulationPlan SimulationPlan::scaled(double factor) {
    SimulationPlan p = desk();
    for (auto& b : p.blocks) b.count = static_cast<std::size_t>(std::llround(static_cast<double>(b.count) * factor));
    return p;
}

std::vector<std::size_t> model_counts(std::size_t total, std::size_t n_models) {
    std::vector<std::size_t> out(n_models, n_models == 0 ? 0 : total / n_models);
    for (std::size_t i = 0; i < (n_models == 0 ? 0 : total % n_models); ++i) ++out[i];
    return out;
}

ets::EtsParams sample_params(const ets::EtsSpec& spec, const SimulationPlan& plan, Rng& rng, double* noise_sd) {
    ets::EtsParams p;
    p.alpha = rng.uniform(plan.alpha_lo, plan.alpha_hi);
    p.level0 = rng.uniform(plan.level_lo, plan.level_hi);
    if (spec.has_trend()) {
        p.beta = rng.uniform(plan.frac_lo, plan.frac_hi) * p.alpha;
        p.trend0 = rng.uniform(plan.trend_lo, plan.trend_hi);
    }
    if (spec.damped()) p.phi = rng.uniform(plan.phi_lo, plan.phi_hi);
    if (spec.seasonal()) {
        p.gamma = rng.uniform(plan.frac_lo, plan.frac_hi) * (1.0 - p.alpha);
        const auto m = static_cast<std::size_t>(spec.period());
        const double amp = rng.uniform(plan.season_amp_lo, plan.season_amp_hi);
        std::vector<double> c(m);
        for (auto& v : c) v = rng.uniform(-1.0, 1.0);
        double mean = 0.0;
        for (double v : c) mean += v;
        mean /= static_cast<double>(m);
        double peak = 0.0;
        for (auto& v : c) {
            v -= mean;
            peak = std::max(peak, std::abs(v));
        }
        if (peak > 0.0)
            for (auto& v : c) v /= peak;
        p.seasonal0.resize(m);
        if (spec.season() == SeasonForm::Additive) {
            for (std::size_t j = 0; j < m; ++j) p.seasonal0[j] = amp * p.level0 * c[j];
        } else {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += p.seasonal0[j] = 1.0 + amp * c[j];
            for (auto& v : p.seasonal0) v *= static_cast<double>(m) / s;
        }
    }
    const double sd = spec.error() == ErrorForm::Multiplicative
                          ? rng.uniform(plan.mult_noise_lo, plan.mult_noise_hi)
                          : rng.uniform(plan.add_noise_lo, plan.add_noise_hi) * p.level0;
    if (noise_sd) *noise_sd = sd;
    return p;
}

std::uint64_t corpus_digest(const std::vector<LabeledSeries>& items) {
    Digest d;
    for (const auto& it : items) {
        d.update(it.series.id());
        d.update_u64(static_cast<std::uint64_t>(it.series.period()));
        d.update(it.spec.code());
        d.update_u64(it.series.size());
        for (double v : it.series.values()) d.update(v);
    }
    return d.value();
}

Corpus build_corpus(const SimulationPlan& plan, std::uint64_t seed, unsigned threads) {
    plan.validate();
    struct Job {
        int period;
        ets::EtsSpec spec;
        int min_length, max_length;
        std::string id;
    };
    std::vector<Job> jobs;
    for (const auto& block : plan.blocks) {
        const auto specs = ets::applicable_specs(block.period);
        const auto counts = model_counts(block.count, specs.size());
        const char tag = block.period == 1 ? 'Y' : (block.period == 4 ? 'Q' : (block.period == 12 ? 'M' : 'S'));
        std::size_t serial = 0;
        for (std::size_t m = 0; m < specs.size(); ++m)
            for (std::size_t i = 0; i < counts[m]; ++i)
                jobs.push_back({block.period, specs[m], block.min_length, block.max_length,
                                std::string(1, tag) + std::to_string(block.period) + "-" + std::to_string(++serial)});
    }

    std::vector<std::optional<LabeledSeries>> slots(jobs.size());
    std::vector<std::size_t> retries(jobs.size(), 0);
    parallel_for(jobs.size(), threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        Rng rng(mix_seed(seed, j));
        for (int attempt = 0; attempt < plan.max_retries; ++attempt) {
            const auto n = static_cast<std::size_t>(rng.uniform_int(job.min_length, job.max_length));
            double sd = 0.0;
            auto params = sample_params(job.spec, plan, rng, &sd);
            const std::uint64_t path_seed = rng.engine()();
            try {
                auto series = ets::simulate(job.spec, params, n, sd, path_seed, job.id);
                if (job.spec.needs_positive_data() && series.has_nonpositive()) {
                    ++retries[j];
                    continue;
                }
                slots[j].emplace(LabeledSeries{std::move(series), job.spec, std::move(params), sd});
                return;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::InvalidParams) throw;  // diverged path
                ++retries[j];
            }
        }
        throw Error(ErrorCode::DegenerateData,
                    job.id + ": no admissible " + job.spec.code() + " path after " + std::to_string(plan.max_retries) +
                        " draws");
    });

    Corpus corpus;
    corpus.items.reserve(jobs.size());
    for (auto& s : slots) corpus.items.push_back(std::move(*s));
    for (auto r : retries) corpus.resampled += r;
    corpus.digest = corpus_digest(corpus.items);
    return corpus;
}

} // namespace etsfs::selector
