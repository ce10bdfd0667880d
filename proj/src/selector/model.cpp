#include <algorithm>
#include <numeric>
#include <optional>

#include "etsfs/core/binary.hpp"
#include "etsfs/core/digest.hpp"
#include "etsfs/core/error.hpp"
#include "etsfs/core/parallel.hpp"
#include "etsfs/selector/selector.hpp"

namespace etsfs::selector {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'E', 'L'};

const std::vector<std::string>& classes_of(Component c) {
    switch (c) {
    case Component::Error: return kErrorClasses;
    case Component::Trend: return kTrendClasses;
    case Component::Season: break;
    }
    return kSeasonClasses;
}

const char* name_of(Component c) {
    switch (c) {
    case Component::Error: return "error";
    case Component::Trend: return "trend";
    case Component::Season: break;
    }
    return "seasonality";
}

int label_of(Component c, const ets::EtsSpec& s) {
    switch (c) {
    case Component::Error: return error_label(s.error());
    case Component::Trend: return trend_label(s.trend());
    case Component::Season: break;
    }
    return season_label(s.season());
}

gbdt::FeatureMatrix matrix_of(const TrainingSet& data, std::span<const std::size_t> rows) {
    std::vector<std::string> names;
    for (auto n : features::manifest()) names.emplace_back(n);
    gbdt::FeatureMatrix x(std::move(names));
    for (auto r : rows) x.add_row(data.features[r].values);
    return x;
}

template <std::size_t K>
std::size_t argmax(const std::array<double, K>& p) {
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

} // namespace

std::vector<std::byte> SelectorModel::save() const {
    ByteWriter p;
    p.i32(manifest_version);
    p.u64(corpus_digest);
    for (const auto* m : {&f_e, &f_t, &f_s}) {
        const auto blob = m->save();
        p.u64(blob.size());
        p.bytes(blob);
    }
    const auto payload = p.take();
    ByteWriter out;
    for (char ch : kMagic) out.u8(static_cast<std::uint8_t>(ch));
    out.u32(kSelectorFormatVersion);
    out.u64(payload.size());
    out.bytes(payload);
    out.u32(crc32(payload));
    return out.take();
}

SelectorModel SelectorModel::load(std::span<const std::byte> bytes) {
    ByteReader head(bytes);
    for (char ch : kMagic)
        if (head.u8() != static_cast<std::uint8_t>(ch)) throw Error(ErrorCode::CorruptArtifact, "not a selector model");
    const std::uint32_t version = head.u32();
    if (version > kSelectorFormatVersion)
        throw Error(ErrorCode::VersionMismatch, "selector format version " + std::to_string(version) +
                                                    " is newer than supported version " +
                                                    std::to_string(kSelectorFormatVersion));
    if (version == 0) throw Error(ErrorCode::CorruptArtifact, "invalid format version 0");
    const std::uint64_t len = head.u64();
    if (len > head.remaining()) throw Error(ErrorCode::CorruptArtifact, "payload truncated");
    const auto payload = head.bytes(static_cast<std::size_t>(len));
    if (head.remaining() != 4) throw Error(ErrorCode::CorruptArtifact, "trailing bytes or missing checksum");
    if (head.u32() != crc32(payload)) throw Error(ErrorCode::CorruptArtifact, "checksum mismatch");

    ByteReader p(payload);
    SelectorModel m;
    m.manifest_version = p.i32();
    m.corpus_digest = p.u64();
    for (auto* e : {&m.f_e, &m.f_t, &m.f_s}) {
        const std::uint64_t n = p.u64();
        if (n > p.remaining()) throw Error(ErrorCode::CorruptArtifact, "classifier blob truncated");
        *e = gbdt::TreeEnsemble::load(p.bytes(static_cast<std::size_t>(n)));
    }
    if (p.remaining() != 0) throw Error(ErrorCode::CorruptArtifact, "unexpected bytes after classifiers");
    if (m.f_e.class_labels != kErrorClasses || m.f_t.class_labels != kTrendClasses ||
        m.f_s.class_labels != kSeasonClasses)
        throw Error(ErrorCode::CorruptArtifact, "classifier label sets do not match A/M, A/Ad/N, A/M/N");
    if (m.f_e.feature_names != m.f_t.feature_names || m.f_e.feature_names != m.f_s.feature_names)
        throw Error(ErrorCode::CorruptArtifact, "classifiers were trained on different feature sets");
    return m;
}

ComponentPrediction predict_components(const SelectorModel& model, const features::FeatureVector& fv) {
    if (fv.manifest_version != model.manifest_version)
        throw Error(ErrorCode::ManifestMismatch, "feature manifest v" + std::to_string(fv.manifest_version) +
                                                     " does not match model manifest v" +
                                                     std::to_string(model.manifest_version));
    ComponentPrediction out;
    const auto pe = model.f_e.predict_proba(fv.values);
    const auto pt = model.f_t.predict_proba(fv.values);
    const auto ps = model.f_s.predict_proba(fv.values);
    std::copy(pe.begin(), pe.end(), out.p_error.begin());
    std::copy(pt.begin(), pt.end(), out.p_trend.begin());
    std::copy(ps.begin(), ps.end(), out.p_season.begin());
    return out;
}

TrainingSet featurize(const Corpus& corpus, unsigned threads) {
    const std::size_t n = corpus.items.size();
    std::vector<std::optional<features::FeatureVector>> slots(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto& s = corpus.items[i].series;
        try {
            slots[i] = features::extract(s);
        } catch (const Error& e) {
            throw Error(e.code(), s.id() + ": " + e.what());
        }
    });
    TrainingSet data;
    data.digest = corpus.digest;
    for (std::size_t i = 0; i < n; ++i) {
        data.ids.push_back(corpus.items[i].series.id());
        data.features.push_back(std::move(*slots[i]));
        data.specs.push_back(corpus.items[i].spec);
    }
    return data;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                           std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0))
        throw Error(ErrorCode::Config, "train_fraction must lie in (0, 1]");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(mix_seed(seed, 0x5917));
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

gbdt::TreeEnsemble train_component(Component component, const TrainingSet& data, std::span<const std::size_t> rows,
                                   const gbdt::TrainConfig& config) {
    std::vector<int> y;
    y.reserve(rows.size());
    for (auto r : rows) y.push_back(label_of(component, data.specs[r]));
    std::vector<int> distinct = y;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2)
        throw Error(ErrorCode::SingleClass, std::string(name_of(component)) +
                                                " classifier needs at least two classes in the training data");
    try {
        return gbdt::train(matrix_of(data, rows), y, classes_of(component), config);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateData) throw;
        // name the offending series
        for (auto r : rows)
            for (std::size_t f = 0; f < features::kNumFeatures; ++f)
                if (!std::isfinite(data.features[r][f]))
                    throw Error(e.code(), data.ids[r] + ": non-finite feature " + std::string(features::manifest()[f]));
        throw;
    }
}

std::pair<SelectorModel, SplitDiagnostics> train_selector(const TrainingSet& data, const SelectorTrainConfig& config) {
    if (data.features.size() != data.specs.size())
        throw Error(ErrorCode::DimensionMismatch, "features and labels differ in length");
    for (const auto& fv : data.features)
        if (fv.manifest_version != features::kManifestVersion)
            throw Error(ErrorCode::ManifestMismatch, "training features use a different manifest version");
    auto [train_idx, test_idx] = split_indices(data.features.size(), config.train_fraction, config.split_seed);

    auto prepare = [&](gbdt::TrainConfig c) {
        if (config.max_rounds > 0) c.num_boost_round = std::min(c.num_boost_round, config.max_rounds);
        c.threads = config.threads;
        return c;
    };
    SelectorModel model;
    model.corpus_digest = data.digest;
    model.f_e = train_component(Component::Error, data, train_idx, prepare(config.error));
    model.f_t = train_component(Component::Trend, data, train_idx, prepare(config.trend));
    model.f_s = train_component(Component::Season, data, train_idx, prepare(config.season));

    auto score = [&](const std::vector<std::size_t>& rows) {
        ComponentAccuracy acc;
        if (rows.empty()) return acc;
        for (auto r : rows) {
            const auto p = predict_components(model, data.features[r]);
            const auto& s = data.specs[r];
            const bool e = static_cast<int>(argmax(p.p_error)) == error_label(s.error());
            const bool t = static_cast<int>(argmax(p.p_trend)) == trend_label(s.trend());
            const bool z = static_cast<int>(argmax(p.p_season)) == season_label(s.season());
            acc.error += e;
            acc.trend += t;
            acc.season += z;
            acc.whole += e && t && z;
        }
        const double n = static_cast<double>(rows.size());
        acc.error /= n;
        acc.trend /= n;
        acc.season /= n;
        acc.whole /= n;
        return acc;
    };
    SplitDiagnostics diag;
    diag.train_size = train_idx.size();
    diag.test_size = test_idx.size();
    diag.train = score(train_idx);
    diag.test = score(test_idx);
    diag.train_index = std::move(train_idx);
    diag.test_index = std::move(test_idx);
    return {std::move(model), std::move(diag)};
}

} // namespace etsfs::selector
