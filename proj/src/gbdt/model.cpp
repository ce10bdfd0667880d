#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "etsfs/core/binary.hpp"
#include "etsfs/core/digest.hpp"
#include "etsfs/core/error.hpp"
#include "etsfs/gbdt/gbdt.hpp"

namespace etsfs::gbdt {

namespace {
constexpr char kMagic[4] = {'F', 'G', 'B', 'T'};
}

double Tree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const Node& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

std::size_t Tree::num_leaves() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::vector<double> TreeEnsemble::raw_scores(std::span<const double> x) const {
    if (x.size() != n_features())
        throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(n_features()) + " features, got " +
                                                      std::to_string(x.size()));
    std::vector<double> s = base_score;
    for (const Tree& t : trees) s[static_cast<std::size_t>(t.class_index)] += t.predict(x);
    return s;
}

std::vector<double> TreeEnsemble::predict_proba(std::span<const double> x) const {
    auto s = raw_scores(x);
    double m = -std::numeric_limits<double>::infinity();
    for (double v : s) m = std::max(m, v);
    double z = 0.0;
    for (double& v : s) {
        v = v == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(v - m);
        z += v;
    }
    for (double& v : s) v /= z;
    return s;
}

std::size_t TreeEnsemble::predict_class(std::span<const double> x) const {
    const auto p = predict_proba(x);
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<std::pair<std::string, double>> TreeEnsemble::feature_gain() const {
    std::vector<std::size_t> order(n_features());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gain_by_feature[a] > gain_by_feature[b]; });
    std::vector<std::pair<std::string, double>> out;
    out.reserve(order.size());
    for (std::size_t i : order) out.emplace_back(feature_names[i], gain_by_feature[i]);
    return out;
}

std::vector<std::byte> TreeEnsemble::save() const {
    ByteWriter p;
    const auto& c = config;
    p.f64(c.eta);
    p.i32(c.num_leaves);
    p.i32(c.min_data_in_leaf);
    p.i32(c.max_bin);
    p.i32(c.num_boost_round);
    p.f64(c.bagging_fraction);
    p.i32(c.bagging_freq);
    p.f64(c.feature_fraction);
    p.u64(c.seed);
    p.f64(c.lambda);
    p.f64(c.min_gain);
    p.f64(c.min_sum_hessian);

    p.u32(static_cast<std::uint32_t>(class_labels.size()));
    for (const auto& s : class_labels) p.str(s);
    for (double v : base_score) p.f64(v);
    p.u32(static_cast<std::uint32_t>(feature_names.size()));
    for (const auto& s : feature_names) p.str(s);
    for (const auto& e : bin_edges) {
        p.u32(static_cast<std::uint32_t>(e.size()));
        for (double v : e) p.f64(v);
    }
    for (double v : gain_by_feature) p.f64(v);
    p.u32(static_cast<std::uint32_t>(trees.size()));
    for (const Tree& t : trees) {
        p.i32(t.class_index);
        p.u32(static_cast<std::uint32_t>(t.nodes.size()));
        for (const Node& n : t.nodes) {
            p.i32(n.feature);
            p.f64(n.threshold);
            p.i32(n.left);
            p.i32(n.right);
            p.f64(n.value);
            p.f64(n.gain);
            p.u32(n.count);
        }
    }

    const auto payload = p.take();
    ByteWriter out;
    for (char ch : kMagic) out.u8(static_cast<std::uint8_t>(ch));
    out.u32(kFormatVersion);
    out.u64(payload.size());
    out.bytes(payload);
    out.u32(crc32(payload));
    return out.take();
}

TreeEnsemble TreeEnsemble::load(std::span<const std::byte> bytes) {
    ByteReader head(bytes);
    for (char ch : kMagic)
        if (head.u8() != static_cast<std::uint8_t>(ch)) throw Error(ErrorCode::CorruptArtifact, "bad magic");
    const std::uint32_t version = head.u32();
    if (version > kFormatVersion)
        throw Error(ErrorCode::VersionMismatch, "model format version " + std::to_string(version) +
                                                    " is newer than supported version " +
                                                    std::to_string(kFormatVersion));
    if (version == 0) throw Error(ErrorCode::CorruptArtifact, "invalid format version 0");
    const std::uint64_t len = head.u64();
    if (len > head.remaining()) throw Error(ErrorCode::CorruptArtifact, "payload truncated");
    const auto payload = head.bytes(static_cast<std::size_t>(len));
    if (head.remaining() != 4) throw Error(ErrorCode::CorruptArtifact, "trailing bytes or missing checksum");
    if (head.u32() != crc32(payload)) throw Error(ErrorCode::CorruptArtifact, "checksum mismatch");

    ByteReader p(payload);
    TreeEnsemble m;
    auto& c = m.config;
    c.eta = p.f64();
    c.num_leaves = p.i32();
    c.min_data_in_leaf = p.i32();
    c.max_bin = p.i32();
    c.num_boost_round = p.i32();
    c.bagging_fraction = p.f64();
    c.bagging_freq = p.i32();
    c.feature_fraction = p.f64();
    c.seed = p.u64();
    c.lambda = p.f64();
    c.min_gain = p.f64();
    c.min_sum_hessian = p.f64();

    const std::size_t k = p.count(4);
    for (std::size_t i = 0; i < k; ++i) m.class_labels.push_back(p.str());
    for (std::size_t i = 0; i < k; ++i) m.base_score.push_back(p.f64());
    const std::size_t nf = p.count(4);
    for (std::size_t i = 0; i < nf; ++i) m.feature_names.push_back(p.str());
    m.bin_edges.resize(nf);
    for (auto& e : m.bin_edges) {
        e.resize(p.count(8));
        for (double& v : e) v = p.f64();
    }
    m.gain_by_feature.resize(nf);
    for (double& v : m.gain_by_feature) v = p.f64();
    const std::size_t nt = p.count(8);
    m.trees.resize(nt);
    for (Tree& t : m.trees) {
        t.class_index = p.i32();
        if (t.class_index < 0 || static_cast<std::size_t>(t.class_index) >= k)
            throw Error(ErrorCode::CorruptArtifact, "tree class index out of range");
        t.nodes.resize(p.count(40));
        for (Node& n : t.nodes) {
            n.feature = p.i32();
            n.threshold = p.f64();
            n.left = p.i32();
            n.right = p.i32();
            n.value = p.f64();
            n.gain = p.f64();
            n.count = p.u32();
        }
        // children must point forward so prediction always terminates
        const auto size = static_cast<std::int32_t>(t.nodes.size());
        if (size == 0) throw Error(ErrorCode::CorruptArtifact, "empty tree");
        for (std::int32_t i = 0; i < size; ++i) {
            const Node& n = t.nodes[static_cast<std::size_t>(i)];
            if (n.is_leaf()) continue;
            if (static_cast<std::size_t>(n.feature) >= nf || n.left <= i || n.right <= i || n.left >= size ||
                n.right >= size)
                throw Error(ErrorCode::CorruptArtifact, "malformed tree node");
        }
    }
    if (p.remaining() != 0) throw Error(ErrorCode::CorruptArtifact, "unexpected bytes after trees");
    return m;
}

std::string TreeEnsemble::to_json() const {
    using nlohmann::json;
    json j;
    j["format_version"] = kFormatVersion;
    j["class_labels"] = class_labels;
    j["feature_names"] = feature_names;
    json base = json::array();
    for (double v : base_score) base.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    j["base_score"] = base;
    j["config"] = {{"eta", config.eta},
                   {"num_leaves", config.num_leaves},
                   {"min_data_in_leaf", config.min_data_in_leaf},
                   {"max_bin", config.max_bin},
                   {"num_boost_round", config.num_boost_round},
                   {"bagging_fraction", config.bagging_fraction},
                   {"bagging_freq", config.bagging_freq},
                   {"feature_fraction", config.feature_fraction},
                   {"seed", config.seed},
                   {"lambda", config.lambda}};
    j["gain_by_feature"] = gain_by_feature;
    json trees_json = json::array();
    for (const Tree& t : trees) {
        json nodes = json::array();
        for (const Node& n : t.nodes) {
            if (n.is_leaf())
                nodes.push_back({{"leaf", n.value}, {"count", n.count}});
            else
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"gain", n.gain}});
        }
        trees_json.push_back({{"class", t.class_index}, {"nodes", nodes}});
    }
    j["trees"] = trees_json;
    return j.dump(1);
}

} // namespace etsfs::gbdt
