#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "etsfs/cli/io.hpp"
#include "etsfs/core/error.hpp"

namespace etsfs::cli {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string to_jsonl(const SeriesRecord& r) {
    json j;
    j["id"] = r.series.id();
    j["period"] = r.series.period();
    if (r.spec) j["spec"] = r.spec->code();
    j["values"] = r.series.values();
    if (!r.test.empty()) j["test"] = r.test;
    return j.dump();
}

SeriesRecord parse_series_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed series line: ") + e.what());
    }
    try {
        for (const auto& [key, _] : j.items())
            if (key != "id" && key != "period" && key != "values" && key != "spec" && key != "test")
                throw Error(ErrorCode::InvalidArgument, "unknown series field '" + key + "'");
        const auto id = j.at("id").get<std::string>();
        const int period = j.at("period").get<int>();
        if (period < 1) throw Error(ErrorCode::InvalidArgument, id + ": period must be >= 1");
        SeriesRecord r{TimeSeries(id, period, j.at("values").get<std::vector<double>>()), std::nullopt, {}};
        if (j.contains("spec")) r.spec = ets::EtsSpec::parse(j["spec"].get<std::string>(), period);
        if (j.contains("test")) r.test = j["test"].get<std::vector<double>>();
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad series record: ") + e.what());
    }
}

std::vector<SeriesRecord> read_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<SeriesRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_series_line(line));
        } catch (const Error& e) {
            throw Error(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_series(const std::filesystem::path& path, const std::vector<SeriesRecord>& records) {
    std::string text;
    for (const auto& r : records) text += to_jsonl(r) + "\n";
    write_text(path, text);
}

void write_features(const std::filesystem::path& path, const FeatureTable& table) {
    std::string text = "id";
    for (auto name : features::manifest()) text += "," + std::string(name);
    text += "\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.ids[i].find_first_of(",\"\n") != std::string::npos)
            throw Error(ErrorCode::InvalidArgument, "series id '" + table.ids[i] + "' cannot be written to CSV");
        text += table.ids[i];
        for (double v : table.rows[i].values) text += "," + format_double(v);
        text += "\n";
    }
    write_text(path, text);
}

FeatureTable read_features(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::InvalidArgument, path.string() + ": empty feature file");
    std::string expected = "id";
    for (auto name : features::manifest()) expected += "," + std::string(name);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected) throw Error(ErrorCode::ManifestMismatch, path.string() + ": header differs from the feature manifest");
    FeatureTable t;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream cells(line);
        std::string cell;
        std::getline(cells, cell, ',');
        t.ids.push_back(cell);
        features::FeatureVector fv;
        std::size_t k = 0;
        while (std::getline(cells, cell, ',')) {
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (k >= features::kNumFeatures || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
                throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(lineno) + ": bad feature row");
            fv.values[k++] = v;
        }
        if (k != features::kNumFeatures)
            throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                                        std::to_string(features::kNumFeatures) + " features");
        t.rows.push_back(fv);
    }
    return t;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::vector<std::byte> read_bytes(const std::filesystem::path& path) {
    const auto text = read_text(path);
    std::vector<std::byte> out(text.size());
    std::memcpy(out.data(), text.data(), text.size());
    return out;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::byte>& bytes) {
    write_text(path, std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

} // namespace etsfs::cli
