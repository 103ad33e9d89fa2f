#pragma once

// Pipeline configuration, provenance hashing and artifact file helpers.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cryptodir/dataset.hpp"
#include "cryptodir/error.hpp"
#include "cryptodir/market_data.hpp"

namespace cryptodir {

/// Settings that determine the dataset. Model and strategy settings travel in
/// their own artifacts, each of which records the hash of this config.
struct PipelineConfig {
    std::string symbol = "ETHUSDT";
    std::string interval = "4h";
    std::string input; // candle CSV the dataset was built from
    DatasetConfig dataset;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["symbol"] = symbol;
        j["interval"] = interval;
        j["input"] = input;
        j["threshold"] = dataset.labels.threshold;
        j["horizon_bars"] = dataset.labels.horizon_bars;
        j["window"] = dataset.window;
        j["ratio"] = dataset.ratio;
        return j;
    }

    static PipelineConfig from_json(const nlohmann::json& j) {
        PipelineConfig c;
        try {
            c.symbol = j.at("symbol").get<std::string>();
            c.interval = j.at("interval").get<std::string>();
            c.input = j.at("input").get<std::string>();
            c.dataset.labels.threshold = j.at("threshold").get<double>();
            c.dataset.labels.horizon_bars = j.at("horizon_bars").get<int>();
            c.dataset.window = j.at("window").get<std::size_t>();
            c.dataset.ratio = j.at("ratio").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::BadConfig, std::string("pipeline config: ") + e.what());
        }
        return c;
    }

    std::string hash() const;
};

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string PipelineConfig::hash() const { return fnv1a_hex(to_json().dump()); }

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(Errc::Io, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(Errc::Io, "cannot rename into " + path.string() + ": " + ec.message());
    }
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::ModelFormat, path.string() + ": " + e.what());
    }
}

/// `anchor_ts,label,f0..f{d-1}` with shortest round-trip decimals.
inline std::string samples_to_csv(std::span<const Sample> samples) {
    const auto d = samples.empty() ? kDefaultWindow * kFrameColumns : samples.front().features.size();
    std::string out = "anchor_ts,label";
    for (std::size_t f = 0; f < d; ++f) out += ",f" + std::to_string(f);
    out += '\n';
    for (const auto& s : samples) {
        out += std::to_string(s.anchor_ts);
        out += ',';
        out += std::to_string(s.label);
        for (double v : s.features) {
            out += ',';
            out += detail::format_decimal(v);
        }
        out += '\n';
    }
    return out;
}

inline std::vector<Sample> samples_from_csv(std::string_view text) {
    std::vector<Sample> out;
    std::size_t width = 0;
    detail::for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
        auto line = detail::trim(raw);
        if (line.empty()) return;
        auto fields = detail::split(line, ',');
        if (line_no == 1) {
            if (fields.size() < 3 || fields[0] != "anchor_ts" || fields[1] != "label")
                throw Error(Errc::MalformedRow, "dataset header must start with anchor_ts,label");
            width = fields.size() - 2;
            return;
        }
        const auto where = "dataset line " + std::to_string(line_no);
        if (fields.size() != width + 2) throw Error(Errc::MalformedRow, where + ": wrong field count");
        Sample s;
        std::int64_t label = 0;
        if (!detail::parse_int64(fields[0], s.anchor_ts) || !detail::parse_int64(fields[1], label) ||
            (label != 0 && label != 1))
            throw Error(Errc::MalformedRow, where + ": bad anchor or label");
        s.label = static_cast<int>(label);
        s.features.resize(width);
        for (std::size_t f = 0; f < width; ++f)
            if (!detail::parse_double(fields[f + 2], s.features[f]))
                throw Error(Errc::MalformedRow, where + ": bad feature f" + std::to_string(f));
        out.push_back(std::move(s));
    });
    return out;
}

/// Frame export with the roster as header, prefixed by timestamp.
inline std::string frame_to_csv(const FeatureFrame& frame) {
    std::string out = "timestamp";
    for (auto c : kColumnRoster) {
        out += ',';
        out += c;
    }
    out += '\n';
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out += std::to_string(frame.timestamps()[r]);
        for (double v : frame.row(r)) {
            out += ',';
            out += detail::format_decimal(v);
        }
        out += '\n';
    }
    return out;
}

} // namespace cryptodir
