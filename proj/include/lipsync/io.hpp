#ifndef LIPSYNC_IO_HPP
#define LIPSYNC_IO_HPP

// Bit-exact readers and writers for the on-disk formats:
//
//   MSH1  mesh container: "MSH1", u32 T, u32 V, f32 fps, then T*V*3 f32
//         positions, frame-major then vertex-major then (x, y, z).
//   EMB1  embedding container: "EMB1", u32 |L|, |L| x u32 layer ids, u32 G,
//         u32 H, speech block |L|*G*H f32, mesh block same.
//   WAV   RIFF/WAVE, PCM 16-bit or IEEE-float 32-bit, mono only.
//
// All integers and reals are little-endian. Readers validate sizes against
// the actual file length before allocating, so truncated files fail with
// TruncationError instead of partially succeeding.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lipsync/core.hpp"
#include "lipsync/errors.hpp"

namespace lipsync::io {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
        throw IoError("cannot read " + path.string());
    }
    return bytes;
}

// Writes to a sibling temp file and renames into place, so a failed run
// never leaves a half-written output.
inline void write_file_atomic(const std::filesystem::path& path, const void* data,
                              std::size_t size) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        if (size > 0) out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw IoError("cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename " + tmp.string() + " to " + path.string());
    }
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, text.data(), text.size());
}

// Little-endian cursor over a byte buffer.
class Cursor {
public:
    Cursor(const std::vector<std::uint8_t>& bytes, std::string source)
        : bytes_(bytes), source_(std::move(source)) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint32_t read_u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint16_t read_u16() {
        need(2);
        const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    float read_f32() { return std::bit_cast<float>(read_u32()); }

    void read_magic(const char (&magic)[5]) {
        need(4);
        if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0) {
            throw FormatError(source_ + ": expected magic \"" + magic + "\"");
        }
        pos_ += 4;
    }

    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }

    void need(std::size_t n) const {
        if (remaining() < n) {
            throw TruncationError(source_ + ": truncated (need " + std::to_string(n) +
                                  " bytes, have " + std::to_string(remaining()) + ")");
        }
    }

    std::size_t pos() const { return pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

inline void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline void append_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

inline void append_f32(std::vector<std::uint8_t>& out, float v) {
    append_u32(out, std::bit_cast<std::uint32_t>(v));
}

using lipsync::detail::format_real;

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

} // namespace detail

// ---------------------------------------------------------------- MSH1 ----

inline MeshSequence read_mesh(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    detail::Cursor cur(bytes, path.string());
    cur.read_magic("MSH1");
    const std::uint32_t frames = cur.read_u32();
    const std::uint32_t vertices = cur.read_u32();
    const float fps = cur.read_f32();
    const std::uint64_t count = std::uint64_t{frames} * vertices * 3;
    cur.need(count * 4);
    std::vector<double> positions;
    positions.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const float v = cur.read_f32();
        if (!std::isfinite(v)) {
            throw DataError(path.string() + ": non-finite position at element " +
                            std::to_string(i));
        }
        positions.push_back(static_cast<double>(v));
    }
    try {
        return MeshSequence(frames, vertices, std::move(positions), static_cast<double>(fps));
    } catch (const InvariantError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void write_mesh(const MeshSequence& seq, const std::filesystem::path& path) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + seq.positions().size() * 4);
    out.insert(out.end(), {'M', 'S', 'H', '1'});
    detail::append_u32(out, static_cast<std::uint32_t>(seq.frames()));
    detail::append_u32(out, static_cast<std::uint32_t>(seq.vertex_count()));
    detail::append_f32(out, static_cast<float>(seq.fps()));
    for (double v : seq.positions()) detail::append_f32(out, static_cast<float>(v));
    detail::write_file_atomic(path, out.data(), out.size());
}

// ---------------------------------------------------------------- EMB1 ----

inline EmbeddingSet read_embeddings(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    detail::Cursor cur(bytes, path.string());
    cur.read_magic("EMB1");
    const std::uint32_t layer_count = cur.read_u32();
    if (layer_count == 0) throw FormatError(path.string() + ": zero layers");
    std::vector<std::uint32_t> layer_ids(layer_count);
    for (auto& id : layer_ids) id = cur.read_u32();
    const std::uint32_t windows = cur.read_u32();
    const std::uint32_t dim = cur.read_u32();
    const std::uint64_t block = std::uint64_t{layer_count} * windows * dim;
    cur.need(block * 8);

    auto read_block = [&](const char* name) {
        std::vector<double> data;
        data.reserve(block);
        for (std::uint64_t i = 0; i < block; ++i) {
            const float v = cur.read_f32();
            if (!std::isfinite(v)) {
                throw DataError(path.string() + ": non-finite " + name + " value at element " +
                                std::to_string(i));
            }
            data.push_back(static_cast<double>(v));
        }
        return data;
    };
    std::vector<double> speech = read_block("speech");
    std::vector<double> mesh = read_block("mesh");

    try {
        return EmbeddingSet(std::move(layer_ids), windows, dim, std::move(speech),
                            std::move(mesh));
    } catch (const InvariantError& e) {
        // Zero-norm vectors in a file are a data problem, not a caller bug.
        throw DataError(path.string() + ": " + e.what());
    }
}

inline void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'E', 'M', 'B', '1'});
    detail::append_u32(out, static_cast<std::uint32_t>(set.layer_ids().size()));
    for (std::uint32_t id : set.layer_ids()) detail::append_u32(out, id);
    detail::append_u32(out, static_cast<std::uint32_t>(set.windows()));
    detail::append_u32(out, static_cast<std::uint32_t>(set.dim()));
    for (double v : set.speech_data()) detail::append_f32(out, static_cast<float>(v));
    for (double v : set.mesh_data()) detail::append_f32(out, static_cast<float>(v));
    detail::write_file_atomic(path, out.data(), out.size());
}

// ----------------------------------------------------------------- WAV ----

inline int read_wav_rate(const std::vector<std::uint8_t>& bytes,
                         const std::filesystem::path& path);

inline AudioClip read_wav(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    detail::Cursor cur(bytes, path.string());
    cur.read_magic("RIFF");
    cur.read_u32(); // declared RIFF size; the actual buffer bounds govern
    cur.read_magic("WAVE");

    std::uint16_t format = 0, channels = 0, bits = 0;
    bool have_fmt = false;

    while (cur.remaining() >= 8) {
        char chunk_id[5] = {0};
        for (int i = 0; i < 4; ++i) {
            chunk_id[i] = static_cast<char>(bytes[cur.pos()]);
            cur.skip(1);
        }
        const std::uint32_t chunk_size = cur.read_u32();
        if (std::memcmp(chunk_id, "fmt ", 4) == 0) {
            cur.need(chunk_size);
            if (chunk_size < 16) throw FormatError(path.string() + ": fmt chunk too small");
            const std::size_t base = cur.pos();
            format = static_cast<std::uint16_t>(bytes[base] | (bytes[base + 1] << 8));
            channels = static_cast<std::uint16_t>(bytes[base + 2] | (bytes[base + 3] << 8));
            bits = static_cast<std::uint16_t>(bytes[base + 14] | (bytes[base + 15] << 8));
            cur.skip(chunk_size);
            if ((chunk_size & 1) && cur.remaining() > 0) cur.skip(1);
            have_fmt = true;
        } else if (std::memcmp(chunk_id, "data", 4) == 0) {
            if (!have_fmt) throw FormatError(path.string() + ": data chunk before fmt chunk");
            if (channels != 1) {
                throw FormatError(path.string() + ": only mono supported, got " +
                                  std::to_string(channels) + " channels");
            }
            if (cur.remaining() < chunk_size) {
                throw TruncationError(path.string() + ": data chunk truncated");
            }
            std::vector<double> samples;
            if (format == 1 && bits == 16) {
                const std::size_t count = chunk_size / 2;
                samples.reserve(count);
                for (std::size_t i = 0; i < count; ++i) {
                    const auto u = cur.read_u16();
                    const auto s = static_cast<std::int16_t>(u);
                    samples.push_back(static_cast<double>(s) / 32768.0);
                }
            } else if (format == 3 && bits == 32) {
                const std::size_t count = chunk_size / 4;
                samples.reserve(count);
                for (std::size_t i = 0; i < count; ++i) {
                    const float v = cur.read_f32();
                    if (!std::isfinite(v)) {
                        throw DataError(path.string() + ": non-finite sample");
                    }
                    samples.push_back(static_cast<double>(v));
                }
            } else {
                throw FormatError(path.string() + ": unsupported codec (format " +
                                  std::to_string(format) + ", " + std::to_string(bits) + " bit)");
            }
            if (samples.empty()) {
                throw DataError(path.string() + ": data chunk holds no samples");
            }
            return AudioClip(std::move(samples), read_wav_rate(bytes, path));
        } else {
            if (cur.remaining() < chunk_size) {
                throw TruncationError(path.string() + ": chunk \"" + chunk_id + "\" truncated");
            }
            cur.skip(chunk_size);
            if ((chunk_size & 1) && cur.remaining() > 0) cur.skip(1);
        }
    }
    throw FormatError(path.string() + ": no data chunk");
}

// Sample rate from the fmt chunk: format(2), channels(2), rate(4), ...

inline int read_wav_rate(const std::vector<std::uint8_t>& bytes,
                         const std::filesystem::path& path) {
    // Locate the fmt chunk again and pull bytes 4..7 (sample rate).
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t size = static_cast<std::uint32_t>(
            bytes[pos + 4] | (bytes[pos + 5] << 8) | (bytes[pos + 6] << 16) |
            (bytes[pos + 7] << 24));
        if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
            const std::size_t base = pos + 8;
            return static_cast<int>(bytes[base + 4] | (bytes[base + 5] << 8) |
                                    (bytes[base + 6] << 16) |
                                    (static_cast<std::uint32_t>(bytes[base + 7]) << 24));
        }
        pos += 8 + size + (size & 1);
    }
    throw FormatError(path.string() + ": no fmt chunk");
}

// 16-bit PCM. Samples are clamped to [-1, 1] and rounded to the nearest
// quantization step, so a read-back differs by at most 2^-15.
inline void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
    const std::uint32_t data_size = static_cast<std::uint32_t>(clip.samples().size() * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::append_u32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    detail::append_u32(out, 16);
    detail::append_u16(out, 1); // PCM
    detail::append_u16(out, 1); // mono
    detail::append_u32(out, static_cast<std::uint32_t>(clip.sample_rate()));
    detail::append_u32(out, static_cast<std::uint32_t>(clip.sample_rate()) * 2);
    detail::append_u16(out, 2);  // block align
    detail::append_u16(out, 16); // bits
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::append_u32(out, data_size);
    for (double x : clip.samples()) {
        const double clamped = std::clamp(x, -1.0, 1.0);
        const long q = std::lround(clamped * 32768.0);
        const auto s = static_cast<std::int16_t>(std::clamp<long>(q, -32768, 32767));
        detail::append_u16(out, static_cast<std::uint16_t>(s));
    }
    detail::write_file_atomic(path, out.data(), out.size());
}

// ------------------------------------------------------------- manifest ----

struct Manifest {
    int version = 1;
    std::optional<LandmarkSpec> default_landmarks;
    std::vector<ClipRecord> clips;
};

namespace detail {

inline LandmarkSpec parse_landmarks(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("upper_lip_center") || !j.contains("lower_lip_center") ||
        !j.contains("lip_region")) {
        throw SchemaError(where + ": landmarks need upper_lip_center, lower_lip_center, "
                                  "lip_region");
    }
    std::vector<std::uint32_t> region;
    for (const auto& v : j.at("lip_region")) region.push_back(v.get<std::uint32_t>());
    std::optional<std::uint32_t> left, right;
    if (j.contains("left_eye")) left = j.at("left_eye").get<std::uint32_t>();
    if (j.contains("right_eye")) right = j.at("right_eye").get<std::uint32_t>();
    try {
        return LandmarkSpec(j.at("upper_lip_center").get<std::uint32_t>(),
                            j.at("lower_lip_center").get<std::uint32_t>(), std::move(region),
                            left, right);
    } catch (const InvariantError& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

} // namespace detail

// Parses a manifest, resolves per-clip landmarks against the default set,
// resolves asset paths against the manifest's directory, and verifies that
// every referenced file exists.
inline Manifest read_manifest(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }

    if (!doc.is_object() || !doc.contains("version") || !doc.contains("clips")) {
        throw SchemaError(path.string() + ": manifest needs version and clips");
    }
    const int version = doc.at("version").get<int>();
    if (version != 1) {
        throw SchemaError(path.string() + ": unsupported manifest version " +
                          std::to_string(version));
    }

    Manifest manifest;
    manifest.version = version;
    if (doc.contains("default_landmarks")) {
        manifest.default_landmarks =
            detail::parse_landmarks(doc.at("default_landmarks"), path.string());
    }

    const std::filesystem::path base = path.parent_path();
    auto resolve = [&base](const std::string& rel) {
        const std::filesystem::path p(rel);
        return (p.is_absolute() ? p : base / p).string();
    };

    std::map<std::string, bool> seen;
    for (const auto& cj : doc.at("clips")) {
        if (!cj.contains("clip_id") || !cj.contains("identity") || !cj.contains("mesh")) {
            throw SchemaError(path.string() + ": clip needs clip_id, identity, mesh");
        }
        const std::string clip_id = cj.at("clip_id").get<std::string>();
        if (seen.count(clip_id)) {
            throw SchemaError(path.string() + ": duplicate clip_id \"" + clip_id + "\"");
        }
        seen[clip_id] = true;

        std::optional<IntensityLevel> level;
        if (cj.contains("intensity_level")) {
            const std::string s = cj.at("intensity_level").get<std::string>();
            level = intensity_level_from_string(s);
            if (!level) {
                throw SchemaError(path.string() + ": clip \"" + clip_id +
                                  "\": unknown intensity_level \"" + s + "\"");
            }
        }

        std::optional<LandmarkSpec> landmarks;
        if (cj.contains("landmarks")) {
            landmarks = detail::parse_landmarks(cj.at("landmarks"),
                                                path.string() + " clip \"" + clip_id + "\"");
        } else if (manifest.default_landmarks) {
            landmarks = manifest.default_landmarks;
        } else {
            throw SchemaError(path.string() + ": clip \"" + clip_id +
                              "\" has no landmarks and the manifest has no default_landmarks");
        }

        const std::string mesh_path = resolve(cj.at("mesh").get<std::string>());
        std::string audio_path, embedding_path;
        if (cj.contains("audio")) audio_path = resolve(cj.at("audio").get<std::string>());
        if (cj.contains("embeddings")) {
            embedding_path = resolve(cj.at("embeddings").get<std::string>());
        }

        for (const std::string& asset : {mesh_path, audio_path, embedding_path}) {
            if (!asset.empty() && !std::filesystem::exists(asset)) {
                throw MissingAssetError("clip \"" + clip_id + "\": missing asset " + asset);
            }
        }

        manifest.clips.emplace_back(clip_id, cj.at("identity").get<std::string>(), level,
                                    mesh_path, audio_path, embedding_path, *landmarks);
    }
    return manifest;
}

// -------------------------------------------------------------- reports ----

enum class ReportFormat { json, csv };

// JSON document with keys {metric, unit, aggregate, clip_count, parameters,
// per_clip}; reals carry 17 significant digits so parsing them back is
// lossless.
inline std::string render_report_json(const MetricReport& report) {
    std::string out = "{\n";
    out += "  \"metric\": \"" + detail::json_escape(report.metric_name()) + "\",\n";
    out += "  \"unit\": \"" + detail::json_escape(report.unit()) + "\",\n";
    out += "  \"aggregate\": " + detail::format_real(report.aggregate()) + ",\n";
    out += "  \"clip_count\": " + std::to_string(report.clip_count()) + ",\n";
    out += "  \"parameters\": {";
    bool first = true;
    for (const auto& [k, v] : report.parameters()) {
        out += first ? "\n" : ",\n";
        out += "    \"" + detail::json_escape(k) + "\": \"" + detail::json_escape(v) + "\"";
        first = false;
    }
    out += first ? "},\n" : "\n  },\n";
    out += "  \"per_clip\": {";
    first = true;
    for (const auto& [id, values] : report.per_clip()) {
        out += first ? "\n" : ",\n";
        out += "    \"" + detail::json_escape(id) + "\": ";
        if (values.size() == 1) {
            out += detail::format_real(values[0]);
        } else {
            out += "[";
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (i) out += ", ";
                out += detail::format_real(values[i]);
            }
            out += "]";
        }
        first = false;
    }
    out += first ? "}\n" : "\n  }\n";
    out += "}";
    return out;
}

// "clip_id,value" rows (or "clip_id,si,li" when clips carry pairs) followed
// by a trailing AGGREGATE row.
inline std::string render_report_csv(const MetricReport& report) {
    const bool pairs = report.aggregation() == Aggregation::pearson;
    std::string out = pairs ? "clip_id,si,li" : "clip_id,value";
    for (const auto& [id, values] : report.per_clip()) {
        out += "\n" + detail::csv_field(id);
        for (double v : values) out += "," + detail::format_real(v);
    }
    out += "\nAGGREGATE," + detail::format_real(report.aggregate());
    return out;
}

inline void write_report(const MetricReport& report, const std::filesystem::path& path,
                         ReportFormat format) {
    if (report.per_clip().empty()) {
        throw SchemaError("report \"" + report.metric_name() + "\" covers no clips");
    }
    const std::string text = format == ReportFormat::json ? render_report_json(report)
                                                          : render_report_csv(report);
    detail::write_file_atomic(path, text);
}

} // namespace lipsync::io

#endif
