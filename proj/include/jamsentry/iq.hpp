#pragma once

// IQ domain types, fc16 file I/O with JSON sidecars, dataset-level
// normalization and fixed-length chunking.

#include <jamsentry/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace jamsentry::iq {

/// One complex baseband sample, I in real(), Q in imag().
using IQSample = std::complex<double>;

enum class Label : std::uint8_t { NoJam = 0, Jam = 1 };

inline std::string_view to_string(Label l) { return l == Label::Jam ? "jam" : "nojam"; }

inline Label label_from_string(std::string_view s) {
    if (s == "jam") return Label::Jam;
    if (s == "nojam") return Label::NoJam;
    throw ParameterError("unknown label '" + std::string(s) + "' (expected jam|nojam)");
}

struct FileSource {
    std::filesystem::path path;
};
struct SyntheticSource {
    std::string scenario_id;
};
using Source = std::variant<FileSource, SyntheticSource>;

/// Exact power accounting carried by synthetic recordings so downstream
/// metrics (SNR degradation) need not estimate anything.
struct PowerBook {
    double signal = 0.0;
    double noise = 0.0;
    double jammer = 0.0;

    double snr() const { return signal / (noise + jammer); }
};

struct IQRecording {
    std::vector<IQSample> samples;
    double sample_rate_sps = 5e6;
    Label label = Label::NoJam;
    Source source = SyntheticSource{};
    std::optional<PowerBook> powers;
};

/// Throws if the recording breaks its invariants (empty, non-positive rate,
/// non-finite samples).
inline void validate(const IQRecording& rec) {
    if (rec.samples.empty()) throw EmptyInputError("recording has no samples");
    if (!(rec.sample_rate_sps > 0.0)) throw ParameterError("sample_rate_sps must be > 0");
    for (const auto& s : rec.samples) {
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw DataError("recording contains non-finite samples");
    }
}

struct NormalizationStats {
    double i_max = 1.0;
    double q_max = 1.0;
};

struct IQChunk {
    std::vector<IQSample> samples;
    Label label = Label::NoJam;
    /// Symbol-error rate of the chunk when known from generator bookkeeping.
    std::optional<double> ser;

    std::size_t n() const { return samples.size(); }
};

// ---------------------------------------------------------------------------
// fc16: interleaved little-endian int16, I then Q, scale 1/32768, no header.

inline constexpr double kFc16Scale = 32768.0;

inline std::vector<IQSample> decode_fc16(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw EmptyInputError("fc16 input is empty");
    if (bytes.size() % 4 != 0)
        throw FormatError("fc16 byte length " + std::to_string(bytes.size()) +
                          " is not a multiple of 4");
    auto word = [&](std::size_t at) {
        const auto u = static_cast<std::uint16_t>(bytes[at] | (bytes[at + 1] << 8));
        return static_cast<double>(static_cast<std::int16_t>(u)) / kFc16Scale;
    };
    std::vector<IQSample> out;
    out.reserve(bytes.size() / 4);
    for (std::size_t at = 0; at < bytes.size(); at += 4) out.emplace_back(word(at), word(at + 2));
    return out;
}

/// Saturating conversion to int16; values outside [-1, 1 - 2^-15] clip.
inline std::int16_t to_fc16_word(double v) {
    if (!std::isfinite(v)) throw ParameterError("cannot encode non-finite sample");
    const double scaled = std::round(v * kFc16Scale);
    return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

inline std::vector<std::uint8_t> encode_fc16(std::span<const IQSample> samples) {
    std::vector<std::uint8_t> out;
    out.reserve(samples.size() * 4);
    auto put = [&](double v) {
        const auto u = static_cast<std::uint16_t>(to_fc16_word(v));
        out.push_back(static_cast<std::uint8_t>(u & 0xFF));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
    };
    for (const auto& s : samples) {
        put(s.real());
        put(s.imag());
    }
    return out;
}

struct RecordingMeta {
    double sample_rate_sps = 5e6;
    Label label = Label::NoJam;
    std::string scenario;
    /// Physical value of an int16 full-scale code; decoded samples are scaled by it.
    double full_scale = 1.0;
};

/// `capture.fc16` -> `capture.meta.json`
inline std::filesystem::path sidecar_path(const std::filesystem::path& fc16) {
    auto p = fc16;
    p.replace_extension(".meta.json");
    return p;
}

inline void write_sidecar(const std::filesystem::path& fc16, const RecordingMeta& meta) {
    nlohmann::json j;
    j["sample_rate_sps"] = static_cast<std::int64_t>(std::llround(meta.sample_rate_sps));
    j["label"] = std::string(to_string(meta.label));
    if (!meta.scenario.empty()) j["scenario"] = meta.scenario;
    if (meta.full_scale != 1.0) j["full_scale"] = meta.full_scale;
    std::ofstream os(sidecar_path(fc16));
    if (!os) throw IoError("cannot write sidecar for " + fc16.string());
    os << j.dump(2) << '\n';
}

inline std::optional<RecordingMeta> read_sidecar(const std::filesystem::path& fc16) {
    const auto path = sidecar_path(fc16);
    std::ifstream is(path);
    if (!is) return std::nullopt;
    RecordingMeta meta;
    try {
        const auto j = nlohmann::json::parse(is);
        meta.sample_rate_sps = static_cast<double>(j.at("sample_rate_sps").get<std::int64_t>());
        meta.label = label_from_string(j.at("label").get<std::string>());
        if (j.contains("scenario")) meta.scenario = j.at("scenario").get<std::string>();
        if (j.contains("full_scale")) meta.full_scale = j.at("full_scale").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad sidecar " + path.string() + ": " + e.what());
    }
    if (!(meta.sample_rate_sps > 0.0)) throw FormatError("sidecar sample_rate_sps must be > 0");
    if (!(meta.full_scale > 0.0) || !std::isfinite(meta.full_scale)) throw FormatError("sidecar full_scale must be > 0");
    return meta;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write to " + path.string());
}

/// Reads an fc16 capture. Metadata comes from `meta` when given, otherwise
/// from the sidecar, otherwise defaults (5 Msps, NoJam).
inline IQRecording read_fc16(const std::filesystem::path& path,
                             std::optional<RecordingMeta> meta = std::nullopt) {
    IQRecording rec;
    rec.samples = decode_fc16(read_bytes(path));
    const auto m = meta ? meta : read_sidecar(path);
    if (m) {
        rec.sample_rate_sps = m->sample_rate_sps;
        rec.label = m->label;
        if (m->full_scale != 1.0)
            for (auto& x : rec.samples) x *= m->full_scale;
    }
    rec.source = FileSource{path};
    return rec;
}

/// Writes samples / full_scale as fc16 (values beyond full scale saturate).
inline void write_fc16(const IQRecording& rec, const std::filesystem::path& path, double full_scale = 1.0) {
    if (!(full_scale > 0.0)) throw ParameterError("full_scale must be > 0");
    if (full_scale == 1.0) return write_bytes(path, encode_fc16(rec.samples));
    std::vector<IQSample> scaled(rec.samples);
    for (auto& x : scaled) x /= full_scale;
    write_bytes(path, encode_fc16(scaled));
}

// ---------------------------------------------------------------------------
// Normalization

namespace detail {
inline void accumulate_max(std::span<const IQSample> s, double& i_max, double& q_max) {
    for (const auto& x : s) {
        i_max = std::max(i_max, std::abs(x.real()));
        q_max = std::max(q_max, std::abs(x.imag()));
    }
}

inline NormalizationStats finish(double i_max, double q_max, bool any) {
    if (!any) throw EmptyInputError("no samples to normalize over");
    if (!(i_max > 0.0) || !(q_max > 0.0))
        throw DataError("degenerate normalization: I or Q component is identically zero");
    return {i_max, q_max};
}
}  // namespace detail

/// Max of |I| and |Q| over every sample of every recording.
inline NormalizationStats compute_normalization(std::span<const IQRecording> recs) {
    double i_max = 0.0, q_max = 0.0;
    bool any = false;
    for (const auto& r : recs) {
        any = any || !r.samples.empty();
        detail::accumulate_max(r.samples, i_max, q_max);
    }
    return detail::finish(i_max, q_max, any);
}

inline NormalizationStats compute_normalization(std::span<const IQChunk> chunks) {
    double i_max = 0.0, q_max = 0.0;
    bool any = false;
    for (const auto& c : chunks) {
        any = any || !c.samples.empty();
        detail::accumulate_max(c.samples, i_max, q_max);
    }
    return detail::finish(i_max, q_max, any);
}

inline void normalize_in_place(std::span<IQSample> samples, const NormalizationStats& stats) {
    if (!(stats.i_max > 0.0) || !(stats.q_max > 0.0))
        throw ParameterError("normalization stats must be positive");
    for (auto& s : samples) s = {s.real() / stats.i_max, s.imag() / stats.q_max};
}

inline IQRecording normalize(IQRecording rec, const NormalizationStats& stats) {
    normalize_in_place(rec.samples, stats);
    return rec;
}

inline IQChunk normalize(IQChunk c, const NormalizationStats& stats) {
    normalize_in_place(c.samples, stats);
    return c;
}

// ---------------------------------------------------------------------------
// Chunking

/// floor(len / n) consecutive windows; the trailing remainder is dropped.
inline std::vector<IQChunk> chunk(const IQRecording& rec, std::size_t n) {
    if (n == 0) throw ParameterError("samples per chunk must be > 0");
    const std::size_t count = rec.samples.size() / n;
    std::vector<IQChunk> out;
    out.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
        const auto first = rec.samples.begin() + static_cast<std::ptrdiff_t>(c * n);
        out.push_back(IQChunk{{first, first + static_cast<std::ptrdiff_t>(n)}, rec.label, {}});
    }
    return out;
}

/// Seconds of signal one chunk of n samples covers at the given rate.
inline double chunk_duration_s(std::size_t n, double sample_rate_sps) {
    return static_cast<double>(n) / sample_rate_sps;
}

}  // namespace jamsentry::iq
