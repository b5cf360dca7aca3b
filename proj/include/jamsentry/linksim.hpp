#pragma once

// Desk-scale OFDM link under weak jamming: Gray-coded constellations, a
// simplified OFDM baseband (no scrambler/FEC/pilots/preamble), AWGN and
// deceptive jammers, power-controlled mixing, and labeled dataset generation.

#include <jamsentry/error.hpp>
#include <jamsentry/iq.hpp>
#include <jamsentry/kvconfig.hpp>
#include <jamsentry/rng.hpp>

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jamsentry::linksim {

using iq::IQRecording;
using iq::IQSample;
using Bits = std::vector<std::uint8_t>;

inline constexpr double kLinkSampleRate = 5e6;

enum class ModScheme { BPSK, QPSK, QAM16, QAM64 };

inline constexpr std::array kAllSchemes{ModScheme::BPSK, ModScheme::QPSK, ModScheme::QAM16,
                                        ModScheme::QAM64};

constexpr int bits_per_symbol(ModScheme s) {
    switch (s) {
        case ModScheme::BPSK: return 1;
        case ModScheme::QPSK: return 2;
        case ModScheme::QAM16: return 4;
        case ModScheme::QAM64: return 6;
    }
    return 0;
}

inline std::string_view to_string(ModScheme s) {
    switch (s) {
        case ModScheme::BPSK: return "bpsk";
        case ModScheme::QPSK: return "qpsk";
        case ModScheme::QAM16: return "qam16";
        case ModScheme::QAM64: return "qam64";
    }
    return "?";
}

inline ModScheme scheme_from_string(std::string_view s) {
    for (auto m : kAllSchemes)
        if (to_string(m) == s) return m;
    if (s == "16qam" || s == "16-qam") return ModScheme::QAM16;
    if (s == "64qam" || s == "64-qam") return ModScheme::QAM64;
    throw ParameterError("unknown modulation scheme '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Constellations

namespace detail {

/// Gray-coded PAM levels for `bits` bits per axis, indexed by the bit label
/// read MSB first. 1 bit: {-1,+1}; 2 bits: 00,01,11,10 -> -3,-1,+1,+3; ...
inline std::vector<double> gray_pam(int bits) {
    const int m = 1 << bits;
    std::vector<double> level(static_cast<std::size_t>(m));
    for (int pos = 0; pos < m; ++pos) {
        const int label = pos ^ (pos >> 1);
        level[static_cast<std::size_t>(label)] = 2.0 * pos - (m - 1);
    }
    return level;
}

/// Position (0..m-1, ascending amplitude) nearest to `v` on an unscaled PAM grid.
inline int pam_slice(double v, int m) {
    const double pos = std::round((v + (m - 1)) / 2.0);
    return static_cast<int>(std::clamp(pos, 0.0, static_cast<double>(m - 1)));
}

}  // namespace detail

/// Constellation points indexed by the symbol's bit label (MSB first). The
/// first half of the bits selects I, the second half Q; BPSK maps 0 -> -1,
/// 1 -> +1. Every point set has unit average energy.
inline std::vector<IQSample> constellation(ModScheme s) {
    if (s == ModScheme::BPSK) return {{-1.0, 0.0}, {1.0, 0.0}};
    const int half = bits_per_symbol(s) / 2;
    const auto pam = detail::gray_pam(half);
    const int m = 1 << half;
    const double norm = std::sqrt(2.0 * (m * m - 1) / 3.0);
    std::vector<IQSample> pts(static_cast<std::size_t>(m * m));
    for (int hi = 0; hi < m; ++hi)
        for (int lo = 0; lo < m; ++lo)
            pts[static_cast<std::size_t>((hi << half) | lo)] = {pam[hi] / norm, pam[lo] / norm};
    return pts;
}

/// Nearest-constellation-point decision; returns the bit label.
class Slicer {
public:
    explicit Slicer(ModScheme s) : scheme_(s) {
        if (s != ModScheme::BPSK) {
            half_ = bits_per_symbol(s) / 2;
            m_ = 1 << half_;
            norm_ = std::sqrt(2.0 * (m_ * m_ - 1) / 3.0);
            for (int pos = 0; pos < m_; ++pos) pos_to_label_.push_back(pos ^ (pos >> 1));
        }
    }

    unsigned operator()(IQSample y) const {
        if (scheme_ == ModScheme::BPSK) return y.real() >= 0.0 ? 1u : 0u;
        const int hi = pos_to_label_[static_cast<std::size_t>(detail::pam_slice(y.real() * norm_, m_))];
        const int lo = pos_to_label_[static_cast<std::size_t>(detail::pam_slice(y.imag() * norm_, m_))];
        return static_cast<unsigned>((hi << half_) | lo);
    }

private:
    ModScheme scheme_;
    int half_ = 0;
    int m_ = 2;
    double norm_ = 1.0;
    std::vector<int> pos_to_label_;
};

// ---------------------------------------------------------------------------
// OFDM

struct OfdmParams {
    std::size_t n_subcarriers = 64;
    std::size_t n_data_subcarriers = 48;
    std::size_t cp_len = 16;

    std::size_t symbol_len() const { return n_subcarriers + cp_len; }

    void validate() const {
        if (n_subcarriers < 2) throw ParameterError("n_subcarriers must be >= 2");
        if (cp_len >= n_subcarriers) throw ParameterError("cp_len must be < n_subcarriers");
        if (n_data_subcarriers == 0 || n_data_subcarriers >= n_subcarriers)
            throw ParameterError("n_data_subcarriers must be in [1, n_subcarriers - 1] (DC is null)");
    }

    /// FFT bins carrying data: +1, -1, +2, -2, ... skipping DC.
    std::vector<std::size_t> data_bins() const {
        std::vector<std::size_t> bins;
        for (std::size_t k = 1; bins.size() < n_data_subcarriers; ++k) {
            bins.push_back(k);
            if (bins.size() < n_data_subcarriers) bins.push_back(n_subcarriers - k);
        }
        std::sort(bins.begin(), bins.end());
        return bins;
    }

    /// Time-domain gain giving unit average output power.
    double power_gain() const {
        return std::sqrt(static_cast<double>(n_subcarriers) / static_cast<double>(n_data_subcarriers));
    }
};

namespace detail {

/// FFTW's planner is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Unitary n-point DFT in one direction over an owned buffer.
class Dft {
public:
    Dft(std::size_t n, int sign) : n_(n) {
        buf_ = fftw_alloc_complex(n);
        if (!buf_) throw std::bad_alloc();
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, sign, FFTW_ESTIMATE);
    }
    Dft(const Dft&) = delete;
    Dft& operator=(const Dft&) = delete;
    ~Dft() {
        {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(buf_);
    }

    std::span<IQSample> data() { return {reinterpret_cast<IQSample*>(buf_), n_}; }

    void run() {
        fftw_execute(plan_);
        const double s = 1.0 / std::sqrt(static_cast<double>(n_));
        for (auto& v : data()) v *= s;
    }

private:
    std::size_t n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan plan_ = nullptr;
};

}  // namespace detail

inline std::size_t symbols_for_bits(std::size_t n_bits, ModScheme s) {
    const auto bps = static_cast<std::size_t>(bits_per_symbol(s));
    return (n_bits + bps - 1) / bps;
}

/// Maps bits to constellation points (zero-padding the last symbol).
inline std::vector<unsigned> bits_to_labels(std::span<const std::uint8_t> bits, ModScheme s) {
    const auto bps = static_cast<std::size_t>(bits_per_symbol(s));
    std::vector<unsigned> labels(symbols_for_bits(bits.size(), s), 0u);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const std::size_t sym = i / bps, within = i % bps;
        if (bits[i] & 1u) labels[sym] |= 1u << (bps - 1 - within);
    }
    return labels;
}

inline Bits labels_to_bits(std::span<const unsigned> labels, ModScheme s) {
    const auto bps = static_cast<std::size_t>(bits_per_symbol(s));
    Bits bits;
    bits.reserve(labels.size() * bps);
    for (auto l : labels)
        for (std::size_t b = 0; b < bps; ++b) bits.push_back(static_cast<std::uint8_t>((l >> (bps - 1 - b)) & 1u));
    return bits;
}

/// OFDM modulation of a symbol-label stream. The stream is zero-padded to a
/// whole number of OFDM symbols.
inline IQRecording modulate_labels(std::span<const unsigned> labels, ModScheme scheme,
                                   const OfdmParams& ofdm) {
    ofdm.validate();
    if (labels.empty()) throw ParameterError("nothing to modulate");
    const auto points = constellation(scheme);
    const auto bins = ofdm.data_bins();
    const std::size_t nd = ofdm.n_data_subcarriers, nfft = ofdm.n_subcarriers;
    const std::size_t n_ofdm = (labels.size() + nd - 1) / nd;
    const double gain = ofdm.power_gain();

    detail::Dft idft(nfft, FFTW_BACKWARD);
    IQRecording rec;
    rec.sample_rate_sps = kLinkSampleRate;
    rec.samples.reserve(n_ofdm * ofdm.symbol_len());
    for (std::size_t o = 0; o < n_ofdm; ++o) {
        auto buf = idft.data();
        std::fill(buf.begin(), buf.end(), IQSample{});
        for (std::size_t d = 0; d < nd; ++d) {
            const std::size_t idx = o * nd + d;
            buf[bins[d]] = points[idx < labels.size() ? labels[idx] : 0u];
        }
        idft.run();
        for (std::size_t t = nfft - ofdm.cp_len; t < nfft; ++t) rec.samples.push_back(buf[t] * gain);
        for (std::size_t t = 0; t < nfft; ++t) rec.samples.push_back(buf[t] * gain);
    }
    return rec;
}

inline IQRecording modulate(std::span<const std::uint8_t> bits, ModScheme scheme,
                            const OfdmParams& ofdm) {
    if (bits.empty()) throw ParameterError("empty bit sequence");
    return modulate_labels(bits_to_labels(bits, scheme), scheme, ofdm);
}

/// Frame-aligned receiver: strips the CP, runs the DFT, undoes the transmit
/// gain and returns the data-subcarrier soft symbols in transmit order.
inline std::vector<IQSample> receive_symbols(std::span<const IQSample> samples, const OfdmParams& ofdm) {
    ofdm.validate();
    const std::size_t sl = ofdm.symbol_len();
    if (samples.empty() || samples.size() % sl != 0)
        throw FormatError("framing error: " + std::to_string(samples.size()) +
                          " samples is not a multiple of the OFDM symbol length " + std::to_string(sl));
    const auto bins = ofdm.data_bins();
    const double inv_gain = 1.0 / ofdm.power_gain();
    detail::Dft dft(ofdm.n_subcarriers, FFTW_FORWARD);
    std::vector<IQSample> out;
    out.reserve(samples.size() / sl * bins.size());
    for (std::size_t at = 0; at < samples.size(); at += sl) {
        auto buf = dft.data();
        std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(at + ofdm.cp_len), ofdm.n_subcarriers,
                    buf.begin());
        dft.run();
        for (auto b : bins) out.push_back(buf[b] * inv_gain);
    }
    return out;
}

inline std::vector<unsigned> slice(std::span<const IQSample> soft, ModScheme scheme) {
    const Slicer s(scheme);
    std::vector<unsigned> labels;
    labels.reserve(soft.size());
    for (const auto& y : soft) labels.push_back(s(y));
    return labels;
}

/// Hard-decision demodulation. Returns bits for every received symbol,
/// including any zero padding added by modulate.
inline Bits demodulate(const IQRecording& rec, ModScheme scheme, const OfdmParams& ofdm) {
    return labels_to_bits(slice(receive_symbols(rec.samples, ofdm), scheme), scheme);
}

inline Bits random_bits(std::size_t n, Rng& rng) {
    Bits bits(n);
    for (std::size_t i = 0; i < n; i += 64) {
        auto word = rng();
        for (std::size_t b = i; b < std::min(n, i + 64); ++b, word >>= 1) bits[b] = static_cast<std::uint8_t>(word & 1u);
    }
    return bits;
}

inline std::vector<unsigned> random_labels(std::size_t n, ModScheme s, Rng& rng) {
    const auto mask = (1u << bits_per_symbol(s)) - 1u;
    std::vector<unsigned> labels(n);
    for (auto& l : labels) l = static_cast<unsigned>(rng()) & mask;
    return labels;
}

inline double mean_power(std::span<const IQSample> x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& v : x) acc += std::norm(v);
    return acc / static_cast<double>(x.size());
}

// ---------------------------------------------------------------------------
// Jammers

struct Jammer {
    enum class Kind { None, AWGN, Deceptive };
    Kind kind = Kind::None;
    /// Modulation of a deceptive jammer.
    ModScheme scheme = ModScheme::BPSK;

    static Jammer none() { return {}; }
    static Jammer awgn() { return {Kind::AWGN, ModScheme::BPSK}; }
    static Jammer deceptive(ModScheme s) { return {Kind::Deceptive, s}; }
};

inline std::string_view to_string(Jammer::Kind k) {
    switch (k) {
        case Jammer::Kind::None: return "none";
        case Jammer::Kind::AWGN: return "awgn";
        case Jammer::Kind::Deceptive: return "deceptive";
    }
    return "?";
}

inline Jammer::Kind jammer_kind_from_string(std::string_view s) {
    if (s == "none") return Jammer::Kind::None;
    if (s == "awgn") return Jammer::Kind::AWGN;
    if (s == "deceptive") return Jammer::Kind::Deceptive;
    throw ParameterError("unknown jammer kind '" + std::string(s) + "' (expected none|awgn|deceptive)");
}

inline void add_awgn(std::span<IQSample> x, double power, Rng& rng) {
    if (power <= 0.0) return;
    std::normal_distribution<double> g(0.0, std::sqrt(power / 2.0));
    for (auto& v : x) v += IQSample{g(rng), g(rng)};
}

/// Jammer waveform at the link rate. The jammer is synthesized at
/// jor * link rate and brought to the link rate by nearest-sample
/// conversion: out[i] = src[floor(i * jor)].
inline IQRecording gen_jammer(const Jammer& jammer, double power, std::size_t n, double jor,
                              std::uint64_t seed, const OfdmParams& ofdm = {}) {
    if (n == 0) throw ParameterError("jammer length must be > 0");
    if (!(power >= 0.0)) throw ParameterError("jammer power must be >= 0");
    if (!(jor > 0.0) || !std::isfinite(jor)) throw ParameterError("jor must be > 0");

    IQRecording rec;
    rec.sample_rate_sps = kLinkSampleRate;
    rec.label = iq::Label::Jam;
    rec.source = iq::SyntheticSource{"jammer"};
    rec.samples.assign(n, IQSample{});
    if (jammer.kind == Jammer::Kind::None || power == 0.0) return rec;

    const auto m = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * jor));
    auto rng = make_rng(seed, 0x7a);
    std::vector<IQSample> src;
    switch (jammer.kind) {
        case Jammer::Kind::AWGN:
            src.assign(m, IQSample{});
            add_awgn(src, power, rng);
            break;
        case Jammer::Kind::Deceptive: {
            const std::size_t n_ofdm = (m + ofdm.symbol_len() - 1) / ofdm.symbol_len();
            const auto labels = random_labels(n_ofdm * ofdm.n_data_subcarriers, jammer.scheme, rng);
            src = modulate_labels(labels, jammer.scheme, ofdm).samples;
            src.resize(m);
            const double p = mean_power(src);
            const double g = p > 0.0 ? std::sqrt(power / p) : 0.0;
            for (auto& v : src) v *= g;
            break;
        }
        case Jammer::Kind::None: break;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(std::floor(static_cast<double>(i) * jor));
        rec.samples[i] = src[std::min(j, m - 1)];
    }
    return rec;
}

/// out = signal + g_j * jammer + w. g_j makes the jammer-to-signal power
/// ratio exactly jsr_db (measured powers); w is AWGN at snr_db below the
/// measured signal power. jsr_db = -inf or an empty jammer disables it.
/// The jammer is cycled or truncated to the signal length.
inline IQRecording mix(const IQRecording& signal, const IQRecording* jammer, double snr_db, double jsr_db,
                       std::uint64_t seed) {
    if (signal.samples.empty()) throw EmptyInputError("mix: empty signal");
    IQRecording out = signal;
    const double p_sig = mean_power(signal.samples);
    iq::PowerBook book{p_sig, 0.0, 0.0};

    const bool jam_on = jammer && !jammer->samples.empty() && std::isfinite(jsr_db);
    if (jam_on) {
        const auto& js = jammer->samples;
        std::vector<IQSample> tiled(signal.samples.size());
        for (std::size_t i = 0; i < tiled.size(); ++i) tiled[i] = js[i % js.size()];
        const double p_j = mean_power(tiled);
        if (p_j > 0.0) {
            const double target = p_sig * std::pow(10.0, jsr_db / 10.0);
            const double g = std::sqrt(target / p_j);
            for (std::size_t i = 0; i < tiled.size(); ++i) out.samples[i] += g * tiled[i];
            book.jammer = target;
        }
        out.label = iq::Label::Jam;
    }
    if (std::isfinite(snr_db)) {
        book.noise = p_sig * std::pow(10.0, -snr_db / 10.0);
        auto rng = make_rng(seed, 0x3c);
        add_awgn(out.samples, book.noise, rng);
    }
    out.powers = book;
    return out;
}

// ---------------------------------------------------------------------------
// Scenarios

struct ScenarioConfig {
    std::string name = "custom";
    ModScheme scheme = ModScheme::BPSK;
    OfdmParams ofdm;
    double snr_db = 15.0;
    double jsr_db = 0.0;
    Jammer jammer = Jammer::awgn();
    double jor = 1.0;
    std::size_t duration_samples = 200'000;
    std::uint64_t seed = 1;

    void validate() const {
        ofdm.validate();
        if (duration_samples == 0) throw ParameterError("duration_samples must be > 0");
        if (!(jor > 0.0) || !std::isfinite(jor)) throw ParameterError("jor must be > 0");
        if (std::isnan(snr_db) || std::isnan(jsr_db)) throw ParameterError("snr_db/jsr_db must not be NaN");
    }

    /// Reads the scenario keys of a preset; unknown keys are left for callers.
    static ScenarioConfig from_kv(const KeyValues& kv) {
        ScenarioConfig c;
        c.name = kv.get("name", c.name);
        c.scheme = scheme_from_string(kv.get("scheme", "bpsk"));
        c.ofdm.n_subcarriers = static_cast<std::size_t>(kv.get_int("n_subcarriers", 64));
        c.ofdm.n_data_subcarriers = static_cast<std::size_t>(kv.get_int("n_data_subcarriers", 48));
        c.ofdm.cp_len = static_cast<std::size_t>(kv.get_int("cp_len", 16));
        c.snr_db = kv.get_double("snr_db", c.snr_db);
        c.jsr_db = kv.get_double("jsr_db", c.jsr_db);
        c.jammer.kind = jammer_kind_from_string(kv.get("jammer", "awgn"));
        c.jammer.scheme = kv.has("deceptive_scheme") ? scheme_from_string(kv.get("deceptive_scheme", ""))
                                                     : c.scheme;
        c.jor = kv.get_double("jor", c.jor);
        const auto dur = kv.get_int("duration_samples", static_cast<std::int64_t>(c.duration_samples));
        if (dur <= 0) throw ParameterError("duration_samples must be > 0");
        c.duration_samples = static_cast<std::size_t>(dur);
        c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
        c.validate();
        return c;
    }

    void to_kv(KeyValues& kv) const {
        auto num = [](double v) {
            if (std::isinf(v)) return std::string(v < 0 ? "-inf" : "inf");
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof buf, v);
            return std::string(buf, res.ptr);
        };
        kv.set("name", name);
        kv.set("scheme", std::string(to_string(scheme)));
        kv.set("n_subcarriers", std::to_string(ofdm.n_subcarriers));
        kv.set("n_data_subcarriers", std::to_string(ofdm.n_data_subcarriers));
        kv.set("cp_len", std::to_string(ofdm.cp_len));
        kv.set("snr_db", num(snr_db));
        kv.set("jsr_db", num(jsr_db));
        kv.set("jammer", std::string(to_string(jammer.kind)));
        if (jammer.kind == Jammer::Kind::Deceptive) kv.set("deceptive_scheme", std::string(to_string(jammer.scheme)));
        kv.set("jor", num(jor));
        kv.set("duration_samples", std::to_string(duration_samples));
        kv.set("seed", std::to_string(seed));
    }
};

/// Seed streams, so that signal/noise/jammer draws never alias.
enum class Stream : std::uint64_t { WeakBits = 1, WeakNoise, WeakJammer, NoJamBits, NoJamNoise, JamBits, JamNoise, JamJammer };

inline std::uint64_t stream_seed(const ScenarioConfig& c, Stream s) {
    return mix_seed(c.seed, static_cast<std::uint64_t>(s));
}

struct LinkRun {
    IQRecording received;             ///< time-domain receiver input
    std::vector<IQSample> soft;       ///< equalized data-subcarrier symbols
    std::vector<unsigned> tx_labels;  ///< transmitted symbol labels
    std::vector<unsigned> rx_labels;  ///< hard decisions

    double ser() const {
        std::size_t err = 0;
        for (std::size_t i = 0; i < tx_labels.size(); ++i) err += tx_labels[i] != rx_labels[i];
        return tx_labels.empty() ? 0.0 : static_cast<double>(err) / static_cast<double>(tx_labels.size());
    }
};

/// One pass through the link: random symbols -> OFDM -> (+ jammer) + noise -> receiver.
inline LinkRun run_link(const ScenarioConfig& cfg, std::size_t n_symbols, bool with_jammer, std::uint64_t bits_seed,
                        std::uint64_t noise_seed, std::uint64_t jammer_seed) {
    cfg.validate();
    if (n_symbols == 0) throw ParameterError("n_symbols must be > 0");
    const std::size_t nd = cfg.ofdm.n_data_subcarriers;
    const std::size_t n_ofdm = (n_symbols + nd - 1) / nd;
    auto rng = make_rng(bits_seed);
    LinkRun run;
    run.tx_labels = random_labels(n_ofdm * nd, cfg.scheme, rng);
    const auto tx = modulate_labels(run.tx_labels, cfg.scheme, cfg.ofdm);

    IQRecording jam;
    const bool jam_on = with_jammer && cfg.jammer.kind != Jammer::Kind::None;
    if (jam_on) jam = gen_jammer(cfg.jammer, 1.0, tx.samples.size(), cfg.jor, jammer_seed, cfg.ofdm);
    run.received = mix(tx, jam_on ? &jam : nullptr, cfg.snr_db, cfg.jsr_db, noise_seed);
    run.received.label = with_jammer ? iq::Label::Jam : iq::Label::NoJam;
    run.received.source = iq::SyntheticSource{cfg.name};
    if (!jam_on && run.received.powers) run.received.powers->jammer = 0.0;

    run.soft = receive_symbols(run.received.samples, cfg.ofdm);
    run.rx_labels = slice(run.soft, cfg.scheme);
    run.soft.resize(n_symbols);
    run.tx_labels.resize(n_symbols);
    run.rx_labels.resize(n_symbols);
    return run;
}

struct WeakRegime {
    bool weak = true;
    double ser_jam = 0.0;
    double ser_nojam = 0.0;
};

inline constexpr double kWeakSerMargin = 0.01;
inline constexpr std::size_t kMinWeakSymbols = 10'000;

/// Runs the link with and without the jammer over the same signal and noise
/// draws; weak iff the jammer raises SER by at most 0.01 absolute.
inline WeakRegime check_weak_regime(const ScenarioConfig& cfg) {
    cfg.validate();
    const std::size_t n_ofdm = cfg.duration_samples / cfg.ofdm.symbol_len();
    const std::size_t n_sym = n_ofdm * cfg.ofdm.n_data_subcarriers;
    if (n_sym < kMinWeakSymbols)
        throw ParameterError("duration_samples too short for the weak-regime check (need >= " +
                             std::to_string(kMinWeakSymbols) + " symbols)");
    const auto bs = stream_seed(cfg, Stream::WeakBits), ns = stream_seed(cfg, Stream::WeakNoise),
               js = stream_seed(cfg, Stream::WeakJammer);
    const auto clean = run_link(cfg, n_sym, false, bs, ns, js);
    WeakRegime w;
    w.ser_nojam = clean.ser();
    if (cfg.jammer.kind == Jammer::Kind::None || !std::isfinite(cfg.jsr_db)) {
        w.ser_jam = w.ser_nojam;
    } else {
        w.ser_jam = run_link(cfg, n_sym, true, bs, ns, js).ser();
    }
    w.weak = (w.ser_jam - w.ser_nojam) <= kWeakSerMargin;
    return w;
}

struct Dataset {
    std::vector<iq::IQChunk> chunks;  ///< NoJam chunks first, then Jam
    IQRecording nojam_stream;         ///< receiver soft symbols, NoJam capture
    IQRecording jam_stream;           ///< receiver soft symbols, Jam capture

    std::size_t count(iq::Label l) const {
        return static_cast<std::size_t>(
            std::count_if(chunks.begin(), chunks.end(), [l](const auto& c) { return c.label == l; }));
    }
};

/// Balanced NoJam/Jam chunk sets of receiver constellation samples, one
/// chunk per image. Each chunk carries its symbol-error rate.
inline Dataset gen_dataset(const ScenarioConfig& cfg, std::size_t n_per_image, std::size_t n_images_per_class,
                           bool require_weak = false) {
    cfg.validate();
    if (n_per_image == 0 || n_images_per_class == 0)
        throw ParameterError("n_per_image and n_images_per_class must be > 0");
    if (require_weak) {
        const auto w = check_weak_regime(cfg);
        if (!w.weak)
            throw ScenarioRejected("scenario '" + cfg.name + "' is not weak jamming: SER " +
                                   std::to_string(w.ser_jam) + " vs " + std::to_string(w.ser_nojam));
    }
    const std::size_t total = n_per_image * n_images_per_class;
    Dataset ds;
    ds.chunks.reserve(2 * n_images_per_class);
    auto emit = [&](bool jam, IQRecording& stream) {
        const auto run = jam ? run_link(cfg, total, true, stream_seed(cfg, Stream::JamBits),
                                        stream_seed(cfg, Stream::JamNoise), stream_seed(cfg, Stream::JamJammer))
                             : run_link(cfg, total, false, stream_seed(cfg, Stream::NoJamBits),
                                        stream_seed(cfg, Stream::NoJamNoise), 0);
        stream.samples = run.soft;
        stream.sample_rate_sps = kLinkSampleRate;
        stream.label = jam ? iq::Label::Jam : iq::Label::NoJam;
        stream.source = iq::SyntheticSource{cfg.name};
        stream.powers = run.received.powers;
        auto chunks = iq::chunk(stream, n_per_image);
        for (std::size_t c = 0; c < chunks.size(); ++c) {
            std::size_t err = 0;
            for (std::size_t k = c * n_per_image; k < (c + 1) * n_per_image; ++k)
                err += run.tx_labels[k] != run.rx_labels[k];
            chunks[c].ser = static_cast<double>(err) / static_cast<double>(n_per_image);
            ds.chunks.push_back(std::move(chunks[c]));
        }
    };
    emit(false, ds.nojam_stream);
    emit(true, ds.jam_stream);
    return ds;
}

}  // namespace jamsentry::linksim
