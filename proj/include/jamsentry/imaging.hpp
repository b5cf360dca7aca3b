#pragma once

// Bi-variate histogram images of IQ chunks, prior-art single-cloud axis
// limits, augmentation, PNG export and a sparse on-disk image cache.

#include <jamsentry/binio.hpp>
#include <jamsentry/error.hpp>
#include <jamsentry/iq.hpp>
#include <jamsentry/linksim.hpp>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jamsentry::imaging {

using iq::IQSample;
using iq::Label;

/// P = Q = 224 everywhere by default, i.e. J = 50,176 autoencoder inputs.
inline constexpr std::size_t kDefaultSide = 224;

struct AxisLimits {
    double x_lo = -2.0, x_hi = 2.0;
    double y_lo = -2.0, y_hi = 2.0;

    void validate() const {
        if (!(x_lo < x_hi) || !(y_lo < y_hi)) throw ParameterError("axis limits must satisfy lo < hi");
    }
};

inline constexpr AxisLimits kProposedLimits{-2.0, 2.0, -2.0, 2.0};

/// Single-cloud axis limits of the earlier imaging method, per modulation.
inline AxisLimits legacy_limits(linksim::ModScheme s) {
    switch (s) {
        case linksim::ModScheme::BPSK: return {0.0, 2.0, -1.0, 1.0};
        case linksim::ModScheme::QPSK: return {-0.293, 1.707, -1.0, 1.0};
        case linksim::ModScheme::QAM16: return {-0.867, 2.133, -1.5, 1.5};
        case linksim::ModScheme::QAM64: return {-0.883, 2.117, -1.5, 1.5};
    }
    return kProposedLimits;
}

/// P x Q grayscale image. Storage is row-major with row = Q-bin (low Q
/// first) and column = I-bin. `raw_counts` is the histogram; `pixels` the
/// detector input in [0, 1].
struct GrayImage {
    std::size_t width = 0;   // P
    std::size_t height = 0;  // Q
    std::vector<double> pixels;
    std::vector<std::uint32_t> raw_counts;
    std::size_t dropped = 0;
    Label label = Label::NoJam;

    std::size_t size() const { return width * height; }
    std::size_t index(std::size_t ix, std::size_t iy) const { return iy * width + ix; }
    std::uint32_t count(std::size_t ix, std::size_t iy) const { return raw_counts[index(ix, iy)]; }
    double pixel(std::size_t ix, std::size_t iy) const { return pixels[index(ix, iy)]; }

    std::uint64_t total_counts() const {
        std::uint64_t s = 0;
        for (auto c : raw_counts) s += c;
        return s;
    }

    /// pixels = raw_counts / max(raw_counts), or all zero for an empty histogram.
    void normalize_pixels() {
        const auto mx = raw_counts.empty() ? 0u : *std::max_element(raw_counts.begin(), raw_counts.end());
        pixels.assign(raw_counts.size(), 0.0);
        if (mx == 0) return;
        for (std::size_t k = 0; k < raw_counts.size(); ++k)
            pixels[k] = static_cast<double>(raw_counts[k]) / static_cast<double>(mx);
    }
};

inline std::size_t bin_of(double v, double lo, double hi, std::size_t n) {
    const auto b = static_cast<std::size_t>(std::floor((v - lo) * static_cast<double>(n) / (hi - lo)));
    return std::min(b, n - 1);
}

/// Counts samples into a P x Q grid over `limits`. Bins are half-open except
/// the last, which also takes samples on the upper edge. Samples outside
/// the limits are tallied in `dropped`.
inline GrayImage histogram_image(std::span<const IQSample> samples, std::size_t P, std::size_t Q,
                                 const AxisLimits& limits = kProposedLimits) {
    if (P < 2 || Q < 2) throw ParameterError("image dimensions must be >= 2");
    limits.validate();
    GrayImage img;
    img.width = P;
    img.height = Q;
    img.raw_counts.assign(P * Q, 0u);
    for (const auto& s : samples) {
        const double i = s.real(), q = s.imag();
        if (!(i >= limits.x_lo && i <= limits.x_hi && q >= limits.y_lo && q <= limits.y_hi)) {
            ++img.dropped;
            continue;
        }
        const auto ix = bin_of(i, limits.x_lo, limits.x_hi, P);
        const auto iy = bin_of(q, limits.y_lo, limits.y_hi, Q);
        ++img.raw_counts[img.index(ix, iy)];
    }
    img.normalize_pixels();
    return img;
}

inline GrayImage histogram_image(const iq::IQChunk& chunk, std::size_t P = kDefaultSide,
                                 std::size_t Q = kDefaultSide, const AxisLimits& limits = kProposedLimits) {
    auto img = histogram_image(chunk.samples, P, Q, limits);
    img.label = chunk.label;
    return img;
}

// ---------------------------------------------------------------------------
// Augmentation

enum class Augment { Rot180, FlipLR, FlipUD, Contrast, Brightness };

inline std::string_view to_string(Augment a) {
    switch (a) {
        case Augment::Rot180: return "rot180";
        case Augment::FlipLR: return "fliplr";
        case Augment::FlipUD: return "flipud";
        case Augment::Contrast: return "contrast";
        case Augment::Brightness: return "brightness";
    }
    return "?";
}

inline Augment augment_from_string(std::string_view s) {
    for (auto a : {Augment::Rot180, Augment::FlipLR, Augment::FlipUD, Augment::Contrast, Augment::Brightness})
        if (to_string(a) == s) return a;
    throw ParameterError("unknown augmentation '" + std::string(s) + "'");
}

inline constexpr double kDefaultContrast = 1.5;
inline constexpr double kDefaultBrightness = 0.2;

inline double default_param(Augment a) {
    return a == Augment::Contrast ? kDefaultContrast : a == Augment::Brightness ? kDefaultBrightness : 0.0;
}

/// Geometric strategies permute pixels and counts together. Contrast and
/// brightness act on pixels only; raw_counts keep the source histogram.
inline GrayImage augment(const GrayImage& img, Augment a, double param) {
    GrayImage out = img;
    const std::size_t W = img.width, H = img.height;
    auto permute = [&](auto src_of) {
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                const auto [sx, sy] = src_of(x, y);
                out.pixels[out.index(x, y)] = img.pixels[img.index(sx, sy)];
                out.raw_counts[out.index(x, y)] = img.raw_counts[img.index(sx, sy)];
            }
    };
    switch (a) {
        case Augment::Rot180:
            permute([&](std::size_t x, std::size_t y) { return std::pair{W - 1 - x, H - 1 - y}; });
            break;
        case Augment::FlipLR:
            permute([&](std::size_t x, std::size_t y) { return std::pair{W - 1 - x, y}; });
            break;
        case Augment::FlipUD:
            permute([&](std::size_t x, std::size_t y) { return std::pair{x, H - 1 - y}; });
            break;
        case Augment::Contrast:
            if (!(param > 0.0) || !std::isfinite(param)) throw ParameterError("contrast factor must be > 0");
            for (auto& p : out.pixels) p = std::clamp(param * (p - 0.5) + 0.5, 0.0, 1.0);
            break;
        case Augment::Brightness:
            if (!(param > 0.0) || !std::isfinite(param)) throw ParameterError("brightness offset must be > 0");
            for (auto& p : out.pixels) p = std::clamp(p + param, 0.0, 1.0);
            break;
    }
    return out;
}

inline GrayImage augment(const GrayImage& img, Augment a) { return augment(img, a, default_param(a)); }

// ---------------------------------------------------------------------------
// PNG (8-bit grayscale, top row = highest Q bin so the file reads like a
// constellation diagram)

namespace detail {
struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace detail

inline std::uint8_t to_gray8(double p) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(p, 0.0, 1.0)));
}

inline void export_png(const GrayImage& img, const std::filesystem::path& path) {
    detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    std::vector<std::uint8_t> rows(img.size());
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            rows[(img.height - 1 - y) * img.width + x] = to_gray8(img.pixel(x, y));
    std::vector<png_bytep> row_ptrs(img.height);
    for (std::size_t y = 0; y < img.height; ++y) row_ptrs[y] = rows.data() + y * img.width;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encoding failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

struct Gray8 {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> rows;  ///< file order, top row first
};

inline Gray8 read_png_gray8(const std::filesystem::path& path) {
    detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed");
    }
    Gray8 out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("PNG decoding failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("expected 8-bit grayscale PNG");
    }
    out.width = png_get_image_width(png, info);
    out.height = png_get_image_height(png, info);
    out.rows.resize(out.width * out.height);
    std::vector<png_bytep> row_ptrs(out.height);
    for (std::size_t y = 0; y < out.height; ++y) row_ptrs[y] = out.rows.data() + y * out.width;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

// ---------------------------------------------------------------------------
// Image cache: "JSIMG001", u32 P, u32 Q, u64 count, count label bytes, then
// per image u64 dropped, u32 nnz, nnz x (u32 index, u32 count). Pixels are
// rebuilt from counts on load.

inline constexpr std::string_view kCacheMagic = "JSIMG001";

inline void save_cache(std::span<const GrayImage> images, const std::filesystem::path& path) {
    binio::Writer w;
    w.magic(kCacheMagic);
    const std::size_t P = images.empty() ? 0 : images.front().width;
    const std::size_t Q = images.empty() ? 0 : images.front().height;
    w.le(static_cast<std::uint32_t>(P));
    w.le(static_cast<std::uint32_t>(Q));
    w.le(static_cast<std::uint64_t>(images.size()));
    for (const auto& img : images) {
        if (img.width != P || img.height != Q) throw ShapeError("image cache requires uniform dimensions");
        w.le(static_cast<std::uint8_t>(img.label));
    }
    for (const auto& img : images) {
        w.le(static_cast<std::uint64_t>(img.dropped));
        const auto nnz = std::count_if(img.raw_counts.begin(), img.raw_counts.end(), [](auto c) { return c != 0; });
        w.le(static_cast<std::uint32_t>(nnz));
        for (std::size_t k = 0; k < img.raw_counts.size(); ++k)
            if (img.raw_counts[k] != 0) {
                w.le(static_cast<std::uint32_t>(k));
                w.le(img.raw_counts[k]);
            }
    }
    w.save(path);
}

inline std::vector<GrayImage> load_cache(const std::filesystem::path& path) {
    auto r = binio::Reader::load(path);
    r.expect_magic(kCacheMagic);
    const auto P = r.le<std::uint32_t>(), Q = r.le<std::uint32_t>();
    const auto count = r.le<std::uint64_t>();
    if (count > r.remaining()) throw FormatError("truncated file");
    std::vector<GrayImage> images(count);
    for (auto& img : images) {
        const auto l = r.le<std::uint8_t>();
        if (l > 1) throw FormatError("bad label byte in image cache");
        img.label = static_cast<Label>(l);
        img.width = P;
        img.height = Q;
    }
    for (auto& img : images) {
        img.raw_counts.assign(static_cast<std::size_t>(P) * Q, 0u);
        img.dropped = r.le<std::uint64_t>();
        const auto nnz = r.le<std::uint32_t>();
        for (std::uint32_t k = 0; k < nnz; ++k) {
            const auto idx = r.le<std::uint32_t>();
            const auto c = r.le<std::uint32_t>();
            if (idx >= img.raw_counts.size()) throw FormatError("pixel index out of range in image cache");
            img.raw_counts[idx] = c;
        }
        img.normalize_pixels();
    }
    if (!r.at_end()) throw FormatError("trailing bytes in image cache");
    return images;
}

}  // namespace jamsentry::imaging
