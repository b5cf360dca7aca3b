#pragma once

// Little-endian binary containers shared by the image cache and model files.

#include <jamsentry/error.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jamsentry::binio {

class Writer {
public:
    void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void magic(std::string_view m) { bytes({reinterpret_cast<const std::uint8_t*>(m.data()), m.size()}); }

    template <typename T>
    void le(T v) {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                        std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        const auto u = std::bit_cast<U>(v);
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }

    void f64s(std::span<const double> v) {
        for (double d : v) le(d);
    }

    const std::vector<std::uint8_t>& data() const { return buf_; }

    void save(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw IoError("cannot write " + path.string());
        os.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!os) throw IoError("short write to " + path.string());
    }

private:
    std::vector<std::uint8_t> buf_;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

/// Bounds-checked reader; any overrun is a FormatError ("truncated").
class Reader {
public:
    explicit Reader(std::vector<std::uint8_t> buf) : buf_(std::move(buf)) {}

    static Reader load(const std::filesystem::path& path) { return Reader(read_file(path)); }

    void expect_magic(std::string_view m) {
        need(m.size());
        if (std::memcmp(buf_.data() + pos_, m.data(), m.size()) != 0)
            throw FormatError("bad magic (expected '" + std::string(m) + "')");
        pos_ += m.size();
    }

    template <typename T>
    T le() {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                        std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        need(sizeof(T));
        U u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(buf_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return std::bit_cast<T>(u);
    }

    std::vector<double> f64s(std::size_t n) {
        need(n * 8);
        std::vector<double> out(n);
        for (auto& d : out) d = le<double>();
        return out;
    }

    bool at_end() const { return pos_ == buf_.size(); }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) throw FormatError("truncated file");
    }

    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

}  // namespace jamsentry::binio
