#pragma once

// Plain-text `key = value` files used for scenario and experiment presets.
// '#' starts a comment; blank lines are ignored; later keys override earlier.

#include <jamsentry/error.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace jamsentry {

class KeyValues {
public:
    static KeyValues parse(std::string_view text) {
        KeyValues kv;
        std::istringstream is{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const auto t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string_view::npos)
                throw FormatError("line " + std::to_string(lineno) + ": expected 'key = value'");
            const auto key = trim(t.substr(0, eq));
            if (key.empty()) throw FormatError("line " + std::to_string(lineno) + ": empty key");
            kv.values_[std::string(key)] = std::string(trim(t.substr(eq + 1)));
        }
        return kv;
    }

    static KeyValues load(const std::filesystem::path& path) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot open config " + path.string());
        std::stringstream ss;
        ss << is.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : to_double(key, it->second);
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : to_int(key, it->second);
    }

    /// Comma-separated list; empty items are skipped.
    std::vector<std::string> get_strings(const std::string& key) const {
        std::vector<std::string> out;
        auto it = values_.find(key);
        if (it == values_.end()) return out;
        std::string_view rest = it->second;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto item = trim(rest.substr(0, comma));
            if (!item.empty()) out.emplace_back(item);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        return out;
    }

    /// Comma-separated list of numbers.
    std::vector<double> get_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : get_strings(key)) out.push_back(to_double(key, s));
        return out;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& entries() const { return values_; }

    /// Canonical text form: sorted keys, one per line.
    std::string dump() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
        return out;
    }

private:
    static std::string_view trim(std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& key, const std::string& v) {
        if (v == "-inf") return -std::numeric_limits<double>::infinity();
        std::size_t pos = 0;
        try {
            const double d = std::stod(v, &pos);
            if (pos == v.size()) return d;
        } catch (const std::exception&) {
        }
        throw FormatError("key '" + key + "': '" + v + "' is not a number");
    }

    static std::int64_t to_int(const std::string& key, const std::string& v) {
        std::int64_t out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size())
            throw FormatError("key '" + key + "': '" + v + "' is not an integer");
        return out;
    }

    std::map<std::string, std::string> values_;
};

}  // namespace jamsentry
