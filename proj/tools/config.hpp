#pragma once

// Flat key = value configuration files (a TOML subset): one assignment per
// line, '#' comments, numbers, quoted or bare strings, and [a, b, ...] lists
// of numbers. Sections are not supported.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "relarb/errors.hpp"

namespace relarb::app {

/// Shortest round-trip text for a double.
inline std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

class Config {
  public:
    static Config parse(std::string_view text, const std::string& source)
    {
        Config cfg;
        std::size_t lineNo = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t end = std::min(text.find('\n', pos), text.size());
            std::string_view line = text.substr(pos, end - pos);
            pos = end + 1;
            ++lineNo;
            line = strip(strip_comment(line));
            if (line.empty()) {
                continue;
            }
            if (line.front() == '[') {
                throw ConfigError(where(source, lineNo) + "sections are not supported");
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ConfigError(where(source, lineNo) + "expected 'key = value'");
            }
            const std::string key(strip(line.substr(0, eq)));
            const std::string value(strip(line.substr(eq + 1)));
            if (key.empty() || !std::all_of(key.begin(), key.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                })) {
                throw ConfigError(where(source, lineNo) + "invalid key '" + key + "'");
            }
            if (value.empty()) {
                throw ConfigError(where(source, lineNo) + "missing value for '" + key + "'");
            }
            if (cfg.entries_.count(key) != 0) {
                throw ConfigError(where(source, lineNo) + "duplicate key '" + key + "'");
            }
            cfg.entries_[key] = Entry{value, source, lineNo, false};
        }
        return cfg;
    }

    static Config load(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw ConfigError("cannot read config file '" + path + "'");
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    /// Entries of `over` replace entries of this config.
    void merge(const Config& over)
    {
        for (const auto& [k, e] : over.entries_) {
            entries_[k] = e;
        }
    }

    void set(const std::string& key, const std::string& value, const std::string& source)
    {
        entries_[key] = Entry{value, source, 0, false};
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    double get_double(const std::string& key, double fallback)
    {
        auto* e = find(key);
        const double v = e ? parse_double(*e, key, e->raw) : fallback;
        record(key, format_number(v));
        return v;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback)
    {
        auto* e = find(key);
        std::uint64_t v = fallback;
        if (e) {
            const std::string& s = e->raw;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
                throw ConfigError(where(*e) + "field '" + key +
                                  "': expected a nonnegative integer, got '" + s + "'");
            }
        }
        record(key, std::to_string(v));
        return v;
    }

    std::string get_string(const std::string& key, const std::string& fallback,
                           std::initializer_list<std::string_view> allowed)
    {
        auto* e = find(key);
        std::string v = fallback;
        if (e) {
            v = unquote(e->raw);
            if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
                std::string list;
                for (auto a : allowed) {
                    list += (list.empty() ? "" : ", ") + std::string(a);
                }
                throw ConfigError(where(*e) + "field '" + key + "': '" + v +
                                  "' is not one of {" + list + "}");
            }
        }
        record(key, v);
        return v;
    }

    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback)
    {
        auto* e = find(key);
        std::vector<double> v = fallback;
        if (e) {
            std::string_view s = strip(e->raw);
            if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
                throw ConfigError(where(*e) + "field '" + key + "': expected a list [a, b, ...]");
            }
            v.clear();
            s = strip(s.substr(1, s.size() - 2));
            while (!s.empty()) {
                const std::size_t comma = std::min(s.find(','), s.size());
                v.push_back(parse_double(*e, key, std::string(strip(s.substr(0, comma)))));
                s = comma < s.size() ? strip(s.substr(comma + 1)) : std::string_view{};
            }
        }
        std::string text = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            text += (i ? ", " : "") + format_number(v[i]);
        }
        record(key, text + "]");
        return v;
    }

    /// Raise on keys that no command consumed (likely typos).
    void reject_unused() const
    {
        for (const auto& [k, e] : entries_) {
            if (!e.used) {
                throw ConfigError(where(e) + "unknown field '" + k + "'");
            }
        }
    }

    /// Every value the run resolved, defaults included, in key order.
    std::string resolved() const
    {
        std::string out;
        for (const auto& [k, v] : resolved_) {
            out += (out.empty() ? "" : "; ") + k + "=" + v;
        }
        return out;
    }

    /// Diagnostic prefix for a field, e.g. for range errors found after parsing.
    std::string locate(const std::string& key) const
    {
        const auto it = entries_.find(key);
        return it == entries_.end() ? std::string("default ") : where(it->second);
    }

  private:
    struct Entry {
        std::string raw;
        std::string source;
        std::size_t line = 0;
        bool used = false;
    };

    Entry* find(const std::string& key)
    {
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            return nullptr;
        }
        it->second.used = true;
        return &it->second;
    }

    void record(const std::string& key, std::string value) { resolved_[key] = std::move(value); }

    static std::string where(const std::string& source, std::size_t line)
    {
        return source + ":" + std::to_string(line) + ": ";
    }

    static std::string where(const Entry& e)
    {
        return e.line == 0 ? e.source + ": " : where(e.source, e.line);
    }

    static double parse_double(const Entry& e, const std::string& key, const std::string& s)
    {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
            throw ConfigError(where(e) + "field '" + key + "': expected a number, got '" + s +
                              "'");
        }
        return v;
    }

    static std::string_view strip(std::string_view s)
    {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
            s.remove_prefix(1);
        }
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
            s.remove_suffix(1);
        }
        return s;
    }

    static std::string_view strip_comment(std::string_view s)
    {
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') {
                quoted = !quoted;
            } else if (s[i] == '#' && !quoted) {
                return s.substr(0, i);
            }
        }
        return s;
    }

    static std::string unquote(const std::string& s)
    {
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
            return s.substr(1, s.size() - 2);
        }
        return s;
    }

    std::map<std::string, Entry> entries_;
    std::map<std::string, std::string> resolved_;
};

}  // namespace relarb::app
