#pragma once
// Minimal TOML-subset reader for run configuration: [section] headers,
// key = value lines, strings, booleans, integers, floats, and flat numeric
// arrays.  Anything outside that subset is a hard ConfigError; silent
// acceptance of almost-TOML would be worse than rejection.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "eplim/errors.hpp"

namespace eplim {

class Config {
  public:
    using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;

    static Config parse(const std::string& text, const std::string& origin = "<string>") {
        Config c;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string s = strip(strip_comment(line));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    fail(origin, lineno, "unterminated section header");
                section = strip(s.substr(1, s.size() - 2));
                if (section.empty() || !valid_key(section))
                    fail(origin, lineno, "bad section name");
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                fail(origin, lineno, "expected key = value");
            const std::string key = strip(s.substr(0, eq));
            const std::string val = strip(s.substr(eq + 1));
            if (key.empty() || !valid_key(key))
                fail(origin, lineno, "bad key");
            const std::string full = section.empty() ? key : section + "." + key;
            if (c.kv_.count(full))
                fail(origin, lineno, "duplicate key: " + full);
            c.kv_.emplace(full, parse_value(val, origin, lineno));
        }
        return c;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in.good()) throw ConfigError("cannot read config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    double number(const std::string& key) const {
        const Value& v = fetch(key);
        if (const auto* d = std::get_if<double>(&v)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
        throw ConfigError("config key is not a number: " + key);
    }
    double number(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    std::int64_t integer(const std::string& key) const {
        const Value& v = fetch(key);
        if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
        throw ConfigError("config key is not an integer: " + key);
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
        return has(key) ? integer(key) : fallback;
    }

    bool boolean(const std::string& key) const {
        const Value& v = fetch(key);
        if (const auto* b = std::get_if<bool>(&v)) return *b;
        throw ConfigError("config key is not a boolean: " + key);
    }
    bool boolean(const std::string& key, bool fallback) const {
        return has(key) ? boolean(key) : fallback;
    }

    const std::string& str(const std::string& key) const {
        const Value& v = fetch(key);
        if (const auto* s = std::get_if<std::string>(&v)) return *s;
        throw ConfigError("config key is not a string: " + key);
    }
    std::string str(const std::string& key, const std::string& fallback) const {
        return has(key) ? str(key) : fallback;
    }

    const std::vector<double>& numbers(const std::string& key) const {
        const Value& v = fetch(key);
        if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
        throw ConfigError("config key is not an array: " + key);
    }
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const {
        return has(key) ? numbers(key) : fallback;
    }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        out.reserve(kv_.size());
        for (const auto& [k, v] : kv_) out.push_back(k);
        return out;
    }

  private:
    std::map<std::string, Value> kv_;

    const Value& fetch(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError("missing config key: " + key);
        return it->second;
    }

    [[noreturn]] static void fail(const std::string& origin, int lineno, const std::string& what) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + what);
    }

    static std::string strip(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    // Cut a trailing comment; a '#' inside a quoted string stays.
    static std::string strip_comment(const std::string& s) {
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
            if (s[i] == '#' && !quoted) return s.substr(0, i);
        }
        return s;
    }

    static bool valid_key(const std::string& s) {
        for (const char ch : s) {
            if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' ||
                  ch == '.'))
                return false;
        }
        return true;
    }

    static Value parse_value(const std::string& v, const std::string& origin, int lineno) {
        if (v.empty()) fail(origin, lineno, "empty value");
        if (v == "true") return true;
        if (v == "false") return false;
        if (v.front() == '"') {
            if (v.size() < 2 || v.back() != '"')
                fail(origin, lineno, "unterminated string");
            std::string out;
            for (std::size_t i = 1; i + 1 < v.size(); ++i) {
                if (v[i] == '\\') {
                    if (i + 2 >= v.size()) fail(origin, lineno, "dangling escape");
                    const char n = v[++i];
                    if (n == '"') out += '"';
                    else if (n == '\\') out += '\\';
                    else if (n == 'n') out += '\n';
                    else if (n == 't') out += '\t';
                    else fail(origin, lineno, "unsupported escape");
                } else if (v[i] == '"') {
                    fail(origin, lineno, "stray quote in string");
                } else {
                    out += v[i];
                }
            }
            return out;
        }
        if (v.front() == '[') {
            if (v.back() != ']') fail(origin, lineno, "array must close on the same line");
            std::vector<double> out;
            std::string body = v.substr(1, v.size() - 2);
            std::istringstream items(body);
            std::string item;
            while (std::getline(items, item, ',')) {
                const std::string t = strip(item);
                if (t.empty()) {
                    if (out.empty() && items.eof()) break;  // empty array
                    fail(origin, lineno, "empty array element");
                }
                out.push_back(parse_number(t, origin, lineno));
            }
            return out;
        }
        // Bare scalar: integer if it reads exactly as one, else float.
        try {
            std::size_t used = 0;
            const long long i = std::stoll(v, &used);
            if (used == v.size()) return static_cast<std::int64_t>(i);
        } catch (const std::exception&) {
        }
        return parse_number(v, origin, lineno);
    }

    static double parse_number(const std::string& t, const std::string& origin, int lineno) {
        try {
            std::size_t used = 0;
            const double d = std::stod(t, &used);
            if (used != t.size()) fail(origin, lineno, "trailing junk after number: " + t);
            return d;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail(origin, lineno, "not a number: " + t);
        }
    }
};

}  // namespace eplim
