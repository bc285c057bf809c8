#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dcss/errors.hpp"

namespace dcss {

// Flat "key = value" configuration with dotted section names, '#' comments
// and comma-separated lists:
//
//     # network
//     network.n_sus = 20
//     roc.pf_grid   = 0.01, 0.05, 0.1
//
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return from_string(ss.str(), path);
    }

    static KeyValueConfig from_string(const std::string& text, const std::string& origin = "<string>") {
        KeyValueConfig cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const std::size_t eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw config_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_double(key, it->second);
    }

    long long get_int(const std::string& key, long long fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_int(key, it->second);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return std::stoull(trim(it->second));
        } catch (const std::exception&) {
            throw config_error("config key '" + key + "': invalid unsigned integer '" + it->second + "'");
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string v = trim(it->second);
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw config_error("config key '" + key + "': invalid boolean '" + v + "'");
    }

    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        for (const std::string& tok : split(it->second)) out.push_back(parse_double(key, tok));
        return out;
    }

    std::vector<long long> get_int_list(const std::string& key,
                                        const std::vector<long long>& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<long long> out;
        for (const std::string& tok : split(it->second)) out.push_back(parse_int(key, tok));
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& key,
                                             const std::vector<std::string>& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return split(it->second);
    }

private:
    static std::string trim(const std::string& s) {
        const std::size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const std::size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream in(s);
        while (std::getline(in, cur, ',')) {
            const std::string t = trim(cur);
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }

    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(trim(v), &pos);
            if (pos != trim(v).size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            throw config_error("config key '" + key + "': invalid number '" + v + "'");
        }
    }

    static long long parse_int(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const long long d = std::stoll(trim(v), &pos);
            if (pos != trim(v).size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            throw config_error("config key '" + key + "': invalid integer '" + v + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

}  // namespace dcss
