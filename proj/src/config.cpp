#include "nnlab/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace nnlab {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

KvConfig KvConfig::parse_string(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (cfg.kv_.count(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" +
                              key + "'");
        cfg.kv_[key] = value;
    }
    auto it = cfg.kv_.find("config_version");
    if (it == cfg.kv_.end()) throw ConfigError("missing required key 'config_version'");
    if (it->second != "1")
        throw ConfigError("unsupported config_version '" + it->second + "' (expected 1)");
    cfg.used_.insert("config_version");
    return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

void KvConfig::set(const std::string& key, const std::string& value) { kv_[key] = value; }

std::string KvConfig::raw(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required config key '" + key + "'");
    used_.insert(key);
    return it->second;
}

std::string KvConfig::get_string(const std::string& key) const { return raw(key); }

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    return raw(key);
}

double KvConfig::get_double(const std::string& key) const {
    std::string v = raw(key);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
    return x;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long KvConfig::get_long(const std::string& key) const {
    std::string v = raw(key);
    char* end = nullptr;
    long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
    return x;
}

long KvConfig::get_long(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : fallback;
}

int KvConfig::get_int(const std::string& key) const { return static_cast<int>(get_long(key)); }

int KvConfig::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t KvConfig::get_u64(const std::string& key) const {
    std::string v = raw(key);
    char* end = nullptr;
    unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': not an unsigned integer: '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string v = raw(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<double> KvConfig::get_doubles(const std::string& key) const {
    std::string v = raw(key);
    std::vector<double> out;
    std::istringstream in(v);
    std::string part;
    while (std::getline(in, part, ',')) {
        part = trim(part);
        if (part.empty())
            throw ConfigError("config key '" + key + "': empty list element");
        char* end = nullptr;
        double x = std::strtod(part.c_str(), &end);
        if (end == part.c_str() || *end != '\0')
            throw ConfigError("config key '" + key + "': not a number: '" + part + "'");
        out.push_back(x);
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::vector<double> KvConfig::get_doubles(const std::string& key,
                                          std::vector<double> fallback) const {
    return has(key) ? get_doubles(key) : fallback;
}

std::vector<std::string> KvConfig::get_strings(const std::string& key,
                                               std::vector<std::string> fallback) const {
    if (!has(key)) return fallback;
    std::string v = raw(key);
    std::vector<std::string> out;
    std::istringstream in(v);
    std::string part;
    while (std::getline(in, part, ',')) {
        part = trim(part);
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

void KvConfig::require_all_used() const {
    std::string unknown;
    for (const auto& [key, value] : kv_)
        if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
}

}  // namespace nnlab
