#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace nnlab {

// Raised for anything wrong with user configuration (bad file, bad key,
// bad value, unsupported combination). The CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Flat `key = value` configuration document. '#' starts a comment, blank
// lines are ignored, keys may appear once. A `config_version = 1` line is
// required. Reads are tracked so that leftover (unknown) keys can be
// rejected after the consumer has pulled everything it understands.
class KvConfig {
public:
    static KvConfig parse_string(const std::string& text);
    static KvConfig parse_file(const std::string& path);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    void set(const std::string& key, const std::string& value);  // CLI overrides

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // Comma-separated doubles.
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
    // Comma-separated strings (trimmed; empty value -> empty list).
    std::vector<std::string> get_strings(const std::string& key,
                                         std::vector<std::string> fallback) const;

    // Throws ConfigError listing every key never read.
    void require_all_used() const;

private:
    std::string raw(const std::string& key) const;
    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> used_;
};

}  // namespace nnlab
