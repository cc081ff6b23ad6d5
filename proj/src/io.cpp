#include "stripes/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <format>
#include <fstream>

namespace stripes::cli {
namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

bool RunConfig::has(const std::string& key) const {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
        if (it->first == key) return true;
    return false;
}

std::string RunConfig::get(const std::string& key) const {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
        if (it->first == key) return it->second;
    throw ConfigError(std::format("missing required key '{}'", key));
}

std::string RunConfig::get_or(const std::string& key,
                              const std::string& dflt) const {
    return has(key) ? get(key) : dflt;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string v = get(key);
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(std::format("key '{}': not a number: '{}'", key, v));
    }
}

double RunConfig::get_double_or(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
}

int RunConfig::get_int(const std::string& key) const {
    const double x = get_double(key);
    const int i = int(std::lround(x));
    if (std::abs(x - i) > 1e-9)
        throw ConfigError(std::format("key '{}': expected an integer", key));
    return i;
}

int RunConfig::get_int_or(const std::string& key, int dflt) const {
    return has(key) ? get_int(key) : dflt;
}

std::uint64_t RunConfig::get_seed() const {
    if (!has("seed"))
        throw ConfigError("randomized command requires an explicit seed=");
    const std::string v = get("seed");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError(std::format("seed: not an integer: '{}'", v));
    }
}

std::vector<double> RunConfig::get_range(const std::string& key) const {
    return parse_range(get(key));
}

std::string RunConfig::canonical() const {
    std::string out = command;
    out.push_back('\n');
    for (const auto& [k, v] : entries) {
        out += k;
        out.push_back('=');
        out += v;
        out.push_back('\n');
    }
    return out;
}

std::uint64_t RunConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (const char c : canonical()) {
        h ^= std::uint8_t(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

void RunConfig::restrict_keys(const std::vector<std::string>& allowed) const {
    for (const auto& [k, v] : entries) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError(std::format("unknown key '{}'", k));
    }
}

std::vector<std::pair<std::string, std::string>> load_config_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(std::format("cannot open config file '{}'", path.string()));
    std::vector<std::pair<std::string, std::string>> out;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError(std::format("{}:{}: expected key=value",
                                          path.string(), lineno));
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

RunConfig parse_config(const std::string& command,
                       const std::vector<std::string>& tokens) {
    RunConfig cfg;
    cfg.command = command;
    std::vector<std::pair<std::string, std::string>> cli_pairs;
    std::optional<std::filesystem::path> file;
    for (const auto& tok : tokens) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError(std::format("expected key=value, got '{}'", tok));
        const std::string k = trim(tok.substr(0, eq));
        const std::string v = trim(tok.substr(eq + 1));
        if (k == "config")
            file = v;
        else
            cli_pairs.emplace_back(k, v);
    }
    if (file) cfg.entries = load_config_file(*file);
    // command line wins: append after file entries
    cfg.entries.insert(cfg.entries.end(), cli_pairs.begin(), cli_pairs.end());
    // duplicate detection (last occurrence wins by lookup order)
    std::map<std::string, int> seen;
    for (const auto& [k, v] : cfg.entries)
        if (++seen[k] == 2)
            cfg.warnings.push_back(
                std::format("duplicate key '{}': last occurrence wins", k));
    return cfg;
}

std::vector<double> parse_range(const std::string& text) {
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) return {std::stod(text)};
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos)
        throw ConfigError(std::format("range '{}': want start:stop:step", text));
    const double start = std::stod(text.substr(0, c1));
    const double stop = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(text.substr(c2 + 1));
    if (!(step > 0)) throw ConfigError("range step must be positive");
    std::vector<double> out;
    for (double x = start; x <= stop + 0.5 * step; x += step)
        out.push_back(x);
    if (out.empty()) throw ConfigError(std::format("empty range '{}'", text));
    return out;
}

double ensure_finite(double x, const std::string& context) {
    if (!std::isfinite(x))
        throw std::runtime_error(
            std::format("non-finite value in {}: cannot serialize", context));
    return x;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     std::uint64_t config_hash,
                     const std::vector<std::string>& columns)
    : path_(path), n_cols_(columns.size()) {
    buffer_ = std::format("# config_hash={:016x}\n", config_hash);
    for (std::size_t i = 0; i < columns.size(); ++i) {
        buffer_ += columns[i];
        buffer_ += (i + 1 < columns.size()) ? "," : "\n";
    }
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != n_cols_)
        throw std::runtime_error("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        buffer_ += format_double(ensure_finite(values[i], path_.string()));
        buffer_ += (i + 1 < values.size()) ? "," : "\n";
    }
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
    if (values.size() != n_cols_)
        throw std::runtime_error("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        buffer_ += values[i];
        buffer_ += (i + 1 < values.size()) ? "," : "\n";
    }
}

CsvWriter::~CsvWriter() {
    std::ofstream out(path_, std::ios::binary);
    out << buffer_;
}

}  // namespace stripes::cli
