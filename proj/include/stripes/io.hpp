#pragma once

// Run configuration and report output for the command-line front end.
//
// Configs are flat key=value maps: an optional config file (one pair per
// line, '#' comments) merged with command-line tokens, command line winning.
// Duplicate keys warn and keep the last occurrence; keys outside a command's
// declared set are hard errors.  Ranges use start:stop:step.
//
// Every artifact embeds the FNV-1a hash of the canonical config text.  CSV
// files carry a fixed column order and 17-significant-digit numbers; NaN
// anywhere is an error before anything is written.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stripes::cli {

inline constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    std::vector<std::pair<std::string, std::string>> entries;  // merged order
    std::vector<std::string> warnings;

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;  // throws if absent
    std::string get_or(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double dflt) const;
    int get_int(const std::string& key) const;
    int get_int_or(const std::string& key, int dflt) const;
    std::uint64_t get_seed() const;  // required, no default by design
    std::vector<double> get_range(const std::string& key) const;

    // full canonical text: "command\nk=v\n..." in merged order
    std::string canonical() const;
    std::uint64_t hash() const;

    // throws naming the first key outside `allowed`
    void restrict_keys(const std::vector<std::string>& allowed) const;
};

// key=value lines with '#' comments; parse errors name the line number
std::vector<std::pair<std::string, std::string>> load_config_file(
    const std::filesystem::path& path);

// tokens are "key=value"; a "config=PATH" token pulls in a file first
RunConfig parse_config(const std::string& command,
                       const std::vector<std::string>& tokens);

std::vector<double> parse_range(const std::string& text);

// throws on non-finite values so NaN never reaches an output file
double ensure_finite(double x, const std::string& context);

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, std::uint64_t config_hash,
              const std::vector<std::string>& columns);
    ~CsvWriter();
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& values);
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    std::string buffer_;
    std::size_t n_cols_;
};

std::string format_double(double x);  // %.17g

}  // namespace stripes::cli
