#ifndef MISTORE_TOOLS_CLI_IO_HPP
#define MISTORE_TOOLS_CLI_IO_HPP

// File formats used by the command-line tool: plain series files, comma
// delimited per-scale tables with the run manifest embedded as comment
// lines, and JSON documents.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace mistore::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

class CliError : public std::runtime_error {
 public:
  CliError(ExitCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

/// Shortest decimal that round-trips; "nan" for NaN.
std::string format_number(double v);

/// Parses a finite decimal (optional leading '+'); nullopt otherwise.
std::optional<double> parse_number(std::string_view text);

/// One finite value per line; blank lines and lines starting with '#' are
/// skipped and a single non-numeric first data line is taken as a header.
std::vector<double> read_series(const std::filesystem::path& path);
std::vector<double> parse_series(std::string_view text, const std::string& source);

void write_series(const std::filesystem::path& path, const std::vector<double>& values);

struct RunManifest {
  std::string command;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::string version;
  std::string timestamp;

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// ISO-8601 UTC time; honours SOURCE_DATE_EPOCH when set.
std::string current_timestamp();

struct Table {
  std::optional<RunManifest> manifest;
  std::vector<std::string> comments;  ///< comment lines other than the manifest
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::string format_table(const Table& table);
Table parse_table(std::string_view text);
Table read_table(const std::filesystem::path& path);

/// Extracts the manifest from any file the tool writes (table, JSON
/// document or manifest.json).
RunManifest read_manifest(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory and renames it
/// into place. "-" writes to stdout.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace mistore::cli

#endif  // MISTORE_TOOLS_CLI_IO_HPP
