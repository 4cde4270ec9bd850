#include "cli_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mistore::cli {

namespace {

constexpr std::string_view kManifestPrefix = "# manifest: ";

std::string_view strip(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(strip(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, ptr};
}

std::optional<double> parse_number(std::string_view text) {
  text = strip(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kData, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw CliError(kData, "error reading '" + path.string() + "'");
  return ss.str();
}

std::vector<double> parse_series(std::string_view text, const std::string& source) {
  std::vector<double> values;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (auto raw : lines_of(text)) {
    ++line_no;
    const auto line = strip(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto v = parse_number(line);
    if (!v) {
      if (values.empty() && !header_seen) {
        header_seen = true;
        continue;
      }
      throw CliError(kData, source + ":" + std::to_string(line_no) + ": non-numeric value '" +
                                std::string(line) + "'");
    }
    if (!std::isfinite(*v)) {
      throw CliError(kData, source + ":" + std::to_string(line_no) + ": non-finite value '" +
                                std::string(line) + "'");
    }
    values.push_back(*v);
  }
  return values;
}

std::vector<double> read_series(const std::filesystem::path& path) {
  return parse_series(read_text(path), path.string());
}

void write_series(const std::filesystem::path& path, const std::vector<double>& values) {
  std::string out;
  for (double v : values) {
    out += format_number(v);
    out += '\n';
  }
  write_text_atomic(path, out);
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["parameters"] = parameters;
  j["version"] = version;
  j["timestamp"] = timestamp;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.parameters = nlohmann::ordered_json::object();
    for (const auto& [k, v] : j.at("parameters").items()) m.parameters[k] = v;
    m.version = j.value("version", "");
    m.timestamp = j.value("timestamp", "");
  } catch (const nlohmann::json::exception& e) {
    throw CliError(kData, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string current_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    long long v = 0;
    const std::string_view s(epoch);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_table(const Table& table) {
  std::string out;
  if (table.manifest) {
    out += kManifestPrefix;
    out += table.manifest->to_json().dump();
    out += '\n';
  }
  for (const auto& c : table.comments) out += "# " + c + '\n';
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

Table parse_table(std::string_view text) {
  Table t;
  std::size_t line_no = 0;
  for (auto raw : lines_of(text)) {
    ++line_no;
    const auto line = strip(raw);
    if (line.empty()) continue;
    if (line.starts_with(strip(kManifestPrefix))) {
      const auto body = line.substr(strip(kManifestPrefix).size());
      try {
        t.manifest = RunManifest::from_json(nlohmann::json::parse(body));
      } catch (const nlohmann::json::exception& e) {
        throw CliError(kData, "line " + std::to_string(line_no) + ": bad manifest: " + e.what());
      }
      continue;
    }
    if (line.front() == '#') {
      auto c = line.substr(1);
      if (!c.empty() && c.front() == ' ') c.remove_prefix(1);
      t.comments.emplace_back(c);
      continue;
    }
    const auto fields = split_commas(line);
    if (t.header.empty()) {
      for (auto f : fields) t.header.emplace_back(f);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw CliError(kData, "line " + std::to_string(line_no) + ": expected " +
                                std::to_string(t.header.size()) + " fields");
    }
    std::vector<double> row;
    for (auto f : fields) {
      const auto v = parse_number(f);
      if (!v) throw CliError(kData, "line " + std::to_string(line_no) + ": bad number '" + std::string(f) + "'");
      row.push_back(*v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table read_table(const std::filesystem::path& path) { return parse_table(read_text(path)); }

RunManifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  const auto first = strip(text).substr(0, 1);
  if (first == "{") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw CliError(kData, path.string() + ": " + e.what());
    }
    return RunManifest::from_json(j.contains("manifest") ? j["manifest"] : j);
  }
  auto table = parse_table(text);
  if (!table.manifest) throw CliError(kData, path.string() + ": no manifest found");
  return *table.manifest;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path == "-") {
    std::cout << content << std::flush;
    return;
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError(kData, "cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) throw CliError(kData, "error writing '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw CliError(kData, "cannot write '" + path.string() + "'");
  }
}

}  // namespace mistore::cli
