#include "sgmcmc/runio.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <stdexcept>

namespace sgmcmc {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc())
    throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size())
    throw std::invalid_argument("CsvWriter: row width does not match header");
  rows_.push_back(cells);
}

std::string CsvWriter::body() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

void CsvWriter::write(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("CsvWriter: cannot open " + path.string());
  f << body();
}

nlohmann::json RunResult::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kRunResultSchemaVersion;
  j["build_id"] = build_id();
  j["command"] = command;
  j["config"] = config;
  j["summary"] = summary;
  j["warnings"] = warnings;
  j["wall_seconds"] = wall_seconds;
  const auto now = std::chrono::system_clock::now();
  j["timestamp_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  return j;
}

void RunResult::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "config.json");
    nlohmann::json j;
    j["schema_version"] = kRunResultSchemaVersion;
    j["build_id"] = build_id();
    j["command"] = command;
    j["config"] = config;
    f << j.dump(2) << '\n';
  }
  {
    std::ofstream f(dir / "summary.json");
    f << to_json().dump(2) << '\n';
  }
}

std::string build_id() {
#ifdef SGMCMC_BUILD_ID
  return SGMCMC_BUILD_ID;
#else
  return "unknown";
#endif
}

}  // namespace sgmcmc
