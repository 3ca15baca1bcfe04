#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace sgmcmc {

// Shortest decimal representation that parses back to the same 64-bit float.
std::string format_double(double v);

// CSV writer with deterministic bodies: numeric fields go through
// format_double, no timestamps ever appear in a CSV.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);

  std::string body() const;
  void write(const std::filesystem::path& path) const;

  static std::string num(double v) { return format_double(v); }
  static std::string num(std::uint64_t v) { return std::to_string(v); }
  static std::string num(int v) { return std::to_string(v); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline constexpr int kRunResultSchemaVersion = 1;

// Config echo + per-seed summaries + diagnostics for one CLI run. Timestamps
// and wall-clock numbers live only here (JSON), never in CSV bodies.
struct RunResult {
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::string command;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& dir) const;
};

std::string build_id();

}  // namespace sgmcmc
