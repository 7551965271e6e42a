#pragma once

// Deterministic file output: every double goes through format_double, so a
// replayed run produces byte-identical files.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "stogeo/format.hpp"
#include "stogeo/vec3.hpp"

namespace stogeo::cli {

using Json = nlohmann::ordered_json;

Json to_json(const Vec3& v);

void write_json(const std::filesystem::path& path, const Json& j);

// Minimal CSV row builder.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);

  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(std::int64_t x);
  CsvWriter& operator<<(int x) { return *this << static_cast<std::int64_t>(x); }
  CsvWriter& operator<<(std::string_view s);
  CsvWriter& operator<<(const Vec3& v);
  void end_row();

 private:
  void sep();
  std::ofstream out_;
  bool fresh_ = true;
};

std::filesystem::path ensure_dir(const std::filesystem::path& dir);

}  // namespace stogeo::cli
