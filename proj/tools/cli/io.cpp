#include "cli/io.hpp"

#include "stogeo/errors.hpp"

namespace stogeo::cli {

Json to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::filesystem::path ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
  return dir;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     std::initializer_list<std::string_view> header)
    : out_(path, std::ios::binary) {
  if (!out_) throw Error("cannot write " + path.string());
  for (auto h : header) *this << h;
  end_row();
}

void CsvWriter::sep() {
  if (!fresh_) out_ << ',';
  fresh_ = false;
}

CsvWriter& CsvWriter::operator<<(double x) {
  sep();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::int64_t x) {
  sep();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view s) {
  sep();
  out_ << s;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const Vec3& v) { return *this << v.x << v.y << v.z; }

void CsvWriter::end_row() {
  out_ << '\n';
  fresh_ = true;
}

}  // namespace stogeo::cli
