#include "cli/options.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "stogeo/errors.hpp"
#include "stogeo/format.hpp"

namespace stogeo::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\"'[]()");
  const auto e = s.find_last_not_of(" \t\"'[]()");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw UsageError("not a number: '" + raw + "'");
  }
  return x;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(trim(text), ',')) {
    if (!trim(part).empty()) out.push_back(parse_number(part));
  }
  if (out.empty()) throw UsageError("empty list: '" + text + "'");
  return out;
}

Vec3 parse_vec3(const std::string& text) {
  const auto xs = parse_list(text);
  if (xs.size() != 3) throw UsageError("expected three components: '" + text + "'");
  return {xs[0], xs[1], xs[2]};
}

SphereGrid parse_grid(const std::string& text) {
  const auto parts = split(trim(text), 'x');
  if (parts.size() != 2) throw UsageError("grid must look like 36x72: '" + text + "'");
  SphereGrid g;
  g.n_lat = static_cast<int>(parse_number(parts[0]));
  g.n_lon = static_cast<int>(parse_number(parts[1]));
  g.validate();
  return g;
}

std::vector<double> parse_schedule(const std::string& text, double T) {
  const std::string s = trim(text);
  if (s.find(':') == std::string::npos) return parse_list(s);
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw UsageError("schedule must be start:stop:step");
  const auto value = [&](const std::string& p) {
    return trim(p) == "T" ? T : parse_number(p);
  };
  const double start = value(parts[0]);
  const double stop = value(parts[1]);
  const double step = value(parts[2]);
  if (!(step > 0.0) || stop < start) throw UsageError("bad schedule '" + text + "'");
  std::vector<double> out;
  const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9));
  for (std::int64_t i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

Scheme parse_scheme(const std::string& text) {
  if (text == "implicit") return Scheme::implicit;
  if (text == "em") return Scheme::euler_maruyama;
  throw UsageError("unknown scheme '" + text + "' (implicit or em)");
}

std::string format_vec3(const Vec3& v) {
  return format_double(v.x) + "," + format_double(v.y) + "," + format_double(v.z);
}

}  // namespace stogeo::cli
