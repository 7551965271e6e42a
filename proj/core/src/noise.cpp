#include "stogeo/noise.hpp"

#include <cmath>
#include <numbers>

namespace stogeo {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Uniform in the open interval (0, 1) from 64 random bits.
inline double open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter c, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ key[0], lo1, hi0 ^ c[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return c;
}

double NoiseStream::standard_normal(std::uint64_t n) const {
  if (zero_) return 0.0;
  const Philox4x32::Counter counter = {
      static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32),
      static_cast<std::uint32_t>(path_id_),
      static_cast<std::uint32_t>(path_id_ >> 32)};
  const Philox4x32::Key key = {static_cast<std::uint32_t>(seed_),
                               static_cast<std::uint32_t>(seed_ >> 32)};
  const auto bits = Philox4x32::generate(counter, key);
  // Box-Muller, cosine branch.
  const double u1 = open_unit(bits[0], bits[1]);
  const double u2 = open_unit(bits[2], bits[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double NoiseStream::increment(std::uint64_t n, double k) const {
  if (zero_) return 0.0;
  return std::sqrt(k) * standard_normal(n);
}

}  // namespace stogeo
