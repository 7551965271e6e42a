#pragma once

#include <array>
#include <cstdint>

namespace stogeo {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key);
};

// Brownian increments dW_n ~ N(0, k) addressed by (seed, path_id, n).
// The same triple always yields the same increment, so paths can be replayed
// and distributed over any number of workers.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t path_id)
      : seed_(seed), path_id_(path_id) {}

  // Stream that returns dW = 0 for every step (deterministic runs).
  static NoiseStream zero() { return NoiseStream(0, 0, true); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_id() const { return path_id_; }
  bool is_zero() const { return zero_; }

  // Standard normal variate for step n (0-based: the increment W(t_{n+1}) - W(t_n)).
  double standard_normal(std::uint64_t n) const;

  double increment(std::uint64_t n, double k) const;

 private:
  NoiseStream(std::uint64_t seed, std::uint64_t path_id, bool zero)
      : seed_(seed), path_id_(path_id), zero_(zero) {}

  std::uint64_t seed_;
  std::uint64_t path_id_;
  bool zero_ = false;
};

}  // namespace stogeo
