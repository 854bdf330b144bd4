#pragma once

#include <cmath>
#include <cstdint>

namespace fbmstm {

// Counter-based random stream (SplitMix64 sequence). Draw i is a pure
// function of (master_seed, stream_id, i), so paths can be assigned to any
// worker in any order and still reproduce bit-identically.
class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : state_(derive_key(master_seed, stream_id)) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // Uniform in (0, 1]; never returns 0, so log() of the result is finite.
  double next_unit() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second member of each pair is cached.
  double next_normal() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * kPi * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

  static std::uint64_t derive_key(std::uint64_t master_seed,
                                  std::uint64_t stream_id) noexcept {
    std::uint64_t k = mix64(master_seed ^ 0x8AF8F3B0E5A2D7C1ull);
    k = mix64(k + 0x9E3779B97F4A7C15ull * (stream_id + 1));
    return k;
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fbmstm
