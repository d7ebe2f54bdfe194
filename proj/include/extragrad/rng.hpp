#pragma once

#include <cmath>
#include <cstdint>

namespace extragrad {

/// SplitMix64 step, used to derive stream seeds from (base_seed, index) pairs.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Philox4x32-10 counter-based generator. The state is a 128-bit counter and
/// a 64-bit key; advancing means incrementing the counter, so streams are
/// trivially copyable and a (seed, stream) pair always produces the same
/// uniforms no matter which thread consumes them.
class Philox4x32 {
 public:
  Philox4x32() = default;
  explicit Philox4x32(std::uint64_t key)
      : key0_(static_cast<std::uint32_t>(key)), key1_(static_cast<std::uint32_t>(key >> 32)) {}

  /// The pure Philox4x32-10 bijection: 128-bit counter, 64-bit key, 10 rounds.
  static void block(const std::uint32_t ctr[4], const std::uint32_t key[2], std::uint32_t out[4]) {
    std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
    std::uint32_t k0 = key[0], k1 = key[1];
    round(c0, c1, c2, c3, k0, k1);
    for (int r = 1; r < 10; ++r) {
      k0 += kWeyl0;
      k1 += kWeyl1;
      round(c0, c1, c2, c3, k0, k1);
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
  }

  std::uint64_t next_u64() {
    if (word_ == 0) {
      const std::uint32_t ctr[4] = {ctr0_, ctr1_, ctr2_, ctr3_};
      const std::uint32_t key[2] = {key0_, key1_};
      block(ctr, key, buf_);
      bump();
    }
    const std::uint32_t lo = buf_[word_];
    const std::uint32_t hi = buf_[word_ + 1];
    word_ = (word_ + 2) & 3;
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  static void round(std::uint32_t& c0, std::uint32_t& c1, std::uint32_t& c2, std::uint32_t& c3,
                    std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
  }

  void bump() {
    if (++ctr0_ == 0 && ++ctr1_ == 0 && ++ctr2_ == 0) ++ctr3_;
  }

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::uint32_t key0_ = 0, key1_ = 0;
  std::uint32_t ctr0_ = 0, ctr1_ = 0, ctr2_ = 0, ctr3_ = 0;
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int word_ = 0;
};

/// Seeded stream of standard normal variates (Box-Muller on Philox uniforms).
/// Value-copyable: a copy replays the same tail of the sequence.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t key) : engine_(key) {}

  /// Derive a stream injectively from (base_seed, lane, index): lane separates
  /// purposes (replications, diagnostics, ...), index enumerates within a lane.
  static RngStream derive(std::uint64_t base_seed, std::uint64_t lane, std::uint64_t index) {
    std::uint64_t s = splitmix64(base_seed ^ splitmix64(lane));
    s = splitmix64(s ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
    return RngStream(s);
  }

  double uniform() { return engine_.next_double(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = 1.0 - engine_.next_double();
    const double u2 = engine_.next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  Philox4x32 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace extragrad
