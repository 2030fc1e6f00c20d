#pragma once

// Counter-based Philox4x32-10 generator. A stream is fixed by a 64-bit key;
// replication i of a stream reads counters (block, i), so each replication is
// a pure function of (key, i) and scheduling cannot change the output.

#include <array>
#include <cstdint>

#include "ousme/special.hpp"

namespace ousme {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// splitmix64 finalizer; used to derive stream keys from (root seed, tag).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Key for the stream `tag` under `root_seed` (tag separates e.g. the rows of
/// a schedule so they do not share draws).
inline std::uint64_t derive_stream_key(std::uint64_t root_seed, std::uint64_t tag) {
  return mix64(root_seed ^ mix64(tag));
}

/// Sequential reader over one replication's substream.
class Substream {
 public:
  Substream(std::uint64_t key, std::uint64_t replication)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        rep_(replication) {}

  std::uint64_t next_u64() {
    if (used_ == 2) refill();
    const std::uint64_t v =
        (std::uint64_t{buf_[2 * used_ + 1]} << 32) | buf_[2 * used_];
    ++used_;
    return v;
  }

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return normal_quantile(uniform()); }

 private:
  void refill() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(rep_),
                                  static_cast<std::uint32_t>(rep_ >> 32)};
    buf_ = Philox4x32::apply(ctr, key_);
    ++block_;
    used_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t rep_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buf_{};
  int used_ = 2;
};

}  // namespace ousme
