#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace rsspde {

// Counter-based random numbers (Philox 4x32-10).  Every 128-bit output block
// is a pure function of (seed, stream, channel, block index), so draws can be
// replayed or consumed out of order without shared state.  One stream per
// trajectory; within a stream the four noise sources live on disjoint
// channels so enabling or disabling one source never perturbs the others.

namespace philox {

constexpr uint32_t kWeyl0 = 0x9E3779B9u;  // golden ratio
constexpr uint32_t kWeyl1 = 0xBB67AE85u;  // sqrt(3) - 1
constexpr uint32_t kMult0 = 0xD2511F53u;
constexpr uint32_t kMult1 = 0xCD9E8D57u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  uint64_t p = static_cast<uint64_t>(a) * static_cast<uint64_t>(b);
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

inline std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr,
                                     std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMult0, ctr[0], hi0, lo0);
    mulhilo(kMult1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace philox

enum class Channel : uint32_t {
  kWiener = 0,
  kSmallJump = 1,
  kLargeJump = 2,
  kRegime = 3,
  kProbe = 4,        // checker / sampling helpers
  kPermutation = 5,  // permutation tests
  kInit = 6,         // initial-condition draws
};

// One channel of one stream.  Sequential draws advance an internal cursor;
// keyed draws (gaussian_at) address an explicit (slot, lane) block so the
// value for a given slot/lane never depends on how many modes are active.
// A channel must be used either sequentially or keyed, not both.
class Rng {
 public:
  Rng(uint64_t seed, uint32_t stream, Channel channel)
      : seed_(seed), stream_(stream), channel_(static_cast<uint32_t>(channel)) {}

  std::array<uint32_t, 4> block_at(uint64_t index) const {
    std::array<uint32_t, 4> ctr = {
        static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32),
        channel_, stream_};
    std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed_),
                                   static_cast<uint32_t>(seed_ >> 32)};
    return philox::block(ctr, key);
  }

  uint32_t next_u32() {
    if (pos_ == 4) {
      buf_ = block_at(cursor_++);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  uint64_t next_u64() {
    uint64_t lo = next_u32();
    uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // uniform on [0, 1), 53-bit resolution
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1]; safe as a log() argument
  double next_unit_open() { return 1.0 - next_double(); }

  double next_exponential(double rate) { return -std::log(next_unit_open()) / rate; }

  double next_gaussian() {
    double u1 = next_unit_open();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // standard normal addressed by (slot, lane); slot < 2^48, lane < 2^16
  double gaussian_at(uint64_t slot, uint32_t lane) const {
    std::array<uint32_t, 4> b = block_at((slot << 16) | static_cast<uint64_t>(lane));
    uint64_t w1 = (static_cast<uint64_t>(b[1]) << 32) | b[0];
    uint64_t w2 = (static_cast<uint64_t>(b[3]) << 32) | b[2];
    double u1 = 1.0 - static_cast<double>(w1 >> 11) * 0x1.0p-53;
    double u2 = static_cast<double>(w2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // next keyed slot for gaussian_at; independent of the sequential cursor
  uint64_t take_slot() { return keyed_cursor_++; }

  uint64_t seed() const { return seed_; }
  uint32_t stream() const { return stream_; }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  uint64_t seed_;
  uint32_t stream_;
  uint32_t channel_;
  uint64_t cursor_ = 0;
  uint64_t keyed_cursor_ = 0;
  std::array<uint32_t, 4> buf_{};
  int pos_ = 4;
};

// The four noise sources of one trajectory.
struct TrajectoryStreams {
  Rng wiener;
  Rng small_jump;
  Rng large_jump;
  Rng regime;

  TrajectoryStreams(uint64_t seed, uint32_t stream)
      : wiener(seed, stream, Channel::kWiener),
        small_jump(seed, stream, Channel::kSmallJump),
        large_jump(seed, stream, Channel::kLargeJump),
        regime(seed, stream, Channel::kRegime) {}
};

}  // namespace rsspde
