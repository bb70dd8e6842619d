#pragma once

#include <cmath>
#include <cstdint>

namespace mfcg::rng {

// SplitMix64 step. Used both as the stream generator and as the key mixer,
// so streams derived from distinct (seed, purpose, step, index) tuples are
// decorrelated and reproducible independently of thread scheduling.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s = h ^ (b + 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(a, b), c);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                         std::uint64_t d) {
  return mix(mix(a, b, c), d);
}

// Stream purposes. Keys derived as mix(seed, purpose, ...) so no two
// subsystems ever share a sequence.
enum Purpose : std::uint64_t {
  kParamInit = 1,
  kInitialStates = 2,
  kInitialParticles = 3,
  kEnvNoise = 4,
  kActionNoise = 5,
  kLangevin = 6,
  kHutchinson = 7,
  kPermutation = 8,
};

// Small stateful generator over a derived key. Normals come from Box-Muller
// with the spare cached, so one stream yields an i.i.d. N(0,1) sequence.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform on (0, 1]; never returns 0 so log() below is safe
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// one-shot normal for per-element draws keyed by (seed, purpose, step, index)
inline double normal_at(std::uint64_t key) {
  Stream s(key);
  return s.next_normal();
}

}  // namespace mfcg::rng
