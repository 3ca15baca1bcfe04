#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sgmcmc {

// Counter-based pseudo-random stream built on the splitmix64 finalizer.
// A stream is fully determined by (seed, stream_id, substream): chains own a
// stream_id, and data draws / Gaussian noise / initialization live on
// disjoint substreams so a refactor of one consumer never perturbs another.
class RngStream {
 public:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t substream)
      : state_(derive(seed, stream_id, substream)) {}

  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return finalize(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); never returns exactly zero.
  double next_uniform_open() {
    double u = next_uniform();
    return u > 0.0 ? u : 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes two uniforms per pair and
  // caches the spare, so the draw sequence is deterministic per stream.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform_open();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  static constexpr const char* gaussian_method() { return "box-muller(splitmix64)"; }

 private:
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream_id,
                              std::uint64_t substream) {
    std::uint64_t h = finalize(seed + kGolden);
    h = finalize(h + stream_id * 0xd1b54a32d192ed03ULL + kGolden);
    h = finalize(h + substream * 0x8cb92ba72f3d8dd7ULL + kGolden);
    return h;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Substream roles shared across the library.
enum class Substream : std::uint64_t {
  kData = 0,   // oracle data draws
  kNoise = 1,  // injected Gaussian noise of the recursion
  kInit = 2,   // initial state sampling
  kAux = 3,    // module-local auxiliary randomness
};

inline RngStream make_stream(std::uint64_t seed, std::uint64_t chain_id, Substream role) {
  return RngStream(seed, chain_id, static_cast<std::uint64_t>(role));
}

}  // namespace sgmcmc
