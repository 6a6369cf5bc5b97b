#pragma once

#include <cmath>
#include <cstdint>

namespace jumpctrl {

// Identifies one noise path inside an ensemble. Streams are derived from the
// pair, never from draw order, so results are independent of scheduling.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

namespace detail {
// Finalizer from splitmix64: bijective avalanche mix of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

// Counter-based generator: state advances by a fixed odd increment and each
// output is a bijective mix of the counter (splitmix64). Per-path substreams
// come from hashing (master_seed, path_index) into the initial counter.
class PathRng {
 public:
  explicit PathRng(SeedSpec s)
      : state_(detail::mix64(s.master_seed) ^
               detail::mix64(detail::mix64(s.path_index + 0x632be59bd9b4e019ull))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return detail::mix64(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log argument.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Two uniforms per draw, no cached spare,
  // so the draw count per sample is fixed and streams stay reproducible.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

 private:
  std::uint64_t state_;
};

}  // namespace jumpctrl
