#ifndef SDDESTAB_RNG_HPP
#define SDDESTAB_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace sddestab {

// Counter-based generator: Philox4x64-10. Chosen over <random> engines because
// every Monte Carlo path must own an independent, reproducible stream derived
// from (master seed, path index), and because std::normal_distribution is not
// bit-identical across standard library implementations. One 256-bit counter
// block yields four 64-bit words; the key encodes seed and stream identity.
std::array<std::uint64_t, 4> philox4x64_block(const std::array<std::uint64_t, 2>& key,
                                              const std::array<std::uint64_t, 4>& counter);

class Rng {
 public:
  // stream 0: mode-path sampling; stream 1: Gaussian increments. Further
  // streams are free for future use; path_index separates ensemble members.
  Rng(std::uint64_t seed, std::uint32_t path_index, std::uint32_t stream)
      : key_{seed, (static_cast<std::uint64_t>(path_index) << 8) | stream} {}

  std::uint64_t next_u64() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  // uniform on [0, 1), 53 random bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1], for safe logarithms
  double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  // standard normal via Box-Muller (explicit, hence portable bit-for-bit)
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

 private:
  void refill();

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> ctr_{0, 0, 0, 0};
  std::array<std::uint64_t, 4> buf_{};
  int pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sddestab

#endif
