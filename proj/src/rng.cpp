#include "sddestab/rng.hpp"

namespace sddestab {

namespace {

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  __uint128_t p = static_cast<__uint128_t>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64_block(const std::array<std::uint64_t, 2>& key,
                                              const std::array<std::uint64_t, 4>& counter) {
  constexpr std::uint64_t M0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t M1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t W0 = 0x9E3779B97F4A7C15ULL;  // key schedule (Weyl)
  constexpr std::uint64_t W1 = 0xBB67AE8584CAA73BULL;

  std::array<std::uint64_t, 2> k = key;
  std::array<std::uint64_t, 4> c = counter;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += W0;
      k[1] += W1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(M0, c[0], hi0, lo0);
    mulhilo(M1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

void Rng::refill() {
  buf_ = philox4x64_block(key_, ctr_);
  pos_ = 0;
  // 256-bit counter increment
  if (++ctr_[0] == 0)
    if (++ctr_[1] == 0)
      if (++ctr_[2] == 0) ++ctr_[3];
}

}  // namespace sddestab
