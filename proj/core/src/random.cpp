#include "logitunc/random.hpp"

#include <array>

namespace logitunc {

namespace {

std::seed_seq make_seq(std::uint64_t seed, std::uint64_t stream) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream),
                       static_cast<std::uint32_t>(stream >> 32)};
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  auto seq = make_seq(seed, stream);
  return std::mt19937_64(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  auto seq = make_seq(seed, stream);
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace logitunc
