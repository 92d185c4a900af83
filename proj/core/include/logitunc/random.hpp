#pragma once

#include <cstdint>
#include <random>

namespace logitunc {

/// Engine for stream `stream` of master seed `seed`. Independent tasks
/// (restarts, classes, simulated networks) each take their own stream so
/// results never depend on execution order.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// A 64-bit sub-seed for stream `stream`, for handing to APIs that take seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace logitunc
