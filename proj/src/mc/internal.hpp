#ifndef BRANCHEXP_SRC_MC_INTERNAL_HPP
#define BRANCHEXP_SRC_MC_INTERNAL_HPP

#include <bit>
#include <cstdint>
#include <optional>
#include <span>

#include "branchexp/mc.hpp"

namespace branchexp::mc_detail {

// Stream-family tags; each replica's stream id is stream_key(tag, ...).
enum Tag : std::uint64_t {
  kTagEnumerate = 0x656e756d,
  kTagPlainLevel = 0x706c766c,
  kTagTiltedLevel = 0x746c766c,
  kTagLdRate = 0x6c647274,
  kTagBrw = 0x62727721,
};

inline std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

inline std::uint64_t budget_or_default(std::uint64_t budget) {
  return budget == 0 ? default_node_budget() : budget;
}

// AssumptionViolation unless lambda < 1 (the expected counts are infinite
// otherwise).
void require_finite(const SpectralCurve& curve, const char* operation);

// When every label is a.s. below some q < 1, no vertex deeper than
// floor(t / -log q) can qualify; returns that level plus one. Empty otherwise.
std::optional<int> exhaustion_depth(const ModelSpec& model, double t);

// Fisher-Yates over 0..size-1, identical on every platform.
void random_permutation(std::span<int> perm, RandomStream& rng);

// Tilt used to sample the event {S_n >= n z}: the maximizer of the rate
// function at z, or 0 when z is not a large deviation.
double event_tilt(const SpectralCurve& curve, double z);

}  // namespace branchexp::mc_detail

#endif  // BRANCHEXP_SRC_MC_INTERNAL_HPP
