#ifndef BRANCHEXP_RANDOM_HPP
#define BRANCHEXP_RANDOM_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace branchexp {

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is addressed by (seed, stream id); the i-th 128-bit block is a
/// pure function of (seed, stream id, i), so streams can be created for any
/// replica without coordination and results are reproducible bit for bit.
/// Derived streams are obtained with split(), which hashes the child index
/// into a fresh stream id.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  RandomStream split(std::uint64_t child) const noexcept;

  std::uint64_t next_u64() noexcept;
  result_type operator()() noexcept { return next_u64(); }
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal (Box-Muller; the second variate of each pair is cached).
  double normal() noexcept;
  /// Uniform integer in [0, n); n > 0.
  std::uint32_t below(std::uint32_t n) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

namespace detail {
/// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);
}  // namespace detail

/// 64-bit finalizer (splitmix64); used to derive stream ids from tags.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stream id for a tagged family of replicas, e.g. stream_key(kTagBrw, rep).
std::uint64_t stream_key(std::uint64_t tag, std::uint64_t a,
                         std::uint64_t b = 0, std::uint64_t c = 0) noexcept;

}  // namespace branchexp

#endif  // BRANCHEXP_RANDOM_HPP
