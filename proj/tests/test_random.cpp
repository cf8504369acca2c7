#include <doctest.h>

#include <cmath>
#include <set>

#include "branchexp/random.hpp"

using namespace branchexp;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using detail::philox4x32;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(42, 7), b(42, 7), c(42, 8), e(43, 7);
  bool all_equal = true, differs_stream = false, differs_seed = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    all_equal = all_equal && x == b.next_u64();
    differs_stream = differs_stream || x != c.next_u64();
    differs_seed = differs_seed || x != e.next_u64();
  }
  CHECK(all_equal);
  CHECK(differs_stream);
  CHECK(differs_seed);

  RandomStream parent(1, 2);
  RandomStream s1 = parent.split(3), s2 = parent.split(3), s3 = parent.split(4);
  CHECK(s1.next_u64() == s2.next_u64());
  CHECK(s1.stream_id() != s3.stream_id());
  CHECK(stream_key(1, 2, 3) != stream_key(1, 3, 2));
}

TEST_CASE("uniform and normal moments") {
  RandomStream rng(5, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
  CHECK(std::fabs(su / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::fabs(sn / n) < 4.0 / std::sqrt(n));
  CHECK(std::fabs(sn2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("below is uniform on 0..n-1") {
  RandomStream rng(9, 1);
  std::array<int, 5> counts{};
  for (int i = 0; i < 50000; ++i) {
    const auto k = rng.below(5);
    REQUIRE(k < 5u);
    ++counts[k];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(chi2 < 18.47);  // 0.999 quantile, 4 degrees of freedom
}
