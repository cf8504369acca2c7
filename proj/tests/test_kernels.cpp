#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "branchexp/kernels.hpp"
#include "branchexp/random.hpp"

using namespace branchexp;
using namespace branchexp::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t stream) {
  RandomStream rng(11, stream);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

bool close(double a, double b) { return std::fabs(a - b) <= 1e-12 * (1.0 + std::fabs(a)); }

}  // namespace

TEST_CASE("dispatch exposes a scalar table") {
  CHECK(scalar_table().isa == Isa::kScalar);
  const auto tables = available_tables();
  REQUIRE(!tables.empty());
  CHECK(tables.front()->isa == Isa::kScalar);
  MESSAGE("active kernels: " << std::string(active().name));
}

TEST_CASE("every kernel table agrees with the scalar reference") {
  const KernelTable& ref = scalar_table();
  for (const KernelTable* table : available_tables()) {
    CAPTURE(table->name);
    // Odd lengths exercise the vector tails.
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 33u, 1001u}) {
      CAPTURE(n);
      const auto x = random_vector(n, 1), w = random_vector(n, 2);
      const double thr = 0.1;

      std::vector<double> a = random_vector(n, 3), b = a;
      ref.add_inplace(a.data(), x.data(), n);
      table->add_inplace(b.data(), x.data(), n);
      CHECK(a == b);

      a = random_vector(n, 4), b = a;
      ref.accumulate_indicator(a.data(), x.data(), n, thr, 2.5);
      table->accumulate_indicator(b.data(), x.data(), n, thr, 2.5);
      CHECK(a == b);

      a = random_vector(n, 5), b = a;
      ref.accumulate_weighted(a.data(), x.data(), w.data(), n, thr);
      table->accumulate_weighted(b.data(), x.data(), w.data(), n, thr);
      CHECK(a == b);

      CHECK(ref.count_at_least(x.data(), n, thr) == table->count_at_least(x.data(), n, thr));
      CHECK(ref.count_at_most(x.data(), n, thr) == table->count_at_most(x.data(), n, thr));

      const TailSums r = ref.weighted_tail_sums(x.data(), w.data(), n, thr);
      const TailSums t = table->weighted_tail_sums(x.data(), w.data(), n, thr);
      CHECK(r.count == t.count);
      CHECK(close(r.weight, t.weight));
      CHECK(close(r.weight_sq, t.weight_sq));

      double s1, q1, s2, q2;
      ref.sum_and_sumsq(x.data(), n, &s1, &q1);
      table->sum_and_sumsq(x.data(), n, &s2, &q2);
      CHECK(close(s1, s2));
      CHECK(close(q1, q2));

      if (n > 0) CHECK(ref.min_value(x.data(), n) == table->min_value(x.data(), n));
      CHECK(close(ref.dot(x.data(), w.data(), n), table->dot(x.data(), w.data(), n)));
    }
  }
}

TEST_CASE("scalar kernels match direct loops") {
  const std::vector<double> x{-1.0, 0.5, 0.5, 2.0, -3.0};
  const std::vector<double> w{1.0, 2.0, 3.0, 4.0, 5.0};
  const KernelTable& k = scalar_table();
  CHECK(k.count_at_least(x.data(), x.size(), 0.5) == 3);
  CHECK(k.count_at_most(x.data(), x.size(), 0.5) == 4);
  const TailSums t = k.weighted_tail_sums(x.data(), w.data(), x.size(), 0.5);
  CHECK(t.weight == 9.0);
  CHECK(t.weight_sq == 29.0);
  CHECK(k.min_value(x.data(), x.size()) == -3.0);
  CHECK(k.dot(x.data(), w.data(), x.size()) == doctest::Approx(-1 + 1 + 1.5 + 8 - 15));
  std::vector<double> y(5, 0.0);
  k.accumulate_weighted(y.data(), x.data(), w.data(), 5, 0.5);
  CHECK(y == std::vector<double>{0, 2, 3, 4, 0});
}
