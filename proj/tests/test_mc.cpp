#include <doctest.h>

#include <bit>
#include <cmath>
#include <numbers>

#include "branchexp/error.hpp"
#include "branchexp/exponents.hpp"
#include "branchexp/mc.hpp"
#include "oracles.hpp"

using namespace branchexp;
using doctest::Approx;

namespace {

const double kLn2 = std::numbers::ln2;

ModelSpec gaussian() { return ModelSpec::iid(2, LabelLaw::log_normal(-1.5, 1.0)); }
ModelSpec quarter_half() { return ModelSpec::iid(2, LabelLaw::atomic({0.25, 0.5}, {0.5, 0.5})); }
ModelSpec mixed2() {
  return ModelSpec(2, {LabelLaw::log_normal(-1.0, 0.5), LabelLaw::atomic({0.2, 0.6}, {0.3, 0.7}),
                       LabelLaw::log_uniform(-2.0, -0.2), LabelLaw::log_normal(-2.0, 1.0)});
}
ModelSpec mixed3() {
  std::vector<LabelLaw> laws;
  for (int i = 0; i < 9; ++i) {
    laws.push_back(i % 3 == 0   ? LabelLaw::log_normal(-1.5 - 0.1 * i, 0.7)
                   : i % 3 == 1 ? LabelLaw::atomic({0.1, 0.3 + 0.02 * i}, {0.4, 0.6})
                                : LabelLaw::log_uniform(-2.5, -0.4 - 0.05 * i));
  }
  return ModelSpec(3, laws);
}

McOptions mc(std::uint64_t seed, int workers = 1) {
  McOptions o;
  o.seed = seed;
  o.workers = workers;
  return o;
}

}  // namespace

TEST_CASE("enumerate_Z small cases") {
  RandomStream rng(1, 0);
  // Unbounded labels need an explicit cap; bounded ones are pruned exactly.
  for (const ModelSpec& model : {gaussian(), quarter_half(), mixed2()}) {
    const CountResult r = enumerate_Z(SpectralCurve(model), 0.0, model.labels_bounded_by_one() ? 0 : 8, rng);
    REQUIRE(r.z_value);
    CHECK(*r.z_value >= 1);
  }
  const SpectralCurve half(ModelSpec::iid(2, LabelLaw::deterministic(0.5)));
  const CountResult r = enumerate_Z(half, 3.0 * kLn2, 0, rng);
  CHECK(*r.z_value == 15);
  CHECK(r.exact);
  CHECK(r.tail_bound == 0.0);

  CHECK_THROWS_AS(enumerate_Z(SpectralCurve(ModelSpec::iid(2, LabelLaw::deterministic(2.0))), 1.0, 5, rng),
                  AssumptionViolation);
  McOptions small = mc(1);
  small.node_budget = 100;
  CHECK_THROWS_AS(enumerate_EZ(SpectralCurve(quarter_half()), 12.0 * kLn2, 0, 10, small),
                  MemoryBudgetExceeded);
}

TEST_CASE("lattice DP against the binomial formula") {
  const SpectralCurve q(quarter_half());
  CHECK(lattice_dp_EZ(q, 0.0, 0).value == Approx(1.0).epsilon(1e-15));
  for (int j : {1, 3, 5, 7, 12}) {
    const LatticeLevelSum s = lattice_dp_EZ(q, j * kLn2, 0);
    CHECK(s.value == Approx(oracle::quarter_half_level_sum(j)).epsilon(1e-12));
    CHECK(s.exhausted);
  }
  for (int n : {1, 5, 30}) {
    for (int j : {n, n + 3, 2 * n - 1}) {
      CHECK(lattice_tail_probability(quarter_half(), n, -j * kLn2) ==
            Approx(oracle::quarter_half_tail(n, j)).epsilon(1e-12));
    }
  }
  LatticeWalk walk(quarter_half());
  CHECK(walk.spacing() == Approx(kLn2));
  walk.reset(0);
  for (int k = 0; k < 10; ++k) walk.advance();
  CHECK(walk.level() == 10);
  CHECK(walk.total_mass() == Approx(1.0));
  CHECK_THROWS_AS(LatticeWalk{gaussian()}, NotLattice);
  CHECK_THROWS_AS(LatticeWalk{ModelSpec::iid(2, LabelLaw::atomic({0.5, 1.0 / std::numbers::pi}, {0.5, 0.5}))},
                  NotLattice);
}

TEST_CASE("enumerate_EZ matches the lattice DP") {
  const SpectralCurve q(quarter_half());
  for (int j : {3, 5, 7}) {
    const double t = j * kLn2;
    const CountResult r = enumerate_EZ(q, t, 0, 10000, mc(17));
    CHECK(r.exact);
    const double exact = lattice_dp_EZ(q, t, 0).value;
    CHECK(std::fabs(r.ez_estimate - exact) <= 3.0 * r.std_error);
  }
}

TEST_CASE("tree structure and colouring") {
  RandomStream rng(5, 0);
  const ColoredTree root_only = grow_colored_tree(mixed3(), 0, rng, 2);
  CHECK(root_only.size() == 1);
  CHECK(root_only.colour[0] == 2);

  std::array<int, 3> root_counts{};
  std::array<int, 3> colour_counts{};
  for (int rep = 0; rep < 3000; ++rep) {
    const ColoredTree tree = grow_colored_tree(mixed3(), 3, rng);
    ++root_counts[tree.colour[0]];
    REQUIRE(tree.size() == 1 + 3 + 9 + 27);
    // Children of a vertex are contiguous and carry distinct colours.
    for (std::size_t first = 1; first < tree.size(); first += 3) {
      int mask = 0;
      for (int k = 0; k < 3; ++k) {
        CHECK(tree.parent[first + k] == tree.parent[first]);
        mask |= 1 << tree.colour[first + k];
      }
      CHECK(mask == 7);
    }
    for (std::size_t v = 1; v < tree.size(); ++v) {
      const auto p = static_cast<std::size_t>(tree.parent[v]);
      CHECK(tree.depth[v] == tree.depth[p] + 1);
      CHECK(tree.log_value[v] == Approx(tree.log_value[p] + tree.edge_log_label[v]));
    }
    // Colour of the first child of vertex 1: uniform over colours.
    ++colour_counts[tree.colour[4]];
  }
  for (const auto& counts : {root_counts, colour_counts}) {
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    CHECK(chi2 < 13.8);  // 0.999 quantile, 2 degrees of freedom
  }
}

TEST_CASE("tree counts reproduce the level-sum identity") {
  const oracle::Gaussian o;
  const double t = 3.0;
  const int depth = 8, reps = 4000;
  RandomStream rng(8, 0);
  std::vector<double> sum(depth + 1, 0.0), sumsq(depth + 1, 0.0);
  for (int r = 0; r < reps; ++r) {
    const auto counts = grow_colored_tree(gaussian(), depth, rng).level_counts(t);
    for (int n = 0; n <= depth; ++n) {
      sum[n] += counts[n];
      sumsq[n] += static_cast<double>(counts[n]) * counts[n];
    }
  }
  for (int n = 0; n <= depth; ++n) {
    const double mean = sum[n] / reps;
    const double se = std::sqrt(std::max(sumsq[n] / reps - mean * mean, 0.0) / reps);
    const double expected = std::pow(2.0, n) * o.tail(n, -t);
    CAPTURE(n);
    CHECK(std::fabs(mean - expected) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("path sampler moments") {
  const ModelSpec model = mixed2();
  const SpectralCurve curve(model);
  const int n = 6, reps = 200000;
  const double s = 0.5;
  const PathSampler plain(model, 1);
  const PathSampler tilted = PathSampler::tilted(curve, 1, 0.9);
  RandomStream rng(21, 0);
  std::vector<double> path(n);
  double plain_sum = 0.0, plain_sq = 0.0, weight_sum = 0.0, weight_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    plain.sample(rng, path);
    const double e = std::exp(s * path[n - 1]);
    plain_sum += e;
    plain_sq += e * e;
    const int last = tilted.sample(rng, path);
    const double w = std::exp(tilted.log_weight(n, path[n - 1], last));
    weight_sum += w;
    weight_sq += w * w;
  }
  const double mean = plain_sum / reps;
  const double se = std::sqrt((plain_sq / reps - mean * mean) / reps);
  CHECK(std::fabs(mean - level_moment(model, s, n, 1)) <= 4.0 * se);
  // Likelihood ratios average to one.
  const double wm = weight_sum / reps;
  const double wse = std::sqrt((weight_sq / reps - wm * wm) / reps);
  CHECK(std::fabs(wm - 1.0) <= 4.0 * wse);
}

TEST_CASE("Chernoff tail bound") {
  const oracle::Gaussian o;
  const SpectralCurve g(gaussian());
  for (double t : {0.0, 5.0, 20.0}) {
    for (int cap : {-1, 10, 40}) {
      const double bound = level_sum_tail_bound(g, t, cap, 0);
      // The test-side bound fixes s at the minimiser of rho; the library
      // optimises over s and can only be tighter.
      const double at_min = std::exp(1.5 * t) * std::pow(o.lambda(), cap + 1) / (1.0 - o.lambda());
      CHECK(bound <= at_min * (1.0 + 1e-9));
      double actual = 0.0;
      for (int n = cap + 1; n < cap + 400; ++n) actual += std::pow(2.0, n) * o.tail(n, -t);
      CHECK(actual <= bound);
    }
  }
  const int depth = depth_for_tail(g, 10.0, 1e-9, 0);
  CHECK(level_sum_tail_bound(g, 10.0, depth, 0) <= 1e-9);
  CHECK(level_sum_tail_bound(g, 10.0, depth - 1, 0) > 1e-9);
  CHECK(level_sum_tail_bound(SpectralCurve(ModelSpec::iid(2, LabelLaw::log_normal(-0.5, 1.0))), 1.0, 10, 0) ==
        INFINITY);
}

TEST_CASE("estimate_EZ against the Gaussian level sum") {
  const oracle::Gaussian o;
  const SpectralCurve g(gaussian());
  const std::vector<double> t_grid{0.0, 10.0};
  const auto plain = estimate_EZ(g, t_grid, 100000, mc(3));
  REQUIRE(plain.size() == 2);
  CHECK(plain[0].estimator == "level-sum-plain");
  for (const auto& r : plain) {
    CAPTURE(r.t);
    CHECK(std::fabs(r.ez_estimate - o.level_sum(r.t)) <= 3.0 * r.std_error);
    CHECK(r.tail_bound <= 1e-9);
  }

  LevelSumOptions tilted;
  tilted.mode = LevelSumMode::kTilted;
  const std::vector<double> grid{5.0, 10.0, 15.0, 20.0, 25.0};
  const auto est = estimate_EZ(g, grid, 20000, mc(4), tilted);
  std::vector<double> x, y;
  for (const auto& r : est) {
    CAPTURE(r.t);
    CHECK(r.estimator == "level-sum-tilted");
    CHECK(std::fabs(r.ez_estimate - o.level_sum(r.t)) <= 3.0 * r.std_error);
    x.push_back(r.t);
    y.push_back(std::log(r.ez_estimate));
  }
  CHECK(least_squares_slope(x, y) == Approx(oracle::least_squares_slope(x, y)).epsilon(1e-12));
  CHECK(std::fabs(least_squares_slope(x, y) / o.s1() - 1.0) <= 0.1);

  CHECK_THROWS_AS(estimate_EZ(SpectralCurve(ModelSpec::iid(2, LabelLaw::deterministic(2.0))), grid, 10, mc(1)),
                  AssumptionViolation);
}

TEST_CASE("plain and tilted estimators agree on colour-dependent models") {
  for (const ModelSpec& model : {mixed2(), mixed3()}) {
    const SpectralCurve curve(model);
    const std::vector<double> grid{1.0, 3.0};
    LevelSumOptions tilted;
    tilted.mode = LevelSumMode::kTilted;
    for (int root = 0; root < model.dim(); ++root) {
      McOptions o = mc(9);
      o.root_colour = root;
      const auto a = estimate_EZ(curve, grid, 50000, o);
      const auto b = estimate_EZ(curve, grid, 50000, o, tilted);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(std::fabs(a[k].ez_estimate - b[k].ez_estimate) <=
              4.0 * std::hypot(a[k].std_error, b[k].std_error));
      }
    }
  }
}

TEST_CASE("results do not depend on the worker count") {
  const SpectralCurve g(gaussian());
  const std::vector<double> grid{2.0, 6.0};
  LevelSumOptions tilted;
  tilted.mode = LevelSumMode::kTilted;
  const auto a = estimate_EZ(g, grid, 5000, mc(77, 1), tilted);
  const auto b = estimate_EZ(g, grid, 5000, mc(77, 4), tilted);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(std::bit_cast<std::uint64_t>(a[k].ez_estimate) == std::bit_cast<std::uint64_t>(b[k].ez_estimate));
    CHECK(std::bit_cast<std::uint64_t>(a[k].std_error) == std::bit_cast<std::uint64_t>(b[k].std_error));
  }
  const SpectralCurve q(quarter_half());
  CHECK(enumerate_EZ(q, 4 * kLn2, 0, 500, mc(5, 1)).ez_estimate ==
        enumerate_EZ(q, 4 * kLn2, 0, 500, mc(5, 3)).ez_estimate);
  const auto ba = simulate_brw(gaussian(), 8, 20, mc(6, 1));
  const auto bb = simulate_brw(gaussian(), 8, 20, mc(6, 4));
  CHECK(ba.back().mean_min == bb.back().mean_min);
}

TEST_CASE("large-deviation rates") {
  const SpectralCurve q(quarter_half());
  const double a = -1.2 * kLn2;
  const int n = 30;
  const double exact = lattice_tail_probability(quarter_half(), n, n * a);
  for (bool tilt : {false, true}) {
    LdOptions ld;
    ld.tilt = tilt;
    const LdRate r = estimate_ld_rate(q, a, n, 20000, mc(12), ld);
    CHECK(r.hits >= 100);
    CHECK(std::fabs(r.empirical_rate + std::log(exact) / n) <= 3.0 * r.std_error);
  }

  // At the drift the finite-n rate goes to zero.
  const SpectralCurve g(gaussian());
  double previous = INFINITY;
  for (int m : {10, 40, 160}) {
    const LdRate r = estimate_ld_rate(g, -1.5, m, 20000, mc(13));
    CHECK(r.empirical_rate < previous);
    CHECK(r.rate_function == Approx(0.0).scale(1.0));
    previous = r.empirical_rate;
  }
  CHECK(previous < 0.01);

  LdOptions ld;
  ld.tilt = true;
  const oracle::Gaussian o;
  const LdRate r = estimate_ld_rate(g, -0.9294, 40, 20000, mc(14), ld);
  CHECK(r.rate_function == Approx(o.rate(-0.9294)).epsilon(1e-9));
  CHECK(std::fabs(r.empirical_rate + std::log(o.tail(40, 40 * -0.9294)) / 40) <= 3.0 * r.std_error);
  CHECK(std::fabs(r.empirical_rate - r.rate_function) <= 3.0 * r.std_error + 0.1);

  LdOptions strict;
  strict.max_reps = 1000;
  CHECK_THROWS_AS(estimate_ld_rate(g, -0.2, 40, 100, mc(1), strict), InsufficientHits);

  const auto sweep = ld_uniform_sweep(g, -1.4, -0.6, 5, 40, 10000, mc(2), ld);
  REQUIRE(sweep.size() == 5);
  CHECK(sweep.front().a == Approx(-1.4));
  CHECK(sweep.back().a == Approx(-0.6));
}

TEST_CASE("branching random walk") {
  const double c = 0.8;
  const auto det = simulate_brw(ModelSpec::iid(2, LabelLaw::deterministic(std::exp(-c))), 6, 3, mc(1));
  REQUIRE(det.size() == 6);
  for (const auto& s : det) CHECK(s.mean_min_over_n == Approx(c).epsilon(1e-12));

  // The speed equation evaluated at the observed min/n approaches zero.
  const SpectralCurve g(gaussian());
  const auto rows = simulate_brw(gaussian(), 16, 20, mc(2));
  double previous = INFINITY;
  for (int n : {4, 8, 16}) {
    const double residual = std::fabs(std::expm1(brw_log_infimum(g, rows[n - 1].mean_min_over_n)));
    CHECK(residual < previous);
    previous = residual;
  }
  CHECK(rows.back().particles == (1u << 16));
  CHECK(rows.back().q10 <= rows.back().q50);
  CHECK(rows.back().q50 <= rows.back().q90);

  McOptions tiny = mc(3);
  tiny.node_budget = 1000;
  CHECK_THROWS_AS(simulate_brw(gaussian(), 12, 10, tiny), MemoryBudgetExceeded);
}

TEST_CASE("occupation counts follow the truncated level sum") {
  const oracle::Gaussian o;
  const int n_max = 18;
  const std::vector<double> grid{2.0, 4.0, 6.0, 8.0, 10.0};
  const auto rows = simulate_brw(gaussian(), n_max, 20, mc(4), grid);
  std::vector<double> logs;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double expected = 0.0;
    for (int n = 1; n <= n_max; ++n) expected += std::pow(2.0, n) * o.tail(n, -grid[k]);
    const double got = rows.back().mean_cumulative[k];
    CAPTURE(grid[k]);
    CHECK(std::fabs(got - expected) <= 4.0 * rows.back().se_cumulative[k]);
    logs.push_back(std::log(got));
  }
  CHECK(std::fabs(least_squares_slope(grid, logs) / o.s1() - 1.0) <= 0.1);
}
