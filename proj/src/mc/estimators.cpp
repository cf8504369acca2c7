#include <algorithm>
#include <cmath>
#include <limits>

#include "branchexp/error.hpp"
#include "branchexp/exponents.hpp"
#include "branchexp/kernels.hpp"
#include "branchexp/mc.hpp"
#include "branchexp/parallel.hpp"
#include "internal.hpp"

namespace branchexp {
namespace {

using mc_detail::bits;

constexpr std::size_t kBlock = 2048;
constexpr int kHardDepthLimit = 1000;

std::size_t block_count(std::uint64_t reps) { return (reps + kBlock - 1) / kBlock; }

// Deepest level for which d^n is still a finite double.
int depth_limit(int d) {
  const int by_overflow = static_cast<int>(std::floor(700.0 / std::log(static_cast<double>(d))));
  return std::min(kHardDepthLimit, by_overflow);
}

std::vector<CountResult> level_sums(const SpectralCurve& curve, std::span<const double> t_grid,
                                    std::uint64_t reps, const McOptions& options,
                                    const LevelSumOptions& level_options) {
  const int d = curve.dim();
  const int limit = depth_limit(d);
  int depth = level_options.depth_cap;
  if (depth <= 0) {
    for (double t : t_grid) {
      depth = std::max(depth, depth_for_tail(curve, t, level_options.tail_target,
                                             options.root_colour, limit));
    }
  }
  depth = std::max(1, std::min(depth, limit));
  const auto levels = static_cast<std::size_t>(depth);
  const std::size_t nt = t_grid.size();
  std::vector<double> thresholds(nt), level_weight(levels + 1);
  for (std::size_t k = 0; k < nt; ++k) thresholds[k] = log_threshold(t_grid[k]);
  for (std::size_t n = 0; n <= levels; ++n) level_weight[n] = std::pow(static_cast<double>(d), n);

  const bool tilted = level_options.mode == LevelSumMode::kTilted;
  double s = 0.0;
  if (tilted) s = level_options.tilt ? *level_options.tilt : growth_exponent_spectral(curve);
  const PathSampler sampler = PathSampler::tilted(curve, options.root_colour, s);
  const bool weighted = sampler.tilt() != 0.0;
  const std::uint64_t tag = tilted ? mc_detail::kTagTiltedLevel : mc_detail::kTagPlainLevel;

  const std::size_t blocks = block_count(reps);
  // Per block and t: (sum, sum of squares) of the replica sums Y_r.
  std::vector<double> sums(blocks * nt), sumsqs(blocks * nt);
  parallel_for(blocks, options.workers, [&](std::size_t b) {
    const std::uint64_t first = b * kBlock;
    const std::size_t width =
        static_cast<std::size_t>(std::min<std::uint64_t>(kBlock, reps - first));
    std::vector<double> values(levels * width), path(levels), y(width);
    std::vector<double> weights(weighted ? levels * width : 0);
    std::vector<int> colours(weighted ? levels : 0);
    for (std::size_t r = 0; r < width; ++r) {
      RandomStream rng(options.seed, stream_key(tag, bits(s), first + r));
      sampler.sample(rng, path, colours);
      for (std::size_t n = 0; n < levels; ++n) {
        values[n * width + r] = path[n];
        if (weighted) {
          weights[n * width + r] =
              std::exp(sampler.log_weight(static_cast<int>(n + 1), path[n], colours[n])) *
              level_weight[n + 1];
        }
      }
    }
    for (std::size_t k = 0; k < nt; ++k) {
      std::fill(y.begin(), y.end(), 0.0 >= thresholds[k] ? 1.0 : 0.0);
      for (std::size_t n = 0; n < levels; ++n) {
        const std::span<const double> x(&values[n * width], width);
        if (weighted) {
          kernels::accumulate_weighted(y, x, std::span<const double>(&weights[n * width], width),
                                       thresholds[k]);
        } else {
          kernels::accumulate_indicator(y, x, thresholds[k], level_weight[n + 1]);
        }
      }
      kernels::sum_and_sumsq(y, sums[b * nt + k], sumsqs[b * nt + k]);
    }
  });

  std::vector<CountResult> out;
  const double rn = static_cast<double>(reps);
  for (std::size_t k = 0; k < nt; ++k) {
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
      sum += sums[b * nt + k];
      sumsq += sumsqs[b * nt + k];
    }
    const double mean = sum / rn;
    const double var = reps > 1 ? std::max(0.0, (sumsq - rn * mean * mean) / (rn - 1.0)) : 0.0;
    CountResult c;
    c.t = t_grid[k];
    c.estimator = tilted ? "level-sum-tilted" : "level-sum-plain";
    c.ez_estimate = mean;
    c.std_error = std::sqrt(var / rn);
    c.truncation_depth = depth;
    c.tail_bound = level_sum_tail_bound(curve, t_grid[k], depth, options.root_colour);
    c.reps = reps;
    out.push_back(c);
  }
  return out;
}

struct LevelEstimate {
  double probability = 0.0;
  double variance = 0.0;  // of the probability estimate
};

LevelEstimate summarize(const kernels::TailSums& sums, std::uint64_t reps) {
  LevelEstimate e;
  const double rn = static_cast<double>(reps);
  e.probability = sums.weight / rn;
  if (reps > 1) {
    e.variance = std::max(0.0, (sums.weight_sq / rn - e.probability * e.probability) / (rn - 1.0));
  }
  return e;
}

// Weighted hit sums for P(S_n >= threshold) over replicas
// [first_rep, first_rep + reps) of the stream family (tag, key_a, n).
kernels::TailSums weighted_tail(const PathSampler& sampler, int n, double threshold,
                                std::uint64_t first_rep, std::uint64_t reps, std::uint64_t tag,
                                std::uint64_t key_a, const McOptions& options) {
  const std::size_t blocks = block_count(reps);
  std::vector<kernels::TailSums> partial(blocks);
  parallel_for(blocks, options.workers, [&](std::size_t b) {
    const std::uint64_t start = first_rep + b * kBlock;
    const std::size_t width =
        static_cast<std::size_t>(std::min<std::uint64_t>(kBlock, first_rep + reps - start));
    std::vector<double> path(static_cast<std::size_t>(n)), x(width), w(width);
    for (std::size_t r = 0; r < width; ++r) {
      RandomStream rng(options.seed,
                       stream_key(tag, key_a, static_cast<std::uint64_t>(n), start + r));
      const int last = sampler.sample(rng, path);
      x[r] = path.back();
      w[r] = std::exp(sampler.log_weight(n, x[r], last));
    }
    partial[b] = kernels::weighted_tail_sums(x, w, threshold);
  });
  kernels::TailSums total;
  for (const auto& p : partial) {
    total.weight += p.weight;
    total.weight_sq += p.weight_sq;
    total.count += p.count;
  }
  return total;
}

}  // namespace

std::vector<CountResult> estimate_EZ(const SpectralCurve& curve, std::span<const double> t_grid,
                                     std::uint64_t reps, const McOptions& options,
                                     const LevelSumOptions& level_options) {
  if (reps == 0) throw ValidationError("reps must be >= 1");
  if (t_grid.empty()) return {};
  mc_detail::require_finite(curve, "estimate_EZ");
  return level_sums(curve, t_grid, reps, options, level_options);
}

LdRate estimate_ld_rate(const SpectralCurve& curve, double a, int n, std::uint64_t reps,
                        const McOptions& options, const LdOptions& ld_options) {
  if (n < 1) throw ValidationError("n must be >= 1");
  if (reps == 0) throw ValidationError("reps must be >= 1");
  LdRate out;
  out.a = a;
  out.n = n;
  const RateValue rv = RateFunction(curve)(a);
  out.rate_function = rv.value;
  out.rate_infinite = rv.infinite;
  out.tilt = ld_options.tilt ? mc_detail::event_tilt(curve, a) : 0.0;
  const PathSampler sampler = PathSampler::tilted(curve, options.root_colour, out.tilt);
  const double target = n * a;
  const double threshold = target - 1e-10 * (1.0 + std::fabs(target));

  // Disjoint replica ranges, so doubling keeps the earlier work.
  kernels::TailSums sums;
  std::uint64_t done = 0, batch = reps;
  for (;;) {
    const kernels::TailSums more =
        weighted_tail(sampler, n, threshold, done, batch, mc_detail::kTagLdRate, bits(a), options);
    sums.weight += more.weight;
    sums.weight_sq += more.weight_sq;
    sums.count += more.count;
    done += batch;
    if (sums.count >= ld_options.min_hits) break;
    if (done >= ld_options.max_reps) {
      throw InsufficientHits(std::to_string(sums.count) + " events in " + std::to_string(done) +
                             " replicas for a = " + std::to_string(a) + ", n = " +
                             std::to_string(n));
    }
    batch = std::min(done, ld_options.max_reps - done);
  }
  const LevelEstimate e = summarize(sums, done);
  out.reps = done;
  out.hits = sums.count;
  out.probability = e.probability;
  const double var = e.variance;
  out.empirical_rate = -std::log(out.probability) / n;
  out.std_error = std::sqrt(var) / (n * out.probability);
  return out;
}

std::vector<LdRate> ld_uniform_sweep(const SpectralCurve& curve, double a1, double a2, int points,
                                     int n, std::uint64_t reps, const McOptions& options,
                                     const LdOptions& ld_options) {
  if (points < 1) throw ValidationError("sweep needs at least one point");
  if (points > 1 && !(a2 > a1)) throw ValidationError("sweep needs a1 < a2");
  std::vector<LdRate> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    const double a = points == 1 ? a1 : a1 + (a2 - a1) * k / (points - 1);
    out.push_back(estimate_ld_rate(curve, a, n, reps, options, ld_options));
  }
  return out;
}

}  // namespace branchexp
