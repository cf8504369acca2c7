#include <algorithm>
#include <cmath>

#include "branchexp/error.hpp"
#include "branchexp/kernels.hpp"
#include "branchexp/mc.hpp"
#include "branchexp/parallel.hpp"
#include "internal.hpp"

namespace branchexp {
namespace {

struct GenerationStats {
  double min = 0.0;
  double q10 = 0.0, q50 = 0.0, q90 = 0.0;
  std::vector<double> counts;  // per t
};

double quantile(std::vector<double>& scratch, double q) {
  const auto k = static_cast<std::size_t>(q * static_cast<double>(scratch.size() - 1));
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
  return scratch[k];
}

}  // namespace

std::vector<BrwSnapshot> simulate_brw(const ModelSpec& model, int n_max, std::uint64_t reps,
                                      const McOptions& options, std::span<const double> t_grid) {
  const int d = model.dim();
  if (n_max < 1) throw ValidationError("n_max must be >= 1");
  if (reps == 0) throw ValidationError("reps must be >= 1");
  if (options.root_colour < 0 || options.root_colour >= d) {
    throw ValidationError("root colour out of range");
  }
  const std::uint64_t budget = mc_detail::budget_or_default(options.node_budget);
  const double last_generation = std::pow(static_cast<double>(d), n_max);
  if (last_generation * static_cast<double>(reps) > static_cast<double>(budget) ||
      last_generation > 4e9) {
    throw MemoryBudgetExceeded("d^n_max * reps = " + std::to_string(last_generation * reps) +
                               " exceeds the budget of " + std::to_string(budget));
  }

  std::vector<LogSampler> laws;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) laws.emplace_back(model.law(i, j), 0.0);
  }
  std::vector<double> limits;
  for (double t : t_grid) limits.push_back(t + 1e-10 * (1.0 + std::fabs(t)));

  const auto gens = static_cast<std::size_t>(n_max);
  std::vector<std::vector<GenerationStats>> per_rep(reps);
  parallel_for(reps, options.workers, [&](std::size_t r) {
    RandomStream rng(options.seed, stream_key(mc_detail::kTagBrw, r));
    std::vector<double> pos{0.0}, next_pos, scratch;
    std::vector<int> col{options.root_colour}, next_col;
    std::vector<int> perm(static_cast<std::size_t>(d));
    auto& stats = per_rep[r];
    stats.resize(gens);
    for (std::size_t g = 0; g < gens; ++g) {
      next_pos.resize(pos.size() * static_cast<std::size_t>(d));
      next_col.resize(next_pos.size());
      std::size_t out = 0;
      for (std::size_t i = 0; i < pos.size(); ++i) {
        mc_detail::random_permutation(perm, rng);
        for (int c : perm) {
          next_pos[out] = pos[i] - laws[static_cast<std::size_t>(col[i] * d + c)](rng);
          next_col[out] = c;
          ++out;
        }
      }
      pos.swap(next_pos);
      col.swap(next_col);

      GenerationStats& s = stats[g];
      s.min = kernels::min_value(pos);
      for (double limit : limits) {
        s.counts.push_back(static_cast<double>(kernels::count_at_most(pos, limit)));
      }
      scratch = pos;
      s.q10 = quantile(scratch, 0.1);
      s.q50 = quantile(scratch, 0.5);
      s.q90 = quantile(scratch, 0.9);
    }
  });

  const double rn = static_cast<double>(reps);
  const std::size_t nt = limits.size();
  std::vector<BrwSnapshot> out(gens);
  std::vector<double> cumulative(reps * nt, 0.0);
  for (std::size_t g = 0; g < gens; ++g) {
    BrwSnapshot& snap = out[g];
    snap.generation = static_cast<int>(g + 1);
    snap.particles = static_cast<std::uint64_t>(std::pow(static_cast<double>(d), g + 1));
    snap.reps = reps;
    snap.mean_count_at_most.assign(nt, 0.0);
    snap.mean_cumulative.assign(nt, 0.0);
    snap.se_cumulative.assign(nt, 0.0);
    double sum = 0.0, sumsq = 0.0;
    std::vector<double> cum_sumsq(nt, 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
      const GenerationStats& s = per_rep[r][g];
      sum += s.min;
      sumsq += s.min * s.min;
      snap.q10 += s.q10 / rn;
      snap.q50 += s.q50 / rn;
      snap.q90 += s.q90 / rn;
      for (std::size_t k = 0; k < nt; ++k) {
        double& c = cumulative[r * nt + k];
        c += s.counts[k];
        snap.mean_count_at_most[k] += s.counts[k] / rn;
        snap.mean_cumulative[k] += c / rn;
        cum_sumsq[k] += c * c;
      }
    }
    snap.mean_min = sum / rn;
    snap.mean_min_over_n = snap.mean_min / static_cast<double>(g + 1);
    if (reps > 1) {
      snap.se_min = std::sqrt(std::max(0.0, (sumsq - rn * snap.mean_min * snap.mean_min) /
                                                (rn - 1.0) / rn));
      for (std::size_t k = 0; k < nt; ++k) {
        const double m = snap.mean_cumulative[k];
        snap.se_cumulative[k] = std::sqrt(std::max(0.0, (cum_sumsq[k] - rn * m * m) / (rn - 1.0) / rn));
      }
    }
  }
  return out;
}

}  // namespace branchexp
