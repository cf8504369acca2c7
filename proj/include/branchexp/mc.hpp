#ifndef BRANCHEXP_MC_HPP
#define BRANCHEXP_MC_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "branchexp/laws.hpp"
#include "branchexp/random.hpp"
#include "branchexp/spectral.hpp"

namespace branchexp {

// Monte Carlo and exact oracles for the coloured tree.
//
// Colours are 0-based. Every stochastic routine derives one RandomStream
// per replica from McOptions::seed, so results do not depend on the number
// of workers.

struct McOptions {
  std::uint64_t seed = 0;
  int workers = 1;
  int root_colour = 0;
  std::uint64_t node_budget = 0;  // 0: default_node_budget()
};

/// 1e8 particle-steps, or BRANCH_EXPONENT_BUDGET when set.
std::uint64_t default_node_budget();

/// Log-value threshold for "xi[u] >= e^{-t}", widened by a relative 1e-10
/// so that exact lattice values are not lost to rounding.
inline double log_threshold(double t) { return -t - 1e-10 * (1.0 + std::fabs(t)); }

/// Samples S_1..S_n along one root-to-level-n path. Child colours are
/// i.i.d. uniform after the root (one slot of a uniform permutation).
///
/// A tilted sampler draws from the exponentially twisted path measure at
/// tilt s: colour kernel q_ij = m_ij(s) v_j / (rho(s) v_i) with v the right
/// Perron vector, labels from the s-tilted laws. log_weight() returns
/// log dP/dP_s of a path: n Lambda(s) + log v_root - log v_end - s S_n.
class PathSampler {
 public:
  PathSampler(const ModelSpec& model, int root_colour);
  static PathSampler tilted(const SpectralCurve& curve, int root_colour, double s);

  int dim() const noexcept { return d_; }
  int root_colour() const noexcept { return root_; }
  double tilt() const noexcept { return tilt_; }

  /// Fills partial sums (and, if non-empty, the colour of each vertex on
  /// the path); returns the colour of the last vertex.
  int sample(RandomStream& rng, std::span<double> partial_sums,
             std::span<int> colours = {}) const;
  double log_weight(int n, double s_n, int final_colour) const;

 private:
  PathSampler() = default;

  int d_ = 0;
  int root_ = 0;
  double tilt_ = 0.0;
  double cumulant_ = 0.0;
  std::vector<LogSampler> samplers_;   // d x d
  std::vector<double> transition_cdf_; // d x d rows; empty for uniform
  std::vector<double> log_right_;
};

struct CountResult {
  double t = 0.0;
  std::string estimator;
  std::optional<std::uint64_t> z_value;  // single realization
  double ez_estimate = 0.0;
  double std_error = 0.0;
  int truncation_depth = 0;
  double tail_bound = 0.0;  // bound on the expected mass beyond the cap
  bool exact = false;       // nothing was cut at the cap
  std::uint64_t reps = 0;
};

/// Chernoff bound on sum_{n > cap} d^n P(S_n >= -t):
/// min over s with rho(s) < 1 of e^{st} (v_root / min v) rho(s)^{cap+1} / (1 - rho(s)).
/// +infinity when lambda >= 1.
double level_sum_tail_bound(const SpectralCurve& curve, double t, int cap, int root_colour);
/// Smallest cap whose tail bound is <= target (capped at max_depth).
int depth_for_tail(const SpectralCurve& curve, double t, double target, int root_colour,
                   int max_depth = 1000);

/// One realization of Z(e^{-t}) grown depth first with randomized colouring.
/// Subtrees are pruned exactly when every label is a.s. <= 1; otherwise the
/// tree is cut at depth_cap and the Chernoff tail bound is attached.
CountResult enumerate_Z(const SpectralCurve& curve, double t, int depth_cap, RandomStream& rng,
                        std::uint64_t node_budget = 0, int root_colour = 0);
/// Mean of enumerate_Z over independent replicas.
CountResult enumerate_EZ(const SpectralCurve& curve, double t, int depth_cap,
                         std::uint64_t reps, const McOptions& options);

/// Exact law of (colour, S_n) for models whose log-labels sit on a common
/// lattice spacing * Z.
class LatticeWalk {
 public:
  /// Throws NotLattice for non-atomic laws or incommensurable log-atoms.
  explicit LatticeWalk(const ModelSpec& model);

  double spacing() const noexcept { return spacing_; }
  int level() const noexcept { return level_; }
  void reset(int root_colour);
  void advance();
  /// P(S_n >= threshold) at the current level.
  double tail_probability(double threshold) const;
  /// Drop states below the threshold; sound only when no step is positive.
  void discard_below(double threshold);
  bool steps_nonpositive() const noexcept { return max_step_ <= 0; }
  double total_mass() const;

 private:
  struct Step {
    std::int64_t k;
    double prob;  // includes the 1/d colour choice
  };
  int d_;
  double spacing_ = 1.0;
  std::int64_t max_step_ = 0;
  std::int64_t min_step_ = 0;
  std::vector<std::vector<Step>> steps_;  // d x d
  int level_ = 0;
  std::int64_t offset_ = 0;               // lattice index of slot 0
  std::vector<std::vector<double>> mass_; // per colour, per lattice slot
};

struct LatticeLevelSum {
  double value = 0.0;  // sum_{n <= levels} d^n P(S_n >= -t)
  double tail_bound = 0.0;
  int levels = 0;
  bool exhausted = false;  // no mass can reach the threshold past `levels`
  std::vector<double> level_probabilities;
};

/// Exact level sum by dynamic programming. n_max <= 0 picks the depth
/// whose Chernoff tail is below 1e-12.
LatticeLevelSum lattice_dp_EZ(const SpectralCurve& curve, double t, int n_max, int root_colour = 0);
/// Exact P(S_n >= threshold).
double lattice_tail_probability(const ModelSpec& model, int n, double threshold,
                                int root_colour = 0);

enum class LevelSumMode { kPlain, kTilted };

struct LevelSumOptions {
  LevelSumMode mode = LevelSumMode::kPlain;
  int depth_cap = 0;          // 0: deepest level whose tail bound exceeds tail_target
  double tail_target = 1e-9;
  std::optional<double> tilt; // tilted mode; default: the smaller root of rho(s) = 1
};

/// E[Z(e^{-t})] = sum_n d^n P(S_n >= -t), estimated from one set of paths
/// shared by every level and every t. Each replica contributes
/// Y = sum_n w_n 1{S_n >= -t}; the standard error is that of the mean of Y.
///
/// Plain mode: uniform colours, w_n = d^n. Tilted mode: paths under the
/// exponential tilt at s with w_n = d^n e^{n Lambda(s)} (v_root / v_end)
/// e^{-s S_n}. At the default s (rho(s) = 1) the d^n factor cancels and every
/// w_n on the event is at most e^{st} v_root / min v.
std::vector<CountResult> estimate_EZ(const SpectralCurve& curve, std::span<const double> t_grid,
                                     std::uint64_t reps, const McOptions& options,
                                     const LevelSumOptions& level_options = {});

struct LdOptions {
  bool tilt = false;
  std::uint64_t min_hits = 100;
  std::uint64_t max_reps = std::uint64_t{1} << 26;
};

struct LdRate {
  double a = 0.0;
  int n = 0;
  double probability = 0.0;     // estimate of P(S_n / n >= a)
  double empirical_rate = 0.0;  // -(1/n) log probability
  double std_error = 0.0;       // of empirical_rate
  std::uint64_t reps = 0;
  std::uint64_t hits = 0;
  double tilt = 0.0;
  double rate_function = 0.0;   // Lambda*(a)
  bool rate_infinite = false;
};

/// Empirical large-deviation rate. Replicas double until min_hits events
/// are seen (InsufficientHits past max_reps).
LdRate estimate_ld_rate(const SpectralCurve& curve, double a, int n, std::uint64_t reps,
                        const McOptions& options, const LdOptions& ld_options = {});
/// estimate_ld_rate over `points` equally spaced a in [a1, a2].
std::vector<LdRate> ld_uniform_sweep(const SpectralCurve& curve, double a1, double a2, int points,
                                     int n, std::uint64_t reps, const McOptions& options,
                                     const LdOptions& ld_options = {});

struct BrwSnapshot {
  int generation = 0;
  std::uint64_t particles = 0;  // per replica
  std::uint64_t reps = 0;
  double mean_min = 0.0;
  double se_min = 0.0;
  double mean_min_over_n = 0.0;
  std::vector<double> mean_count_at_most;   // #{X <= t} this generation, per t
  std::vector<double> mean_cumulative;      // summed over generations 1..n, per t
  std::vector<double> se_cumulative;
  double q10 = 0.0, q50 = 0.0, q90 = 0.0;   // position quantiles, averaged over replicas
};

/// Full-population multi-type branching random walk with jumps
/// eta = -log(xi) and types given by the randomized colouring.
/// Requires d^n_max * reps <= node budget.
std::vector<BrwSnapshot> simulate_brw(const ModelSpec& model, int n_max, std::uint64_t reps,
                                      const McOptions& options,
                                      std::span<const double> t_grid = {});

/// Explicit realization of the first `depth` levels, breadth first. The
/// children of a vertex are contiguous and carry a uniform permutation of
/// the colours.
struct ColoredTree {
  int d = 0;
  std::vector<std::int64_t> parent;
  std::vector<int> colour;
  std::vector<int> depth;
  std::vector<double> edge_log_label;  // log label on the edge to the parent; 0 at the root
  std::vector<double> log_value;       // log xi[u]

  std::size_t size() const noexcept { return parent.size(); }
  /// Z(e^{-t}) restricted to the realized levels.
  std::uint64_t count_at_least(double t) const;
  std::vector<std::uint64_t> level_counts(double t) const;
};

ColoredTree grow_colored_tree(const ModelSpec& model, int depth, RandomStream& rng,
                              std::optional<int> root_colour = std::nullopt,
                              std::uint64_t node_budget = 0);

/// Ordinary least-squares slope of y on x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

}  // namespace branchexp

#endif  // BRANCHEXP_MC_HPP
