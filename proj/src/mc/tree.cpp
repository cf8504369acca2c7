#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "branchexp/error.hpp"
#include "branchexp/exponents.hpp"
#include "branchexp/kernels.hpp"
#include "branchexp/mc.hpp"
#include "branchexp/optimize.hpp"
#include "branchexp/parallel.hpp"
#include "internal.hpp"

namespace branchexp {
using mc_detail::random_permutation;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_colour(int colour, int d) {
  if (colour < 0 || colour >= d) {
    throw ValidationError("root colour " + std::to_string(colour + 1) + " outside 1.." +
                          std::to_string(d));
  }
}

// Range of s on which rho(s) < 1.
struct ChernoffWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool valid = false;
};

ChernoffWindow chernoff_window(const SpectralCurve& curve) {
  const LambdaInfimum& li = curve.lambda_inf();
  ChernoffWindow w;
  if (!(li.lambda < 1.0)) return w;
  auto f = [&](double s) { return curve.log_rho(s); };
  w.lo = bisect_root(f, 0.0, li.s_argmin, 1e-13);
  const double s_max = curve.options().s_max();
  w.hi = (li.at_boundary || f(s_max) < 0.0) ? s_max : bisect_root(f, li.s_argmin, s_max, 1e-13);
  w.valid = w.hi > w.lo;
  return w;
}

double log_tail_bound_at(const SpectralCurve& curve, double s, double t, int cap, int root) {
  const double log_rho = curve.log_rho(s);
  if (!(log_rho < 0.0)) return kInf;
  const PerronTriple p = curve.perron_at(s);
  const double v_min = *std::min_element(p.right.begin(), p.right.end());
  const double log_kappa = std::log(p.right[static_cast<std::size_t>(root)] / v_min);
  return s * t + log_kappa + (cap + 1.0) * log_rho - std::log(-std::expm1(log_rho));
}

double tail_bound_in(const SpectralCurve& curve, const ChernoffWindow& w, double t, int cap,
                     int root) {
  if (!w.valid) return kInf;
  // The threshold in use is slightly below -t.
  const double t_eff = -log_threshold(t);
  auto f = [&](double s) { return log_tail_bound_at(curve, s, t_eff, cap, root); };
  const double eps = 1e-9 * (w.hi - w.lo);
  double best = f(curve.lambda_inf().s_argmin);
  const auto opt = golden_section_minimize(f, w.lo + eps, w.hi - eps, 1e-9);
  best = std::min(best, opt.value);
  return std::exp(best);
}

}  // namespace

std::uint64_t default_node_budget() {
  constexpr std::uint64_t kDefault = 100'000'000;
  const char* env = std::getenv("BRANCH_EXPONENT_BUDGET");
  if (env == nullptr || *env == '\0') return kDefault;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || end == env || *end != '\0' || v == 0) {
    throw ValidationError(std::string("BRANCH_EXPONENT_BUDGET must be a positive integer, got '") +
                          env + "'");
  }
  return v;
}

namespace mc_detail {

std::optional<int> exhaustion_depth(const ModelSpec& model, double t) {
  double top = -INFINITY;
  for (const LabelLaw& law : model.laws()) top = std::max(top, law.log_support_max());
  if (!(top < 0.0)) return std::nullopt;
  const double levels = std::floor(-log_threshold(t) / -top);
  if (levels > 1e6) return std::nullopt;
  return static_cast<int>(levels) + 1;
}

void require_finite(const SpectralCurve& curve, const char* operation) {
  const Regime r = classify(curve);
  if (r != Regime::kFinite) {
    throw AssumptionViolation(std::string(operation) + " needs lambda < 1; regime " +
                              regime_name(r) + ", lambda = " +
                              std::to_string(curve.lambda_inf().lambda));
  }
}

void random_permutation(std::span<int> perm, RandomStream& rng) {
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t k = perm.size(); k > 1; --k) {
    const std::size_t r = rng.below(static_cast<std::uint32_t>(k));
    std::swap(perm[k - 1], perm[r]);
  }
}

double event_tilt(const SpectralCurve& curve, double z) {
  if (z <= curve.cumulant_slope(0.0)) return 0.0;
  const RateValue r = RateFunction(curve)(z);
  return r.infinite ? curve.options().s_max() : r.s0;
}

}  // namespace mc_detail

// ---------------------------------------------------------------------------
// PathSampler

PathSampler::PathSampler(const ModelSpec& model, int root_colour)
    : d_(model.dim()), root_(root_colour) {
  check_colour(root_colour, d_);
  samplers_.reserve(static_cast<std::size_t>(d_ * d_));
  for (int i = 0; i < d_; ++i) {
    for (int j = 0; j < d_; ++j) samplers_.emplace_back(model.law(i, j), 0.0);
  }
}

PathSampler PathSampler::tilted(const SpectralCurve& curve, int root_colour, double s) {
  if (s == 0.0) return PathSampler(curve.model(), root_colour);
  const ModelSpec& model = curve.model();
  PathSampler out;
  out.d_ = model.dim();
  out.root_ = root_colour;
  check_colour(root_colour, out.d_);
  out.tilt_ = s;
  const SpectralPoint p = curve.point(s);
  out.cumulant_ = curve.cumulant(s);
  const auto d = static_cast<std::size_t>(out.d_);
  out.transition_cdf_.resize(d * d);
  out.log_right_.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.log_right_[i] = std::log(p.scaled.right[i]);
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      acc += p.scaled_m(static_cast<int>(i), static_cast<int>(j)) * p.scaled.right[j];
      out.transition_cdf_[i * d + j] = acc;
    }
    for (std::size_t j = 0; j < d; ++j) out.transition_cdf_[i * d + j] /= acc;
    out.transition_cdf_[i * d + d - 1] = 1.0;
  }
  out.samplers_.reserve(d * d);
  for (int i = 0; i < out.d_; ++i) {
    for (int j = 0; j < out.d_; ++j) out.samplers_.emplace_back(model.law(i, j), s);
  }
  return out;
}

int PathSampler::sample(RandomStream& rng, std::span<double> partial_sums,
                        std::span<int> colours) const {
  int c = root_;
  double sum = 0.0;
  const auto d = static_cast<std::size_t>(d_);
  const bool keep_colours = !colours.empty();
  for (std::size_t k = 0; k < partial_sums.size(); ++k) {
    int next;
    if (transition_cdf_.empty()) {
      next = static_cast<int>(rng.below(static_cast<std::uint32_t>(d_)));
    } else {
      const double u = rng.uniform();
      const double* row = transition_cdf_.data() + static_cast<std::size_t>(c) * d;
      next = static_cast<int>(std::upper_bound(row, row + d - 1, u) - row);
    }
    sum += samplers_[static_cast<std::size_t>(c) * d + static_cast<std::size_t>(next)](rng);
    partial_sums[k] = sum;
    if (keep_colours) colours[k] = next;
    c = next;
  }
  return c;
}

double PathSampler::log_weight(int n, double s_n, int final_colour) const {
  if (tilt_ == 0.0) return 0.0;
  return n * cumulant_ + log_right_[static_cast<std::size_t>(root_)] -
         log_right_[static_cast<std::size_t>(final_colour)] - tilt_ * s_n;
}

// ---------------------------------------------------------------------------
// Tail bounds

double level_sum_tail_bound(const SpectralCurve& curve, double t, int cap, int root_colour) {
  check_colour(root_colour, curve.dim());
  return tail_bound_in(curve, chernoff_window(curve), t, cap, root_colour);
}

int depth_for_tail(const SpectralCurve& curve, double t, double target, int root_colour,
                   int max_depth) {
  check_colour(root_colour, curve.dim());
  const ChernoffWindow w = chernoff_window(curve);
  if (!w.valid) return max_depth;
  auto ok = [&](int cap) { return tail_bound_in(curve, w, t, cap, root_colour) <= target; };
  if (ok(0)) return 0;
  int hi = 1;
  while (!ok(hi)) {
    if (hi >= max_depth) return max_depth;
    hi = std::min(2 * hi, max_depth);
  }
  int lo = hi / 2;  // !ok(lo) unless lo == 0, which was checked
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------
// Direct enumeration

namespace {

struct Enumeration {
  std::uint64_t count = 0;
  bool truncated = false;
};

Enumeration enumerate_once(const ModelSpec& model, double t, int depth_cap, RandomStream& rng,
                           std::uint64_t node_budget, int root_colour) {
  const int d = model.dim();
  std::vector<LogSampler> laws;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) laws.emplace_back(model.law(i, j), 0.0);
  }
  const bool prune = model.labels_bounded_by_one();
  const double thr = log_threshold(t);

  struct Node {
    double log_value;
    int colour;
    int depth;
  };
  std::vector<Node> stack{{0.0, root_colour, 0}};
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::uint64_t count = 0.0 >= thr ? 1 : 0;
  std::uint64_t visited = 1;
  bool truncated = false;
  while (!stack.empty()) {
    const Node node = stack.back();
    stack.pop_back();
    if (node.depth == depth_cap) {
      truncated = true;
      continue;
    }
    random_permutation(perm, rng);
    for (int k = 0; k < d; ++k) {
      const int child = perm[static_cast<std::size_t>(k)];
      const double value =
          node.log_value + laws[static_cast<std::size_t>(node.colour * d + child)](rng);
      const bool hit = value >= thr;
      if (hit) ++count;
      if (prune && !hit) continue;
      if (++visited > node_budget) {
        throw MemoryBudgetExceeded("enumeration visited more than " +
                                   std::to_string(node_budget) + " nodes");
      }
      stack.push_back({value, child, node.depth + 1});
    }
  }
  return {count, truncated};
}

}  // namespace

CountResult enumerate_Z(const SpectralCurve& curve, double t, int depth_cap, RandomStream& rng,
                        std::uint64_t node_budget, int root_colour) {
  check_colour(root_colour, curve.dim());
  mc_detail::require_finite(curve, "enumerate_Z");
  node_budget = mc_detail::budget_or_default(node_budget);
  if (depth_cap <= 0) {
    depth_cap = mc_detail::exhaustion_depth(curve.model(), t)
                    .value_or(depth_for_tail(curve, t, 1e-9, root_colour));
  }
  const auto [count, truncated] =
      enumerate_once(curve.model(), t, depth_cap, rng, node_budget, root_colour);

  CountResult out;
  out.t = t;
  out.estimator = "enumerate";
  out.z_value = count;
  out.ez_estimate = static_cast<double>(count);
  out.truncation_depth = depth_cap;
  out.exact = !truncated;
  out.tail_bound = truncated ? level_sum_tail_bound(curve, t, depth_cap, root_colour) : 0.0;
  out.reps = 1;
  return out;
}

CountResult enumerate_EZ(const SpectralCurve& curve, double t, int depth_cap,
                         std::uint64_t reps, const McOptions& options) {
  if (reps == 0) throw ValidationError("reps must be >= 1");
  check_colour(options.root_colour, curve.dim());
  mc_detail::require_finite(curve, "enumerate_EZ");
  if (depth_cap <= 0) {
    depth_cap = mc_detail::exhaustion_depth(curve.model(), t)
                    .value_or(depth_for_tail(curve, t, 1e-9, options.root_colour));
  }
  const std::uint64_t budget = mc_detail::budget_or_default(options.node_budget);
  std::vector<double> z(reps);
  std::vector<char> exact(reps);
  parallel_for(reps, options.workers, [&](std::size_t r) {
    RandomStream rng(options.seed, stream_key(mc_detail::kTagEnumerate, mc_detail::bits(t), r));
    const Enumeration one =
        enumerate_once(curve.model(), t, depth_cap, rng, budget, options.root_colour);
    z[r] = static_cast<double>(one.count);
    exact[r] = one.truncated ? 0 : 1;
  });
  double sum = 0.0, sumsq = 0.0;
  kernels::sum_and_sumsq(z, sum, sumsq);
  const double n = static_cast<double>(reps);
  const double mean = sum / n;
  const double var = reps > 1 ? std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0)) : 0.0;

  CountResult out;
  out.t = t;
  out.estimator = "enumerate";
  out.ez_estimate = mean;
  out.std_error = std::sqrt(var / n);
  out.truncation_depth = depth_cap;
  out.exact = std::all_of(exact.begin(), exact.end(), [](char e) { return e != 0; });
  out.tail_bound = out.exact ? 0.0 : level_sum_tail_bound(curve, t, depth_cap, options.root_colour);
  out.reps = reps;
  return out;
}

// ---------------------------------------------------------------------------
// Explicit trees

ColoredTree grow_colored_tree(const ModelSpec& model, int depth, RandomStream& rng,
                              std::optional<int> root_colour, std::uint64_t node_budget) {
  const int d = model.dim();
  if (depth < 0) throw ValidationError("depth must be >= 0");
  node_budget = mc_detail::budget_or_default(node_budget);
  double total = 0.0, level = 1.0;
  for (int k = 0; k <= depth; ++k, level *= d) total += level;
  if (total > static_cast<double>(node_budget)) {
    throw MemoryBudgetExceeded("tree of depth " + std::to_string(depth) + " has " +
                               std::to_string(total) + " vertices");
  }
  const int root = root_colour ? *root_colour
                               : static_cast<int>(rng.below(static_cast<std::uint32_t>(d)));
  check_colour(root, d);

  std::vector<LogSampler> laws;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) laws.emplace_back(model.law(i, j), 0.0);
  }
  ColoredTree tree;
  tree.d = d;
  const auto n = static_cast<std::size_t>(total);
  tree.parent.reserve(n);
  tree.colour.reserve(n);
  tree.depth.reserve(n);
  tree.edge_log_label.reserve(n);
  tree.log_value.reserve(n);
  tree.parent.push_back(-1);
  tree.colour.push_back(root);
  tree.depth.push_back(0);
  tree.edge_log_label.push_back(0.0);
  tree.log_value.push_back(0.0);

  std::vector<int> perm(static_cast<std::size_t>(d));
  std::size_t level_begin = 0;
  for (int k = 0; k < depth; ++k) {
    const std::size_t level_end = tree.size();
    for (std::size_t v = level_begin; v < level_end; ++v) {
      random_permutation(perm, rng);
      for (int c : perm) {
        const double y = laws[static_cast<std::size_t>(tree.colour[v] * d + c)](rng);
        tree.parent.push_back(static_cast<std::int64_t>(v));
        tree.colour.push_back(c);
        tree.depth.push_back(k + 1);
        tree.edge_log_label.push_back(y);
        tree.log_value.push_back(tree.log_value[v] + y);
      }
    }
    level_begin = level_end;
  }
  return tree;
}

std::uint64_t ColoredTree::count_at_least(double t) const {
  return kernels::count_at_least(log_value, log_threshold(t));
}

std::vector<std::uint64_t> ColoredTree::level_counts(double t) const {
  const double thr = log_threshold(t);
  const int max_depth = depth.empty() ? -1 : *std::max_element(depth.begin(), depth.end());
  std::vector<std::uint64_t> out(static_cast<std::size_t>(max_depth + 1), 0);
  for (std::size_t v = 0; v < size(); ++v) {
    if (log_value[v] >= thr) ++out[static_cast<std::size_t>(depth[v])];
  }
  return out;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("least squares needs two or more (x, y) pairs of equal length");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw ValidationError("least squares: x values are all equal");
  return sxy / sxx;
}

}  // namespace branchexp
