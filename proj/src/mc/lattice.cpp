#include <algorithm>
#include <cmath>
#include <map>

#include "branchexp/error.hpp"
#include "branchexp/mc.hpp"
#include "internal.hpp"

namespace branchexp {
namespace {

constexpr int kMaxDenominator = 64;
constexpr double kLatticeTol = 1e-9;
constexpr std::int64_t kMaxStepIndex = 100000;

struct Atoms {
  std::vector<double> log_atoms;
  std::vector<double> probs;
};

Atoms atoms_of(const LabelLaw& law) {
  if (const auto* a = std::get_if<AtomicParams>(&law.params())) {
    Atoms out;
    for (double x : a->atoms) out.log_atoms.push_back(std::log(x));
    out.probs = a->probs;
    return out;
  }
  if (const auto* p = std::get_if<DeterministicParams>(&law.params())) {
    return {{std::log(p->value)}, {1.0}};
  }
  throw NotLattice(std::string(family_name(law.family())) + " law has no lattice support");
}

// Smallest spacing base/q (q <= 64, base = smallest nonzero |log atom|)
// that puts every log-atom on the lattice.
double find_spacing(const std::vector<double>& logs) {
  double base = 0.0;
  for (double x : logs) {
    if (x != 0.0 && (base == 0.0 || std::fabs(x) < base)) base = std::fabs(x);
  }
  if (base == 0.0) return 1.0;
  for (int q = 1; q <= kMaxDenominator; ++q) {
    const double delta = base / q;
    const bool fits = std::all_of(logs.begin(), logs.end(), [&](double x) {
      const double r = x / delta;
      return std::fabs(r - std::round(r)) <= kLatticeTol * std::max(1.0, std::fabs(r));
    });
    if (fits) return delta;
  }
  throw NotLattice("log-atoms are not commensurable with denominator <= 64");
}

}  // namespace

LatticeWalk::LatticeWalk(const ModelSpec& model) : d_(model.dim()) {
  std::vector<Atoms> per_entry;
  std::vector<double> all_logs;
  for (const LabelLaw& law : model.laws()) {
    per_entry.push_back(atoms_of(law));
    const auto& l = per_entry.back().log_atoms;
    all_logs.insert(all_logs.end(), l.begin(), l.end());
  }
  spacing_ = find_spacing(all_logs);
  steps_.resize(per_entry.size());
  bool first = true;
  for (std::size_t e = 0; e < per_entry.size(); ++e) {
    std::map<std::int64_t, double> merged;
    for (std::size_t a = 0; a < per_entry[e].log_atoms.size(); ++a) {
      const double r = std::round(per_entry[e].log_atoms[a] / spacing_);
      if (std::fabs(r) > static_cast<double>(kMaxStepIndex)) {
        throw NotLattice("lattice spacing too fine for the atom range");
      }
      merged[static_cast<std::int64_t>(r)] += per_entry[e].probs[a] / d_;
    }
    for (const auto& [k, p] : merged) {
      if (p <= 0.0) continue;
      steps_[e].push_back({k, p});
      if (first) {
        max_step_ = min_step_ = k;
        first = false;
      }
      max_step_ = std::max(max_step_, k);
      min_step_ = std::min(min_step_, k);
    }
  }
  reset(0);
}

void LatticeWalk::reset(int root_colour) {
  if (root_colour < 0 || root_colour >= d_) throw ValidationError("root colour out of range");
  level_ = 0;
  offset_ = 0;
  mass_.assign(static_cast<std::size_t>(d_), std::vector<double>(1, 0.0));
  mass_[static_cast<std::size_t>(root_colour)][0] = 1.0;
}

void LatticeWalk::advance() {
  const std::size_t width = mass_[0].size();
  const auto span = static_cast<std::size_t>(max_step_ - min_step_);
  std::vector<std::vector<double>> next(static_cast<std::size_t>(d_),
                                        std::vector<double>(width + span, 0.0));
  for (int i = 0; i < d_; ++i) {
    const auto& from = mass_[static_cast<std::size_t>(i)];
    for (std::size_t x = 0; x < width; ++x) {
      const double m = from[x];
      if (m == 0.0) continue;
      for (int j = 0; j < d_; ++j) {
        auto& to = next[static_cast<std::size_t>(j)];
        for (const Step& st : steps_[static_cast<std::size_t>(i * d_ + j)]) {
          to[x + static_cast<std::size_t>(st.k - min_step_)] += m * st.prob;
        }
      }
    }
  }
  mass_ = std::move(next);
  offset_ += min_step_;
  ++level_;

  // Trim slots that are empty for every colour.
  std::size_t lo = mass_[0].size(), hi = 0;
  for (const auto& row : mass_) {
    for (std::size_t x = 0; x < row.size(); ++x) {
      if (row[x] != 0.0) {
        lo = std::min(lo, x);
        hi = std::max(hi, x + 1);
      }
    }
  }
  if (lo >= hi) {
    for (auto& row : mass_) row.assign(1, 0.0);
    return;
  }
  for (auto& row : mass_) row = std::vector<double>(row.begin() + lo, row.begin() + hi);
  offset_ += static_cast<std::int64_t>(lo);
}

namespace {
std::int64_t first_index_at_or_above(double threshold, double spacing) {
  return static_cast<std::int64_t>(std::ceil(threshold / spacing - kLatticeTol));
}
}  // namespace

double LatticeWalk::tail_probability(double threshold) const {
  const std::int64_t k0 = first_index_at_or_above(threshold, spacing_);
  double p = 0.0;
  for (const auto& row : mass_) {
    for (std::size_t x = 0; x < row.size(); ++x) {
      if (offset_ + static_cast<std::int64_t>(x) >= k0) p += row[x];
    }
  }
  return std::min(p, 1.0);
}

void LatticeWalk::discard_below(double threshold) {
  const std::int64_t k0 = first_index_at_or_above(threshold, spacing_);
  for (auto& row : mass_) {
    for (std::size_t x = 0; x < row.size(); ++x) {
      if (offset_ + static_cast<std::int64_t>(x) < k0) row[x] = 0.0;
    }
  }
}

double LatticeWalk::total_mass() const {
  double total = 0.0;
  for (const auto& row : mass_) {
    for (double m : row) total += m;
  }
  return total;
}

LatticeLevelSum lattice_dp_EZ(const SpectralCurve& curve, double t, int n_max, int root_colour) {
  LatticeWalk walk(curve.model());
  walk.reset(root_colour);
  if (n_max <= 0) {
    n_max = std::max(depth_for_tail(curve, t, 1e-12, root_colour),
                     mc_detail::exhaustion_depth(curve.model(), t).value_or(0));
  }
  const double log_d = std::log(static_cast<double>(curve.dim()));
  const double threshold = -t;

  LatticeLevelSum out;
  const double p0 = walk.tail_probability(threshold);
  out.level_probabilities.push_back(p0);
  out.value = p0;
  for (int n = 1; n <= n_max; ++n) {
    walk.advance();
    if (walk.steps_nonpositive()) {
      walk.discard_below(threshold);
      if (walk.total_mass() == 0.0) {
        out.exhausted = true;
        break;
      }
    }
    const double p = walk.tail_probability(threshold);
    out.level_probabilities.push_back(p);
    out.levels = n;
    if (p > 0.0) out.value += std::exp(n * log_d + std::log(p));
  }
  out.tail_bound = out.exhausted ? 0.0 : level_sum_tail_bound(curve, t, out.levels, root_colour);
  return out;
}

double lattice_tail_probability(const ModelSpec& model, int n, double threshold, int root_colour) {
  if (n < 0) throw ValidationError("level must be >= 0");
  LatticeWalk walk(model);
  walk.reset(root_colour);
  for (int k = 0; k < n; ++k) walk.advance();
  return walk.tail_probability(threshold);
}

}  // namespace branchexp
