#ifndef BRANCHEXP_LAWS_HPP
#define BRANCHEXP_LAWS_HPP

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "branchexp/random.hpp"

namespace branchexp {

// Positive random labels with closed-form fractional moments.
//
// Adding a family means supplying, for the new parameter struct: the log
// moment s -> log E[xi^s], the tilted log mean E[xi^s log xi] / E[xi^s],
// the moment domain, a sampler for log(xi) under the s-tilted law, and
// (if bounded) the support of log(xi). The rest of the library only talks
// to LabelLaw through those.

enum class Family { kAtomic, kLogNormal, kLogUniform, kDeterministic };

const char* family_name(Family f) noexcept;

struct AtomicParams {
  std::vector<double> atoms;
  std::vector<double> probs;
  bool operator==(const AtomicParams&) const = default;
};

/// log(xi) ~ Normal(location, scale^2).
struct LogNormalParams {
  double location = 0.0;
  double scale = 1.0;
  bool operator==(const LogNormalParams&) const = default;
};

/// log(xi) ~ Uniform(log_lower, log_upper).
struct LogUniformParams {
  double log_lower = 0.0;
  double log_upper = 1.0;
  bool operator==(const LogUniformParams&) const = default;
};

struct DeterministicParams {
  double value = 1.0;
  bool operator==(const DeterministicParams&) const = default;
};

using LawParams =
    std::variant<AtomicParams, LogNormalParams, LogUniformParams, DeterministicParams>;

/// Interval of s for which E[xi^s] is finite. Endpoints may be infinite.
struct MomentDomain {
  double lower;
  double upper;

  bool contains(double s) const noexcept { return s >= lower && s <= upper; }
  bool interior(double s) const noexcept { return s > lower && s < upper; }
  bool operator==(const MomentDomain&) const = default;
};

class LabelLaw {
 public:
  /// Probabilities off by at most 1e-9 from summing to one are renormalized;
  /// anything further off is rejected.
  static LabelLaw atomic(std::vector<double> atoms, std::vector<double> probs);
  static LabelLaw log_normal(double location, double scale);
  static LabelLaw log_uniform(double log_lower, double log_upper);
  /// Degenerate; admitted for analytic test vectors.
  static LabelLaw deterministic(double value);

  Family family() const noexcept;
  const LawParams& params() const noexcept { return params_; }

  /// True when xi is almost surely constant.
  bool degenerate() const noexcept;

  /// log E[xi^s].
  double log_moment(double s) const;
  /// E[xi^s log xi] / E[xi^s], i.e. the mean of log(xi) under the s-tilt.
  double tilted_log_mean(double s) const;

  MomentDomain domain() const noexcept;

  /// Essential supremum / infimum of log(xi); +-infinity when unbounded.
  double log_support_max() const noexcept;
  double log_support_min() const noexcept;

  /// E|log xi| and E|xi log xi|.
  double abs_log_moment() const;
  double abs_xlogx_moment() const;

  bool operator==(const LabelLaw& other) const { return params_ == other.params_; }

 private:
  explicit LabelLaw(LawParams params);

  LawParams params_;
};

/// E[xi^s]; throws DomainError when s is outside the moment domain.
double moment(const LabelLaw& law, double s);
/// E[xi^s log xi] = d/ds E[xi^s]; throws DomainError outside Int(D).
double moment_logweighted(const LabelLaw& law, double s);
/// One draw of xi.
double sample(const LabelLaw& law, RandomStream& rng);
MomentDomain domain(const LabelLaw& law);

/// Draws log(xi) under the exponentially tilted law
/// P_s(dx) = x^s P(dx) / E[xi^s]. tilt = 0 samples the law itself.
class LogSampler {
 public:
  LogSampler() = default;
  LogSampler(const LabelLaw& law, double tilt);

  double operator()(RandomStream& rng) const;

 private:
  enum class Kind { kAtoms, kNormal, kUniform, kTruncatedExp, kPoint };
  Kind kind_ = Kind::kPoint;
  double a_ = 0.0;  // normal mean / lower end / point
  double b_ = 0.0;  // normal sd / upper end
  double tilt_ = 0.0;
  double span_factor_ = 0.0;  // exp(-|tilt| (b - a)) for the truncated exponential
  std::vector<double> cumulative_;
  std::vector<double> log_atoms_;
};

/// d x d matrix of label laws; entry (i, j) is the law of the label on an
/// edge from a parent of colour i to a child of colour j (0-based here,
/// 1-based in files).
class ModelSpec {
 public:
  ModelSpec(int d, std::vector<LabelLaw> row_major_laws);
  static ModelSpec iid(int d, const LabelLaw& law);

  int dim() const noexcept { return d_; }
  const LabelLaw& law(int parent, int child) const {
    return laws_[static_cast<std::size_t>(parent * d_ + child)];
  }
  const std::vector<LabelLaw>& laws() const noexcept { return laws_; }

  /// Intersection of every entry's moment domain.
  MomentDomain shared_domain() const noexcept;
  /// Every label is a.s. <= 1 (exact tree pruning is sound).
  bool labels_bounded_by_one() const noexcept;
  /// All d^2 laws equal.
  bool is_iid() const noexcept;

  bool operator==(const ModelSpec& other) const = default;

 private:
  int d_;
  std::vector<LabelLaw> laws_;
};

struct EntryConditions {
  int parent = 0;
  int child = 0;
  bool unit_interval_in_domain = false;  // [0,1] in D
  bool zero_in_interior = false;         // 0 in Int(D)
  double abs_log_moment = 0.0;           // E|log xi|
  double abs_xlogx_moment = 0.0;         // E|xi log xi|
  bool log_moment_finite = false;
  bool xlogx_moment_finite = false;
  std::string smoothness;  // class of s -> E[xi^s] on R+
  bool degenerate = false;
};

struct AdmissibilityReport {
  std::vector<EntryConditions> entries;
  bool unit_interval_in_domain = true;
  bool zero_in_interior = true;
  bool log_moment_finite = true;
  bool xlogx_moment_finite = true;
  bool twice_differentiable = true;
  /// Every law is a.s. constant with the same value: Lambda is linear.
  bool degenerate = false;
  /// At least one entry is a.s. constant.
  bool any_degenerate_entry = false;

  bool admissible() const noexcept {
    return unit_interval_in_domain && zero_in_interior && log_moment_finite &&
           xlogx_moment_finite && twice_differentiable;
  }
  std::vector<std::string> failures() const;
};

AdmissibilityReport check_conditions(const ModelSpec& model);

}  // namespace branchexp

#endif  // BRANCHEXP_LAWS_HPP
