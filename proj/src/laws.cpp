#include "branchexp/laws.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "branchexp/error.hpp"

namespace branchexp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// log(sinh(x) / x), stable for small and large |x|.
double log_sinhc(double x) {
  const double ax = std::fabs(x);
  if (ax < 1e-4) return x * x / 6.0;
  return ax + std::log1p(-std::exp(-2.0 * ax)) - std::numbers::ln2 - std::log(ax);
}

// Langevin function coth(x) - 1/x.
double langevin(double x) {
  const double ax = std::fabs(x);
  if (ax < 1e-3) {
    const double x2 = x * x;
    return x * (1.0 / 3.0 - x2 / 45.0 + 2.0 * x2 * x2 / 945.0);
  }
  return 1.0 / std::tanh(x) - 1.0 / x;
}

// E|Y| for Y ~ Normal(m, sigma^2).
double normal_abs_mean(double m, double sigma) {
  const double z = m / sigma;
  return sigma * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * z * z) +
         m * std::erf(z / std::numbers::sqrt2);
}

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + " must be finite");
  return v;
}

}  // namespace

const char* family_name(Family f) noexcept {
  switch (f) {
    case Family::kAtomic: return "Atomic";
    case Family::kLogNormal: return "LogNormal";
    case Family::kLogUniform: return "LogUniform";
    case Family::kDeterministic: return "Deterministic";
  }
  return "?";
}

LabelLaw::LabelLaw(LawParams params) : params_(std::move(params)) {}

LabelLaw LabelLaw::atomic(std::vector<double> atoms, std::vector<double> probs) {
  std::vector<std::string> problems;
  if (atoms.empty()) problems.push_back("Atomic law needs at least one atom");
  if (atoms.size() != probs.size()) {
    problems.push_back("Atomic law has " + std::to_string(atoms.size()) + " atoms but " +
                       std::to_string(probs.size()) + " probabilities");
  }
  for (double a : atoms) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      problems.push_back("atoms must be finite and strictly positive");
      break;
    }
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      problems.push_back("probabilities must be finite and nonnegative");
      break;
    }
    total += p;
  }
  if (problems.empty()) {
    const double off = std::fabs(total - 1.0);
    if (off > 1e-9) {
      problems.push_back("probabilities sum to " + std::to_string(total) + ", not 1");
    } else if (off > 1e-12) {
      for (double& p : probs) p /= total;
    }
  }
  if (!problems.empty()) throw ValidationError(problems);
  return LabelLaw(AtomicParams{std::move(atoms), std::move(probs)});
}

LabelLaw LabelLaw::log_normal(double location, double scale) {
  finite_or_throw(location, "LogNormal location");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ValidationError("LogNormal scale must be finite and > 0");
  }
  return LabelLaw(LogNormalParams{location, scale});
}

LabelLaw LabelLaw::log_uniform(double log_lower, double log_upper) {
  finite_or_throw(log_lower, "LogUniform lower log-endpoint");
  finite_or_throw(log_upper, "LogUniform upper log-endpoint");
  if (!(log_lower < log_upper)) {
    throw ValidationError("LogUniform needs log_lower < log_upper");
  }
  return LabelLaw(LogUniformParams{log_lower, log_upper});
}

LabelLaw LabelLaw::deterministic(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ValidationError("Deterministic value must be finite and > 0");
  }
  return LabelLaw(DeterministicParams{value});
}

Family LabelLaw::family() const noexcept {
  return static_cast<Family>(params_.index());
}

bool LabelLaw::degenerate() const noexcept {
  return log_support_min() == log_support_max();
}

double LabelLaw::log_moment(double s) const {
  if (s == 0.0) return 0.0;
  return std::visit(
      Overloaded{
          [s](const AtomicParams& p) {
            double peak = -kInf;
            for (std::size_t k = 0; k < p.atoms.size(); ++k) {
              if (p.probs[k] > 0.0) peak = std::max(peak, s * std::log(p.atoms[k]));
            }
            double acc = 0.0;
            for (std::size_t k = 0; k < p.atoms.size(); ++k) {
              if (p.probs[k] > 0.0) acc += p.probs[k] * std::exp(s * std::log(p.atoms[k]) - peak);
            }
            return peak + std::log(acc);
          },
          [s](const LogNormalParams& p) {
            return p.location * s + 0.5 * p.scale * p.scale * s * s;
          },
          [s](const LogUniformParams& p) {
            const double centre = 0.5 * (p.log_lower + p.log_upper);
            const double half = 0.5 * (p.log_upper - p.log_lower);
            return s * centre + log_sinhc(s * half);
          },
          [s](const DeterministicParams& p) { return s * std::log(p.value); },
      },
      params_);
}

double LabelLaw::tilted_log_mean(double s) const {
  return std::visit(
      Overloaded{
          [s](const AtomicParams& p) {
            double peak = -kInf;
            for (std::size_t k = 0; k < p.atoms.size(); ++k) {
              if (p.probs[k] > 0.0) peak = std::max(peak, s * std::log(p.atoms[k]));
            }
            double num = 0.0, den = 0.0;
            for (std::size_t k = 0; k < p.atoms.size(); ++k) {
              if (p.probs[k] <= 0.0) continue;
              const double la = std::log(p.atoms[k]);
              const double w = p.probs[k] * std::exp(s * la - peak);
              num += w * la;
              den += w;
            }
            return num / den;
          },
          [s](const LogNormalParams& p) { return p.location + p.scale * p.scale * s; },
          [s](const LogUniformParams& p) {
            const double centre = 0.5 * (p.log_lower + p.log_upper);
            const double half = 0.5 * (p.log_upper - p.log_lower);
            return centre + half * langevin(s * half);
          },
          [](const DeterministicParams& p) { return std::log(p.value); },
      },
      params_);
}

MomentDomain LabelLaw::domain() const noexcept {
  // Every shipped family has a finite moment generating function for log(xi).
  return MomentDomain{-kInf, kInf};
}

double LabelLaw::log_support_max() const noexcept {
  return std::visit(
      Overloaded{
          [](const AtomicParams& p) {
            double m = -kInf;
            for (std::size_t k = 0; k < p.atoms.size(); ++k) {
              if (p.probs[k] > 0.0) m = std::max(m, std::log(p.atoms[k]));
            }
            return m;
          },
          [](const LogNormalParams&) { return kInf; },
          [](const LogUniformParams& p) { return p.log_upper; },
          [](const DeterministicParams& p) { return std::log(p.value); },
      },
      params_);
}

double LabelLaw::log_support_min() const noexcept {
  return std::visit(
      Overloaded{
          [](const AtomicParams& p) {
            double m = kInf;
            for (std::size_t k = 0; k < p.atoms.size(); ++k) {
              if (p.probs[k] > 0.0) m = std::min(m, std::log(p.atoms[k]));
            }
            return m;
          },
          [](const LogNormalParams&) { return -kInf; },
          [](const LogUniformParams& p) { return p.log_lower; },
          [](const DeterministicParams& p) { return std::log(p.value); },
      },
      params_);
}

double LabelLaw::abs_log_moment() const {
  return std::visit(
      Overloaded{
          [](const AtomicParams& p) {
            double acc = 0.0;
            for (std::size_t k = 0; k < p.atoms.size(); ++k) {
              acc += p.probs[k] * std::fabs(std::log(p.atoms[k]));
            }
            return acc;
          },
          [](const LogNormalParams& p) { return normal_abs_mean(p.location, p.scale); },
          [](const LogUniformParams& p) {
            const double a = p.log_lower, b = p.log_upper;
            if (a >= 0.0) return 0.5 * (a + b);
            if (b <= 0.0) return -0.5 * (a + b);
            return (a * a + b * b) / (2.0 * (b - a));
          },
          [](const DeterministicParams& p) { return std::fabs(std::log(p.value)); },
      },
      params_);
}

double LabelLaw::abs_xlogx_moment() const {
  return std::visit(
      Overloaded{
          [](const AtomicParams& p) {
            double acc = 0.0;
            for (std::size_t k = 0; k < p.atoms.size(); ++k) {
              acc += p.probs[k] * p.atoms[k] * std::fabs(std::log(p.atoms[k]));
            }
            return acc;
          },
          [](const LogNormalParams& p) {
            const double v = p.scale * p.scale;
            return std::exp(p.location + 0.5 * v) * normal_abs_mean(p.location + v, p.scale);
          },
          [](const LogUniformParams& p) {
            // Antiderivative of y e^y is (y - 1) e^y.
            auto F = [](double y) { return (y - 1.0) * std::exp(y); };
            const double a = p.log_lower, b = p.log_upper;
            double acc = 0.0;
            if (b > 0.0) acc += F(b) - F(std::max(a, 0.0));
            if (a < 0.0) acc -= F(std::min(b, 0.0)) - F(a);
            return acc / (b - a);
          },
          [](const DeterministicParams& p) { return p.value * std::fabs(std::log(p.value)); },
      },
      params_);
}

double moment(const LabelLaw& law, double s) {
  if (!std::isfinite(s) || !law.domain().contains(s)) {
    throw DomainError("s = " + std::to_string(s) + " outside the moment domain");
  }
  if (s == 0.0) return 1.0;
  return std::exp(law.log_moment(s));
}

double moment_logweighted(const LabelLaw& law, double s) {
  if (!std::isfinite(s) || !law.domain().interior(s)) {
    throw DomainError("s = " + std::to_string(s) + " outside the interior of the moment domain");
  }
  return moment(law, s) * law.tilted_log_mean(s);
}

double sample(const LabelLaw& law, RandomStream& rng) {
  return std::exp(LogSampler(law, 0.0)(rng));
}

MomentDomain domain(const LabelLaw& law) { return law.domain(); }

LogSampler::LogSampler(const LabelLaw& law, double tilt) : tilt_(tilt) {
  std::visit(
      Overloaded{
          [&](const AtomicParams& p) {
            kind_ = Kind::kAtoms;
            double peak = -kInf;
            for (std::size_t k = 0; k < p.atoms.size(); ++k) {
              if (p.probs[k] > 0.0) peak = std::max(peak, tilt * std::log(p.atoms[k]));
            }
            double total = 0.0;
            for (std::size_t k = 0; k < p.atoms.size(); ++k) {
              if (p.probs[k] <= 0.0) continue;
              const double la = std::log(p.atoms[k]);
              total += p.probs[k] * std::exp(tilt * la - peak);
              cumulative_.push_back(total);
              log_atoms_.push_back(la);
            }
            for (double& c : cumulative_) c /= total;
          },
          [&](const LogNormalParams& p) {
            kind_ = Kind::kNormal;
            a_ = p.location + p.scale * p.scale * tilt;
            b_ = p.scale;
          },
          [&](const LogUniformParams& p) {
            a_ = p.log_lower;
            b_ = p.log_upper;
            if (tilt == 0.0) {
              kind_ = Kind::kUniform;
            } else {
              kind_ = Kind::kTruncatedExp;
              span_factor_ = std::exp(-std::fabs(tilt) * (b_ - a_));
            }
          },
          [&](const DeterministicParams& p) {
            kind_ = Kind::kPoint;
            a_ = std::log(p.value);
          },
      },
      law.params());
}

double LogSampler::operator()(RandomStream& rng) const {
  switch (kind_) {
    case Kind::kAtoms: {
      const double u = rng.uniform();
      std::size_t k = 0;
      const std::size_t last = cumulative_.size() - 1;
      while (k < last && u > cumulative_[k]) ++k;
      return log_atoms_[k];
    }
    case Kind::kNormal:
      return a_ + b_ * rng.normal();
    case Kind::kUniform:
      return a_ + (b_ - a_) * rng.uniform();
    case Kind::kTruncatedExp: {
      // Inverse CDF of the density proportional to exp(tilt * y) on [a, b].
      const double u = rng.uniform();
      if (tilt_ > 0.0) return b_ + std::log(u + (1.0 - u) * span_factor_) / tilt_;
      return a_ + std::log((1.0 - u) + u * span_factor_) / tilt_;
    }
    case Kind::kPoint:
      return a_;
  }
  return a_;
}

ModelSpec::ModelSpec(int d, std::vector<LabelLaw> row_major_laws)
    : d_(d), laws_(std::move(row_major_laws)) {
  std::vector<std::string> problems;
  if (d < 2) problems.push_back("d must be >= 2, got " + std::to_string(d));
  if (d >= 2 && laws_.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d)) {
    problems.push_back("matrix shape: expected " + std::to_string(d) + "x" + std::to_string(d) +
                       " laws, got " + std::to_string(laws_.size()));
  }
  if (!problems.empty()) throw ValidationError(problems);
}

ModelSpec ModelSpec::iid(int d, const LabelLaw& law) {
  if (d < 2) throw ValidationError("d must be >= 2, got " + std::to_string(d));
  return ModelSpec(d, std::vector<LabelLaw>(static_cast<std::size_t>(d * d), law));
}

MomentDomain ModelSpec::shared_domain() const noexcept {
  MomentDomain out{-kInf, kInf};
  for (const auto& law : laws_) {
    const MomentDomain dom = law.domain();
    out.lower = std::max(out.lower, dom.lower);
    out.upper = std::min(out.upper, dom.upper);
  }
  return out;
}

bool ModelSpec::labels_bounded_by_one() const noexcept {
  return std::all_of(laws_.begin(), laws_.end(),
                     [](const LabelLaw& law) { return law.log_support_max() <= 0.0; });
}

bool ModelSpec::is_iid() const noexcept {
  return std::all_of(laws_.begin(), laws_.end(),
                     [&](const LabelLaw& law) { return law == laws_.front(); });
}

std::vector<std::string> AdmissibilityReport::failures() const {
  std::vector<std::string> out;
  if (!unit_interval_in_domain) out.emplace_back("[0,1] not contained in D");
  if (!zero_in_interior) out.emplace_back("0 not in the interior of D");
  if (!log_moment_finite) out.emplace_back("E|log xi| infinite");
  if (!xlogx_moment_finite) out.emplace_back("E|xi log xi| infinite");
  if (!twice_differentiable) out.emplace_back("moment function not C^2 on R+");
  return out;
}

AdmissibilityReport check_conditions(const ModelSpec& model) {
  AdmissibilityReport report;
  const int d = model.dim();
  bool all_degenerate = true;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const LabelLaw& law = model.law(i, j);
      const MomentDomain dom = law.domain();
      EntryConditions e;
      e.parent = i;
      e.child = j;
      e.unit_interval_in_domain = dom.contains(0.0) && dom.contains(1.0);
      e.zero_in_interior = dom.interior(0.0);
      e.abs_log_moment = law.abs_log_moment();
      e.abs_xlogx_moment = law.abs_xlogx_moment();
      e.log_moment_finite = std::isfinite(e.abs_log_moment);
      e.xlogx_moment_finite = std::isfinite(e.abs_xlogx_moment);
      // Closed-form moments of every shipped family are analytic in s.
      e.smoothness = "C-infinity";
      e.degenerate = law.degenerate();

      report.unit_interval_in_domain &= e.unit_interval_in_domain;
      report.zero_in_interior &= e.zero_in_interior;
      report.log_moment_finite &= e.log_moment_finite;
      report.xlogx_moment_finite &= e.xlogx_moment_finite;
      report.any_degenerate_entry |= e.degenerate;
      all_degenerate &= e.degenerate;
      report.entries.push_back(std::move(e));
    }
  }
  const double first = model.law(0, 0).log_support_max();
  report.degenerate =
      all_degenerate && std::all_of(model.laws().begin(), model.laws().end(),
                                    [&](const LabelLaw& l) { return l.log_support_max() == first; });
  return report;
}

}  // namespace branchexp
