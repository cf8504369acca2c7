#include "branchexp/exponents.hpp"

#include <cmath>
#include <limits>

#include "branchexp/error.hpp"
#include "branchexp/optimize.hpp"

namespace branchexp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite_regime(const SpectralCurve& curve, const ExponentOptions& options) {
  const Regime r = classify(curve, options.critical_band);
  if (r != Regime::kFinite) {
    throw AssumptionViolation("the exponent needs lambda < 1; lambda = " +
                              std::to_string(curve.lambda_inf().lambda) + " (" +
                              regime_name(r) + ")");
  }
}

}  // namespace

const char* regime_name(Regime r) noexcept {
  switch (r) {
    case Regime::kFinite: return "Finite";
    case Regime::kInfinite: return "Infinite";
    case Regime::kCritical: return "Critical";
  }
  return "?";
}

Regime classify(const SpectralCurve& curve, double critical_band) {
  const double lambda = curve.lambda_inf().lambda;
  if (lambda < 1.0 - critical_band) return Regime::kFinite;
  if (lambda > 1.0 + critical_band) return Regime::kInfinite;
  return Regime::kCritical;
}

VariationalExponent growth_exponent_variational(const SpectralCurve& curve,
                                                const ExponentOptions& options) {
  require_finite_regime(curve, options);
  const RateFunction rate(curve);
  const double mu = rate.mu();
  if (!(mu > 0.0)) {
    throw AssumptionViolation("the exponent needs mu = -Lambda'(0) > 0; mu = " + std::to_string(mu));
  }
  const double log_d = std::log(static_cast<double>(curve.dim()));
  // f -> -infinity as u -> 0+, and is -infinity wherever Lambda*(-u) is.
  auto f = [&](double u) {
    const RateValue r = rate(-u);
    if (r.infinite) return -kInf;
    return (log_d - r.value) / u;
  };
  const double tol = curve.options().golden_tol;
  const auto best = golden_section_maximize(f, mu * 1e-12, mu, tol);
  VariationalExponent out;
  out.u_star = best.x;
  out.M = best.value;
  out.f_at_mu = log_d / mu;
  out.s0_at_u_star = rate(-best.x).s0;
  return out;
}

double growth_exponent_spectral(const SpectralCurve& curve, const ExponentOptions& options) {
  require_finite_regime(curve, options);
  const double right = curve.lambda_inf().s_argmin;
  // log rho(0) = log d > 0 and log rho(s_argmin) = log lambda < 0; convexity
  // leaves exactly one crossing in between, the smaller root.
  return bisect_root([&](double s) { return curve.log_rho(s); }, 0.0, right, options.root_tol);
}

double brw_log_infimum(const SpectralCurve& curve, double x, double s_tol) {
  const SpectralOptions& opt = curve.options();
  auto h = [&](double s) { return s * x + curve.log_rho(s); };
  if (x + curve.cumulant_slope(0.0) >= 0.0) return h(0.0);
  double hi = opt.initial_bracket;
  while (x + curve.cumulant_slope(hi) < 0.0) {
    if (hi >= opt.s_max()) return -kInf;
    hi *= 2.0;
  }
  const double lo = hi > opt.initial_bracket ? 0.5 * hi : 0.0;
  return golden_section_minimize(h, lo, hi, s_tol).value;
}

double brw_speed(const SpectralCurve& curve, const ExponentOptions& options) {
  const double inner_tol = 0.1 * options.speed_tol;
  auto g = [&](double x) { return brw_log_infimum(curve, x, inner_tol); };
  // At x >= -Lambda'(0) the infimum sits at s = 0 and equals log d > 0.
  const double x_hi = -curve.cumulant_slope(0.0);
  double step = 1.0;
  double x_lo = x_hi - step;
  while (g(x_lo) >= 0.0) {
    step *= 2.0;
    if (step > 1e9) throw BracketingFailure("BRW speed: g(x) has no sign change");
    x_lo = x_hi - step;
  }
  return bisect_root(g, x_lo, x_hi, options.speed_tol);
}

ExponentReport analyze(const SpectralCurve& curve, const ExponentOptions& options) {
  ExponentReport rep;
  const ModelSpec& model = curve.model();
  rep.d = model.dim();
  const AdmissibilityReport adm = check_conditions(model);
  if (!adm.admissible()) {
    std::string msg = "model fails the moment conditions:";
    for (const auto& f : adm.failures()) msg += " " + f + ";";
    throw AssumptionViolation(msg);
  }
  if (adm.degenerate) rep.warnings.emplace_back("nonstrict-convexity");
  else if (adm.any_degenerate_entry) rep.warnings.emplace_back("degenerate-entry");

  const LambdaInfimum& li = curve.lambda_inf();
  rep.lambda = li.lambda;
  rep.s_argmin = li.s_argmin;
  rep.lambda_at_boundary = li.at_boundary;
  if (li.at_boundary) rep.warnings.emplace_back("lambda-infimum-at-search-limit");
  rep.regime = classify(curve, options.critical_band);

  const RateFunction rate(curve);
  rep.mu = rate.mu();
  const RateValue at_zero = rate(0.0);
  rep.rate_at_zero = at_zero.value;
  rep.rate_at_zero_infinite = at_zero.infinite;
  const double log_d = std::log(static_cast<double>(rep.d));
  rep.equivalence_holds = (rep.lambda < 1.0) == (at_zero.value > log_d);

  if (rep.regime != Regime::kFinite) {
    rep.warnings.emplace_back(std::string("not in the finite regime: ") + regime_name(rep.regime));
  } else if (!(rep.mu > 0.0)) {
    rep.warnings.emplace_back("mu <= 0: no exponent");
  } else {
    const VariationalExponent v = growth_exponent_variational(curve, options);
    const double s1 = growth_exponent_spectral(curve, options);
    rep.M_variational = v.M;
    rep.u_star = v.u_star;
    rep.f_at_mu = v.f_at_mu;
    rep.s1_spectral = s1;
    rep.cross_residual = std::fabs(v.M - s1);
    rep.maximizer_residual = std::fabs(v.M - v.s0_at_u_star);
    if (*rep.cross_residual > options.cross_check_tol) {
      rep.warnings.emplace_back("cross-check residual above tolerance");
    }
    if (!(v.u_star > 0.0 && v.u_star < rep.mu)) {
      rep.warnings.emplace_back("maximizer u* not strictly inside (0, mu)");
    }
  }

  try {
    const double x0 = brw_speed(curve, options);
    rep.x0_brw = x0;
    const double g = brw_log_infimum(curve, x0);
    rep.brw_residual = std::isfinite(g) ? std::fabs(std::expm1(g)) : 1.0;
  } catch (const Error& e) {
    rep.warnings.emplace_back(std::string("BRW speed unavailable: ") + e.what());
  }
  return rep;
}

LabelLaw push_forward(const PassageLaw& tau) {
  auto positive = [](double v) {
    const double x = std::exp(-v);
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw UnsupportedLaw("exp(-" + std::to_string(v) + ") is not a representable positive label");
    }
    return x;
  };
  if (const auto* n = std::get_if<NormalPassage>(&tau)) {
    return LabelLaw::log_normal(-n->mean, n->sd);
  }
  if (const auto* a = std::get_if<AtomicPassage>(&tau)) {
    std::vector<double> atoms;
    atoms.reserve(a->values.size());
    for (double v : a->values) atoms.push_back(positive(v));
    return LabelLaw::atomic(std::move(atoms), a->probs);
  }
  if (const auto* u = std::get_if<UniformPassage>(&tau)) {
    return LabelLaw::log_uniform(-u->upper, -u->lower);
  }
  const auto& c = std::get<ConstantPassage>(tau);
  return LabelLaw::deterministic(positive(c.value));
}

ModelSpec fpp_transform(int d, const std::vector<PassageLaw>& passage_laws) {
  std::vector<LabelLaw> laws;
  laws.reserve(passage_laws.size());
  for (const auto& tau : passage_laws) laws.push_back(push_forward(tau));
  return ModelSpec(d, std::move(laws));
}

}  // namespace branchexp
