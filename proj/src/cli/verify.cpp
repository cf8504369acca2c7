#include <algorithm>
#include <cmath>
#include <cstdio>

#include "branchexp/cli.hpp"
#include "branchexp/error.hpp"
#include "branchexp/mc.hpp"

namespace branchexp::cli {
namespace {

std::string fmt(const char* format, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

class Suite {
 public:
  void add(std::string name, bool passed, std::string detail) {
    checks_.push_back({std::move(name), passed, std::move(detail)});
  }
  std::vector<Check> take() { return std::move(checks_); }

 private:
  std::vector<Check> checks_;
};

// Grid on [0, hi] with `points` nodes.
std::vector<double> grid(double hi, int points) {
  std::vector<double> g;
  for (int k = 0; k < points; ++k) g.push_back(hi * k / (points - 1));
  return g;
}

void spectral_checks(const SpectralCurve& curve, Suite& suite) {
  const LambdaInfimum& li = curve.lambda_inf();
  const double hi = std::clamp(2.0 * li.s_argmin, 1.0, curve.options().s_max());
  const auto s_grid = grid(hi, 41);

  double worst_residual = 0.0;
  for (double s : s_grid) {
    const SpectralPoint p = curve.point(s);
    worst_residual = std::max(worst_residual, p.scaled.residual / p.scaled.rho);
  }
  suite.add("perron-residual", worst_residual <= 1e-12,
            fmt("max relative residual %.3g", worst_residual));

  double worst_fd = 0.0;
  for (double s : s_grid) {
    if (s == 0.0) continue;
    const double h = 1e-5 * std::max(1.0, s);
    const double fd = (curve.rho(s + h) - curve.rho(s - h)) / (2.0 * h);
    const double analytic = curve.rho_prime(s);
    const double scale = std::max(std::fabs(analytic), curve.rho(s));
    worst_fd = std::max(worst_fd, std::fabs(fd - analytic) / scale);
  }
  suite.add("rho-prime-vs-finite-difference", worst_fd <= 1e-6,
            fmt("max scaled difference %.3g", worst_fd));

  double worst_convexity = 0.0;
  for (std::size_t k = 1; k + 1 < s_grid.size(); ++k) {
    const double second = curve.cumulant(s_grid[k - 1]) - 2.0 * curve.cumulant(s_grid[k]) +
                          curve.cumulant(s_grid[k + 1]);
    worst_convexity = std::min(worst_convexity, second);
  }
  suite.add("cumulant-convex", worst_convexity >= -1e-10,
            fmt("min second difference %.3g", worst_convexity));

  // (m^n 1)_root / d^n decays like (rho/d)^n: the per-level rate converges.
  const double s = std::min(1.0, hi);
  const double target = curve.cumulant(s);
  double previous_gap = INFINITY;
  bool decreasing = true;
  double gap = 0.0;
  for (int n : {8, 32, 128, 512}) {
    gap = std::fabs(log_level_moment(curve.model(), s, n, 0) / n - target);
    decreasing = decreasing && gap <= previous_gap + 1e-12;
    previous_gap = gap;
  }
  suite.add("level-moment-rate", decreasing && gap <= 1e-2,
            fmt("|log E[e^{sS_n}]/n - Lambda(s)| at n=512: %.3g", gap));
}

void rate_checks(const SpectralCurve& curve, Suite& suite) {
  const RateFunction rate(curve);
  const double mu = rate.mu();
  const double at_minus_mu = rate(-mu).value;
  suite.add("rate-zero-at-drift", at_minus_mu <= 1e-8, fmt("Lambda*(-mu) = %.3g", at_minus_mu));

  std::vector<double> z, v;
  const double span = std::max(1.0, std::fabs(mu));
  for (int k = 0; k <= 40; ++k) {
    const double zk = -mu - span + 2.0 * span * k / 40.0;
    const RateValue r = rate(zk);
    if (r.infinite) break;
    z.push_back(zk);
    v.push_back(r.value);
  }
  bool nonnegative = true, zero_region = true;
  double worst_convexity = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    nonnegative = nonnegative && v[k] >= 0.0;
    if (z[k] <= -mu) zero_region = zero_region && v[k] == 0.0;
    if (k >= 1 && k + 1 < z.size()) {
      worst_convexity = std::min(worst_convexity, v[k - 1] - 2.0 * v[k] + v[k + 1]);
    }
  }
  suite.add("rate-nonnegative", nonnegative, "grid of " + std::to_string(z.size()) + " points");
  suite.add("rate-zero-region", zero_region, "Lambda*(z) = 0 for z <= -mu");
  suite.add("rate-convex", worst_convexity >= -1e-8,
            fmt("min second difference %.3g", worst_convexity));
}

}  // namespace

std::vector<Check> verify_model(const RunConfig& config) {
  if (!config.model) throw ValidationError("no model in configuration");
  const SpectralCurve curve(*config.model, spectral_options(config.tolerances));
  const ExponentOptions eo = exponent_options(config.tolerances);
  Suite suite;

  const AdmissibilityReport adm = check_conditions(*config.model);
  suite.add("moment-conditions", adm.admissible(),
            adm.admissible() ? "all entries admissible" : "violations present");
  spectral_checks(curve, suite);
  rate_checks(curve, suite);

  const Regime regime = classify(curve, eo.critical_band);
  const double lambda = curve.lambda_inf().lambda;
  const RateValue at_zero = RateFunction(curve)(0.0);
  const bool equivalence =
      (lambda < 1.0) == (at_zero.infinite || at_zero.value > std::log(static_cast<double>(curve.dim())));
  suite.add("finiteness-equivalence", equivalence,
            fmt("lambda = %.9g, Lambda*(0) = %.9g", lambda, at_zero.value));
  if (regime != Regime::kFinite) {
    throw AssumptionViolation(std::string("the exponent needs lambda < 1; regime ") + regime_name(regime) +
                              fmt(", lambda = %.9g", lambda));
  }

  const ExponentReport report = analyze(curve, eo);
  if (!report.M_variational) {
    throw AssumptionViolation("the exponent needs mu > 0" + fmt(", mu = %.9g", report.mu));
  }
  suite.add("exponent-cross-check", *report.cross_residual <= eo.cross_check_tol,
            fmt("|M - s1| = %.3g", *report.cross_residual));
  suite.add("maximizer-interior", *report.u_star > 0.0 && *report.u_star < report.mu,
            fmt("u* = %.9g, mu = %.9g", *report.u_star, report.mu));
  suite.add("maximizer-tilt-identity", *report.maximizer_residual <= 1e-5,
            fmt("|M - s0(-u*)| = %.3g", *report.maximizer_residual));
  if (report.brw_residual) {
    suite.add("brw-speed-equation", *report.brw_residual <= 1e-8,
              fmt("|inf_s e^{s x0} rho(s) - 1| = %.3g", *report.brw_residual));
  }

  if (config.seed && !config.t_grid.empty()) {
    McOptions mc;
    mc.seed = *config.seed;
    mc.workers = config.workers;
    mc.root_colour = config.root_colour - 1;
    const std::uint64_t reps = std::min<std::uint64_t>(config.reps, 100000);
    LevelSumOptions tilted;
    tilted.mode = LevelSumMode::kTilted;
    const auto est = estimate_EZ(curve, config.t_grid, reps, mc, tilted);
    // Summing the Chernoff bound over every level (cap = -1) bounds E[Z].
    double worst = -INFINITY;
    for (const auto& c : est) {
      const double bound = level_sum_tail_bound(curve, c.t, -1, mc.root_colour);
      worst = std::max(worst, (c.ez_estimate - bound) / std::max(c.std_error, 1e-300));
    }
    suite.add("level-sum-below-chernoff", worst <= 4.0,
              fmt("max (estimate - bound) / SE = %.3g", worst));
    // Plain sampling is reliable only where the count is small: compare at
    // the smallest t.
    const std::vector<double> first{config.t_grid.front()};
    const auto plain = estimate_EZ(curve, first, reps, mc, LevelSumOptions{});
    const double se = std::hypot(plain[0].std_error, est[0].std_error);
    const double z = se > 0.0 ? std::fabs(plain[0].ez_estimate - est[0].ez_estimate) / se : 0.0;
    suite.add("plain-vs-tilted", z <= 4.0, fmt("|plain - tilted| / SE = %.3g at t = %.6g", z, first[0]));
  }
  return suite.take();
}

}  // namespace branchexp::cli
