#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "branchexp/cli.hpp"
#include "branchexp/error.hpp"
#include "branchexp/mc.hpp"

namespace branchexp::cli {
namespace {

using ordered = nlohmann::ordered_json;

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// JSON has no infinities; they become null.
ordered jnum(double x) { return std::isfinite(x) ? ordered(x) : ordered(nullptr); }
ordered jopt(const std::optional<double>& x) { return x ? jnum(*x) : ordered(nullptr); }

McOptions mc_options(const RunConfig& c) {
  McOptions o;
  o.seed = c.seed.value_or(0);
  o.workers = c.workers;
  o.root_colour = c.root_colour - 1;
  return o;
}

SpectralCurve curve_of(const RunConfig& c) {
  if (!c.model) throw ValidationError("no model in configuration");
  return SpectralCurve(*c.model, spectral_options(c.tolerances));
}

ordered report_json(const ExponentReport& r) {
  ordered j;
  j["d"] = r.d;
  j["regime"] = regime_name(r.regime);
  j["lambda"] = jnum(r.lambda);
  j["s_argmin"] = jnum(r.s_argmin);
  j["lambda_at_boundary"] = r.lambda_at_boundary;
  j["mu"] = jnum(r.mu);
  j["rate_at_zero"] = r.rate_at_zero_infinite ? ordered(nullptr) : jnum(r.rate_at_zero);
  j["rate_at_zero_infinite"] = r.rate_at_zero_infinite;
  j["equivalence_holds"] = r.equivalence_holds;
  j["M"] = jopt(r.M_variational);
  j["u_star"] = jopt(r.u_star);
  j["f_at_mu"] = jopt(r.f_at_mu);
  j["s1"] = jopt(r.s1_spectral);
  j["cross_residual"] = jopt(r.cross_residual);
  j["maximizer_residual"] = jopt(r.maximizer_residual);
  j["x0"] = jopt(r.x0_brw);
  j["brw_residual"] = jopt(r.brw_residual);
  j["warnings"] = r.warnings;
  return j;
}

std::vector<CountResult> simulate_counts(const RunConfig& c, const SpectralCurve& curve) {
  const McOptions mc = mc_options(c);
  if (c.estimator == Estimator::kEnumerate) {
    std::vector<CountResult> out;
    for (double t : c.t_grid) out.push_back(enumerate_EZ(curve, t, c.depth_cap, c.reps, mc));
    return out;
  }
  LevelSumOptions lo;
  lo.mode = c.estimator == Estimator::kTilted ? LevelSumMode::kTilted : LevelSumMode::kPlain;
  lo.depth_cap = c.depth_cap;
  return estimate_EZ(curve, c.t_grid, c.reps, mc, lo);
}

std::string counts_csv(const std::vector<CountResult>& rows) {
  std::ostringstream out;
  out << "t,estimator,ez_estimate,std_error,log_ez,truncation_depth,tail_bound,exact,reps\n";
  for (const auto& r : rows) {
    out << num(r.t) << ',' << r.estimator << ',' << num(r.ez_estimate) << ',' << num(r.std_error)
        << ',' << num(std::log(r.ez_estimate)) << ',' << r.truncation_depth << ','
        << num(r.tail_bound) << ',' << (r.exact ? 1 : 0) << ',' << r.reps << '\n';
  }
  return out.str();
}

ordered simulation_summary(const std::vector<CountResult>& rows, const ExponentReport& report) {
  ordered j;
  std::vector<double> t, y;
  for (const auto& r : rows) {
    if (r.ez_estimate > 0.0) {
      t.push_back(r.t);
      y.push_back(std::log(r.ez_estimate));
    }
  }
  j["fitted_slope"] = t.size() >= 2 ? jnum(least_squares_slope(t, y)) : ordered(nullptr);
  j["M"] = jopt(report.M_variational);
  j["points"] = t.size();
  return j;
}

std::string ld_csv(const std::vector<LdRate>& rows) {
  std::ostringstream out;
  out << "a,n,probability,empirical_rate,std_error,rate_function,abs_difference,reps,hits,tilt\n";
  for (const auto& r : rows) {
    const double rate = r.rate_infinite ? INFINITY : r.rate_function;
    out << num(r.a) << ',' << r.n << ',' << num(r.probability) << ',' << num(r.empirical_rate)
        << ',' << num(r.std_error) << ',' << num(rate) << ','
        << num(std::fabs(r.empirical_rate - rate)) << ',' << r.reps << ',' << r.hits << ','
        << num(r.tilt) << '\n';
  }
  return out.str();
}

std::string brw_csv(const std::vector<BrwSnapshot>& rows, const std::vector<double>& t_grid) {
  std::ostringstream out;
  out << "generation,particles,reps,mean_min,se_min,mean_min_over_n,q10,q50,q90";
  for (double t : t_grid) out << ",count_le_" << num(t);
  for (double t : t_grid) out << ",cumulative_le_" << num(t) << ",se_cumulative_le_" << num(t);
  out << '\n';
  for (const auto& s : rows) {
    out << s.generation << ',' << s.particles << ',' << s.reps << ',' << num(s.mean_min) << ','
        << num(s.se_min) << ',' << num(s.mean_min_over_n) << ',' << num(s.q10) << ','
        << num(s.q50) << ',' << num(s.q90);
    for (double x : s.mean_count_at_most) out << ',' << num(x);
    for (std::size_t k = 0; k < s.mean_cumulative.size(); ++k) {
      out << ',' << num(s.mean_cumulative[k]) << ',' << num(s.se_cumulative[k]);
    }
    out << '\n';
  }
  return out.str();
}

std::string dump(const ordered& j) { return j.dump(2) + "\n"; }

}  // namespace

Output execute(const RunConfig& c) {
  Output out;
  const ExponentOptions eo = exponent_options(c.tolerances);
  switch (c.command) {
    case Command::kAnalyze: {
      const SpectralCurve curve = curve_of(c);
      out.files.emplace_back("report.json", dump(report_json(analyze(curve, eo))));
      break;
    }
    case Command::kSimulate:
    case Command::kFpp: {
      const SpectralCurve curve = curve_of(c);
      const ExponentReport report = analyze(curve, eo);
      if (report.regime != Regime::kFinite) {
        throw AssumptionViolation(std::string("simulation needs lambda < 1 (regime ") +
                                  regime_name(report.regime) + ")");
      }
      const auto rows = simulate_counts(c, curve);
      out.files.emplace_back("report.json", dump(report_json(report)));
      out.files.emplace_back("counts.csv", counts_csv(rows));
      out.files.emplace_back("summary.json", dump(simulation_summary(rows, report)));
      break;
    }
    case Command::kLdCheck: {
      const SpectralCurve curve = curve_of(c);
      LdOptions lo;
      lo.tilt = c.ld.tilt;
      lo.min_hits = c.ld.min_hits;
      std::vector<LdRate> rows;
      for (double a : c.ld.a_grid) {
        rows.push_back(estimate_ld_rate(curve, a, c.ld.n, c.reps, mc_options(c), lo));
      }
      out.files.emplace_back("ld.csv", ld_csv(rows));
      break;
    }
    case Command::kBrw: {
      const SpectralCurve curve = curve_of(c);
      const auto rows = simulate_brw(*c.model, c.brw.n_max, c.reps, mc_options(c), c.t_grid);
      ordered j;
      try {
        const double x0 = brw_speed(curve, eo);
        j["x0"] = x0;
        j["residual"] = jnum(std::fabs(std::expm1(brw_log_infimum(curve, x0))));
      } catch (const Error& e) {
        j["x0"] = nullptr;
        j["residual"] = nullptr;
        j["warning"] = e.what();
      }
      j["final_mean_min_over_n"] = jnum(rows.back().mean_min_over_n);
      out.files.emplace_back("brw.csv", brw_csv(rows, c.t_grid));
      out.files.emplace_back("brw.json", dump(j));
      break;
    }
    case Command::kVerify: {
      const auto checks = verify_model(c);
      ordered j = ordered::array();
      bool ok = true;
      for (const auto& ch : checks) {
        j.push_back(ordered{{"check", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
        ok = ok && ch.passed;
      }
      out.files.emplace_back("verify.json", dump(ordered{{"passed", ok}, {"checks", j}}));
      out.status = ok ? 0 : 1;
      break;
    }
  }
  return out;
}

void write_output(const RunConfig& c, const Output& output, std::ostream& out) {
  if (c.output_path.empty()) {
    for (const auto& [name, body] : output.files) out << "== " << name << '\n' << body;
    return;
  }
  const std::filesystem::path dir(c.output_path);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, body] : output.files) {
    std::ofstream f(dir / name, std::ios::binary);
    f << body;
    if (!f) throw ValidationError("cannot write " + (dir / name).string());
  }
}

}  // namespace branchexp::cli
