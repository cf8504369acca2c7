#ifndef BRANCHEXP_EXPONENTS_HPP
#define BRANCHEXP_EXPONENTS_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "branchexp/laws.hpp"
#include "branchexp/spectral.hpp"

namespace branchexp {

enum class Regime { kFinite, kInfinite, kCritical };

const char* regime_name(Regime r) noexcept;

struct ExponentOptions {
  double critical_band = 1e-9;  // |lambda - 1| inside this band is Critical
  double cross_check_tol = 1e-6;
  double root_tol = 1e-10;      // bisection for the spectral root, in s
  double speed_tol = 1e-10;     // outer bisection for the BRW speed, in x
};

/// Finite if lambda < 1 - band, Infinite if lambda > 1 + band.
Regime classify(const SpectralCurve& curve, double critical_band = 1e-9);

struct VariationalExponent {
  double M = 0.0;
  double u_star = 0.0;
  double f_at_mu = 0.0;         // log d / mu
  double s0_at_u_star = 0.0;    // tilt maximizing Lambda*(-u*)
};

/// M = max_{u in (0, mu]} (log d - Lambda*(-u)) / u by golden section.
/// Throws AssumptionViolation unless lambda < 1 and mu > 0.
VariationalExponent growth_exponent_variational(const SpectralCurve& curve,
                                                const ExponentOptions& options = {});

/// Smallest s >= 0 with rho(s) = 1, by bisection on [0, s_argmin].
/// Throws AssumptionViolation unless lambda < 1.
double growth_exponent_spectral(const SpectralCurve& curve,
                                const ExponentOptions& options = {});

/// g(x) = inf_{s >= 0} (s x + log rho(s)); -infinity when the slope at the
/// bracket limit is still negative.
double brw_log_infimum(const SpectralCurve& curve, double x, double s_tol = 1e-11);

/// Speed x0 of the minimal position of the branching random walk whose
/// jumps are eta = -log(xi): the root of g(x0) = 0.
double brw_speed(const SpectralCurve& curve, const ExponentOptions& options = {});

struct ExponentReport {
  int d = 0;
  Regime regime = Regime::kCritical;
  double lambda = 0.0;
  double s_argmin = 0.0;
  bool lambda_at_boundary = false;
  double mu = 0.0;
  double rate_at_zero = 0.0;       // Lambda*(0)
  bool rate_at_zero_infinite = false;
  bool equivalence_holds = false;  // (lambda < 1) == (Lambda*(0) > log d)
  std::optional<double> M_variational;
  std::optional<double> u_star;
  std::optional<double> f_at_mu;
  std::optional<double> s1_spectral;
  std::optional<double> cross_residual;
  std::optional<double> maximizer_residual;  // |f(u*) - s0(-u*)|
  std::optional<double> x0_brw;
  std::optional<double> brw_residual;        // |inf_s e^{s x0} rho(s) - 1|
  std::vector<std::string> warnings;
};

ExponentReport analyze(const SpectralCurve& curve, const ExponentOptions& options = {});

// Real-valued passage-time (or jump) laws, mapped to labels xi = exp(-tau).

struct NormalPassage {
  double mean = 0.0;
  double sd = 1.0;
  bool operator==(const NormalPassage&) const = default;
};
struct AtomicPassage {
  std::vector<double> values;
  std::vector<double> probs;
  bool operator==(const AtomicPassage&) const = default;
};
struct UniformPassage {
  double lower = 0.0;
  double upper = 1.0;
  bool operator==(const UniformPassage&) const = default;
};
struct ConstantPassage {
  double value = 0.0;
  bool operator==(const ConstantPassage&) const = default;
};

using PassageLaw = std::variant<NormalPassage, AtomicPassage, UniformPassage, ConstantPassage>;

/// Law of exp(-tau). Throws UnsupportedLaw if the image is not a strictly
/// positive finite label law.
LabelLaw push_forward(const PassageLaw& tau);

/// Row-major d x d passage-time laws to the label model whose Z(e^{-t})
/// equals the first-passage count R(t).
ModelSpec fpp_transform(int d, const std::vector<PassageLaw>& passage_laws);

}  // namespace branchexp

#endif  // BRANCHEXP_EXPONENTS_HPP
