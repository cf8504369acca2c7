#ifndef BRANCHEXP_SPECTRAL_HPP
#define BRANCHEXP_SPECTRAL_HPP

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <vector>

#include "branchexp/laws.hpp"

namespace branchexp {

/// Small dense row-major square matrix.
class Matrix {
 public:
  explicit Matrix(int d, double fill = 0.0)
      : d_(d), data_(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), fill) {}

  int dim() const noexcept { return d_; }
  double& operator()(int i, int j) { return data_[index(i, j)]; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }
  std::span<const double> row(int i) const {
    return {data_.data() + index(i, 0), static_cast<std::size_t>(d_)};
  }
  std::span<const double> values() const noexcept { return data_; }

  Matrix transposed() const;
  /// out = M v
  void apply(std::span<const double> v, std::span<double> out) const;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(d_) + static_cast<std::size_t>(j);
  }
  int d_;
  std::vector<double> data_;
};

/// m(s): entry (i, j) = E[xi_ij^s].
Matrix build_m(const ModelSpec& model, double s);
/// m'(s): entry (i, j) = E[xi_ij^s log xi_ij].
Matrix build_m_prime(const ModelSpec& model, double s);

/// Dominant eigenvalue with positive right/left eigenvectors, both
/// normalized to unit sum. residual = max |M v - rho v|.
struct PerronTriple {
  double rho = 0.0;
  std::vector<double> right;
  std::vector<double> left;
  double residual = 0.0;
  int iterations = 0;
};

/// Power iteration (transpose iteration for the left vector). Requires a
/// strictly positive matrix; throws NonPositiveMatrix otherwise and
/// NoConvergence if the residual is still above tol after max_iter steps.
PerronTriple perron(const Matrix& m, double tol = 1e-12, int max_iter = 1'000'000);

struct SpectralOptions {
  double perron_tol = 1e-12;
  double golden_tol = 1e-10;  // absolute tolerance in s
  double initial_bracket = 1.0;
  double bracket_limit_factor = 64.0;  // search stops at initial_bracket * factor

  double s_max() const noexcept { return initial_bracket * bracket_limit_factor; }
};

/// Everything known about m(s) at one s. The Perron triple is for the
/// matrix rescaled by exp(-log_scale) so that moments of very different
/// magnitude stay representable; log_rho is unscaled.
struct SpectralPoint {
  double s = 0.0;
  double log_rho = 0.0;
  double cumulant_slope = 0.0;  // Lambda'(s) = rho'(s) / rho(s)
  double log_scale = 0.0;
  PerronTriple scaled;
  Matrix scaled_m{1};
};

struct LambdaInfimum {
  double lambda = 0.0;      // inf_{s >= 0} rho(s)
  double s_argmin = 0.0;
  bool at_boundary = false;  // rho still decreasing at the search limit
};

/// rho(s) and its derived quantities for one model, memoized per s.
/// Copies share the cache; concurrent reads are safe and cache writes are
/// serialized.
class SpectralCurve {
 public:
  explicit SpectralCurve(ModelSpec model, SpectralOptions options = {});

  const ModelSpec& model() const noexcept { return state_->model; }
  const SpectralOptions& options() const noexcept { return state_->options; }
  int dim() const noexcept { return state_->model.dim(); }

  SpectralPoint point(double s) const;

  double rho(double s) const;
  double log_rho(double s) const;
  double rho_prime(double s) const;
  /// Lambda(s) = log rho(s) - log d.
  double cumulant(double s) const;
  /// Lambda'(s).
  double cumulant_slope(double s) const;
  /// Perron triple of the unscaled m(s).
  PerronTriple perron_at(double s) const;

  /// lambda = inf_{s >= 0} rho(s); golden section on log rho.
  const LambdaInfimum& lambda_inf() const;

  std::size_t cache_size() const;

 private:
  struct State {
    State(ModelSpec m, SpectralOptions o) : model(std::move(m)), options(o) {}
    ModelSpec model;
    SpectralOptions options;
    mutable std::shared_mutex mutex;
    std::map<double, SpectralPoint> cache;
    std::once_flag lambda_once;
    LambdaInfimum lambda;
  };
  SpectralPoint compute(double s) const;

  std::shared_ptr<State> state_;
};

/// E[exp(s S_n)] along a path from a root of the given colour:
/// e_c^T m(s)^n 1 / d^n. Computed with per-step rescaling.
double level_moment(const ModelSpec& model, double s, int n, int root_colour);
double log_level_moment(const ModelSpec& model, double s, int n, int root_colour);

struct RateValue {
  double value = 0.0;  // Lambda*(z); +infinity when infinite
  double s0 = 0.0;     // maximizing tilt
  bool infinite = false;
};

/// Lambda*(z) = sup_{s >= 0} (s z - Lambda(s)).
class RateFunction {
 public:
  explicit RateFunction(SpectralCurve curve);

  RateValue operator()(double z) const;
  /// mu = -Lambda'(0).
  double mu() const noexcept { return mu_; }
  double slope_at_zero() const noexcept { return -mu_; }
  /// Lambda' at the bracket limit: the largest slope the search can reach.
  double sup_slope() const;
  const SpectralCurve& curve() const noexcept { return curve_; }

 private:
  SpectralCurve curve_;
  double mu_;
};

}  // namespace branchexp

#endif  // BRANCHEXP_SPECTRAL_HPP
