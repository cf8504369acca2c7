#include "branchexp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "branchexp/error.hpp"
#include "branchexp/kernels.hpp"
#include "branchexp/optimize.hpp"

namespace branchexp {
namespace {

constexpr std::size_t kCacheLimit = 1u << 15;

void check_s(const ModelSpec& model, double s) {
  if (!std::isfinite(s) || !model.shared_domain().contains(s)) {
    throw DomainError("s = " + std::to_string(s) + " outside the shared moment domain");
  }
}

// One power-iteration run; returns the unit-sum dominant vector.
std::vector<double> power_vector(const Matrix& m, double tol, int max_iter, int& iterations) {
  const int d = m.dim();
  const auto n = static_cast<std::size_t>(d);
  std::vector<double> v(n, 1.0 / d), y(n);
  double residual = std::numeric_limits<double>::infinity();
  double best_residual = residual;
  std::vector<double> best = v;
  int stalls = 0;
  for (int it = 0; it < max_iter; ++it) {
    iterations = it + 1;
    m.apply(v, y);
    double total = 0.0;
    for (double x : y) total += x;
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::fabs(y[i] - total * v[i]));
    // Keep polishing past tol while the residual still halves, so the
    // eigenpair ends up at working precision.
    if (residual < best_residual) {
      if (best_residual <= tol && residual > 0.5 * best_residual) ++stalls;
      best_residual = residual;
      best = v;
    } else if (best_residual <= tol) {
      ++stalls;
    }
    if (residual == 0.0 || (best_residual <= tol && stalls >= 3)) break;
    for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / total;
  }
  if (!(best_residual <= tol)) {
    throw NoConvergence("power iteration residual " + std::to_string(best_residual) +
                        " after " + std::to_string(max_iter) + " iterations");
  }
  return best;
}

}  // namespace

Matrix Matrix::transposed() const {
  Matrix t(d_);
  for (int i = 0; i < d_; ++i) {
    for (int j = 0; j < d_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

void Matrix::apply(std::span<const double> v, std::span<double> out) const {
  for (int i = 0; i < d_; ++i) out[static_cast<std::size_t>(i)] = kernels::dot(row(i), v);
}

Matrix build_m(const ModelSpec& model, double s) {
  check_s(model, s);
  const int d = model.dim();
  Matrix m(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = moment(model.law(i, j), s);
  }
  return m;
}

Matrix build_m_prime(const ModelSpec& model, double s) {
  check_s(model, s);
  const int d = model.dim();
  Matrix m(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = moment_logweighted(model.law(i, j), s);
  }
  return m;
}

PerronTriple perron(const Matrix& m, double tol, int max_iter) {
  if (!(tol > 0.0)) throw ValidationError("perron tolerance must be > 0");
  for (double x : m.values()) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw NonPositiveMatrix("entries must be finite and strictly positive");
    }
  }
  PerronTriple out;
  int right_iters = 0, left_iters = 0;
  out.right = power_vector(m, tol, max_iter, right_iters);
  out.left = power_vector(m.transposed(), tol, max_iter, left_iters);
  out.iterations = std::max(right_iters, left_iters);

  const auto n = static_cast<std::size_t>(m.dim());
  std::vector<double> mv(n);
  m.apply(out.right, mv);
  // Two-sided Rayleigh quotient.
  out.rho = kernels::dot(out.left, mv) / kernels::dot(out.left, out.right);
  out.residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.residual = std::max(out.residual, std::fabs(mv[i] - out.rho * out.right[i]));
  }
  return out;
}

SpectralCurve::SpectralCurve(ModelSpec model, SpectralOptions options)
    : state_(std::make_shared<State>(std::move(model), options)) {}

SpectralPoint SpectralCurve::compute(double s) const {
  const ModelSpec& model = state_->model;
  check_s(model, s);
  const int d = model.dim();
  Matrix logs(d);
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      logs(i, j) = model.law(i, j).log_moment(s);
      if (!std::isfinite(logs(i, j))) throw DomainError("moment not finite at s = " + std::to_string(s));
      peak = std::max(peak, logs(i, j));
    }
  }
  SpectralPoint p;
  p.s = s;
  p.log_scale = peak;
  p.scaled_m = Matrix(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      p.scaled_m(i, j) = std::max(std::exp(logs(i, j) - peak), std::numeric_limits<double>::min());
    }
  }
  p.scaled = perron(p.scaled_m, state_->options.perron_tol);
  p.log_rho = s == 0.0 ? std::log(static_cast<double>(d)) : std::log(p.scaled.rho) + peak;

  double num = 0.0, den = 0.0;
  for (int i = 0; i < d; ++i) {
    const double wi = p.scaled.left[static_cast<std::size_t>(i)];
    den += wi * p.scaled.right[static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j) {
      num += wi * p.scaled_m(i, j) * model.law(i, j).tilted_log_mean(s) *
             p.scaled.right[static_cast<std::size_t>(j)];
    }
  }
  p.cumulant_slope = num / (p.scaled.rho * den);
  return p;
}

SpectralPoint SpectralCurve::point(double s) const {
  {
    std::shared_lock lock(state_->mutex);
    auto it = state_->cache.find(s);
    if (it != state_->cache.end()) return it->second;
  }
  SpectralPoint p = compute(s);
  std::unique_lock lock(state_->mutex);
  if (state_->cache.size() >= kCacheLimit) state_->cache.clear();
  state_->cache.emplace(s, p);
  return p;
}

double SpectralCurve::log_rho(double s) const { return point(s).log_rho; }

double SpectralCurve::rho(double s) const {
  if (s == 0.0) {
    check_s(model(), s);
    return static_cast<double>(dim());
  }
  return std::exp(log_rho(s));
}

double SpectralCurve::rho_prime(double s) const {
  const SpectralPoint p = point(s);
  const double r = s == 0.0 ? static_cast<double>(dim()) : std::exp(p.log_rho);
  return r * p.cumulant_slope;
}

double SpectralCurve::cumulant(double s) const {
  if (s == 0.0) {
    check_s(model(), s);
    return 0.0;
  }
  return log_rho(s) - std::log(static_cast<double>(dim()));
}

double SpectralCurve::cumulant_slope(double s) const { return point(s).cumulant_slope; }

PerronTriple SpectralCurve::perron_at(double s) const {
  SpectralPoint p = point(s);
  PerronTriple t = std::move(p.scaled);
  const double factor = std::exp(p.log_scale);
  t.rho = s == 0.0 ? static_cast<double>(dim()) : std::exp(p.log_rho);
  t.residual *= factor;
  return t;
}

const LambdaInfimum& SpectralCurve::lambda_inf() const {
  std::call_once(state_->lambda_once, [this] {
    const SpectralOptions& opt = state_->options;
    LambdaInfimum out;
    if (cumulant_slope(0.0) >= 0.0) {
      out.lambda = static_cast<double>(dim());
      out.s_argmin = 0.0;
    } else {
      double hi = opt.initial_bracket;
      while (cumulant_slope(hi) < 0.0 && hi < opt.s_max()) hi *= 2.0;
      if (cumulant_slope(hi) < 0.0) {
        // rho is still decreasing at the search limit: the infimum is (at
        // best) approached as s -> infinity.
        out.at_boundary = true;
        out.s_argmin = hi;
        out.lambda = rho(hi);
      } else {
        const double lo = hi > opt.initial_bracket ? 0.5 * hi : 0.0;
        const auto best = golden_section_minimize([this](double s) { return log_rho(s); }, lo, hi,
                                                  opt.golden_tol);
        out.s_argmin = best.x;
        out.lambda = std::exp(best.value);
      }
    }
    state_->lambda = out;
  });
  return state_->lambda;
}

std::size_t SpectralCurve::cache_size() const {
  std::shared_lock lock(state_->mutex);
  return state_->cache.size();
}

double log_level_moment(const ModelSpec& model, double s, int n, int root_colour) {
  const int d = model.dim();
  if (n < 1) throw ValidationError("level_moment needs n >= 1");
  if (root_colour < 0 || root_colour >= d) throw ValidationError("root colour out of range");
  check_s(model, s);
  Matrix logs(d);
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      logs(i, j) = model.law(i, j).log_moment(s);
      peak = std::max(peak, logs(i, j));
    }
  }
  Matrix step(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) step(i, j) = std::exp(logs(i, j) - peak) / d;
  }
  const auto dn = static_cast<std::size_t>(d);
  std::vector<double> v(dn, 1.0), next(dn);
  double log_acc = 0.0;
  for (int k = 0; k < n; ++k) {
    step.apply(v, next);
    const double scale = *std::max_element(next.begin(), next.end());
    for (std::size_t i = 0; i < dn; ++i) v[i] = next[i] / scale;
    log_acc += std::log(scale) + peak;
  }
  return log_acc + std::log(v[static_cast<std::size_t>(root_colour)]);
}

double level_moment(const ModelSpec& model, double s, int n, int root_colour) {
  return std::exp(log_level_moment(model, s, n, root_colour));
}

RateFunction::RateFunction(SpectralCurve curve)
    : curve_(std::move(curve)), mu_(-curve_.cumulant_slope(0.0)) {}

double RateFunction::sup_slope() const {
  return curve_.cumulant_slope(curve_.options().s_max());
}

RateValue RateFunction::operator()(double z) const {
  const SpectralOptions& opt = curve_.options();
  if (z <= -mu_) return {0.0, 0.0, false};
  double hi = opt.initial_bracket;
  while (curve_.cumulant_slope(hi) < z) {
    if (hi >= opt.s_max()) {
      return {std::numeric_limits<double>::infinity(), hi, true};
    }
    hi *= 2.0;
  }
  const double lo = hi > opt.initial_bracket ? 0.5 * hi : 0.0;
  const auto best = golden_section_maximize(
      [&](double s) { return s * z - curve_.cumulant(s); }, lo, hi, opt.golden_tol);
  return {std::max(best.value, 0.0), best.x, false};
}

}  // namespace branchexp
