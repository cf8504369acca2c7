// Closed-form reference values computed independently of the library.
#ifndef BRANCHEXP_TESTS_ORACLES_HPP
#define BRANCHEXP_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// log xi ~ N(m, sigma^2), i.i.d. over d colours.
struct Gaussian {
  double m = -1.5;
  double sigma = 1.0;
  int d = 2;

  double log_rho(double s) const { return std::log(d) + m * s + 0.5 * sigma * sigma * s * s; }
  double lambda() const { return std::exp(log_rho(-m / (sigma * sigma))); }
  double mu() const { return -m; }
  // sup_{s>=0} (s z - Lambda(s)); zero for z <= m.
  double rate(double z) const {
    if (z <= m) return 0.0;
    const double g = z - m;
    return g * g / (2.0 * sigma * sigma);
  }
  // Smaller root of log_rho(s) = 0.
  double s1() const {
    const double a = 0.5 * sigma * sigma, b = m, c = std::log(d);
    return (-b - std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
  }
  // P(S_n >= x) with S_n ~ N(n m, n sigma^2).
  double tail(int n, double x) const {
    if (n == 0) return x <= 0.0 ? 1.0 : 0.0;
    return normal_cdf((n * m - x) / (sigma * std::sqrt(static_cast<double>(n))));
  }
  // sum_n d^n P(S_n >= -t), truncated where the Chernoff remainder at the
  // minimising s is below `tol`.
  double level_sum(double t, double tol = 1e-12) const {
    const double s = -m / (sigma * sigma);
    const double rho = lambda();
    double total = 0.0;
    for (int n = 0; n < 100000; ++n) {
      total += std::pow(static_cast<double>(d), n) * tail(n, -t);
      const double remainder = std::exp(s * t) * std::pow(rho, n + 1) / (1.0 - rho);
      if (remainder < tol) return total;
    }
    return total;
  }
};

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

// Atoms {1/4, 1/2} with equal weight, d = 2, t = j log 2:
// S_n >= -t iff the number K of 1/4 atoms satisfies n + K <= j.
inline double quarter_half_level_sum(int j) {
  double total = 0.0;
  for (int n = 0; n <= j; ++n) {
    for (int k = 0; k <= std::min(n, j - n); ++k) total += binomial(n, k);
  }
  return total;
}

// P(S_n >= -j log 2) for the same walk.
inline double quarter_half_tail(int n, int j) {
  double p = 0.0;
  for (int k = 0; k <= std::min(n, j - n); ++k) p += binomial(n, k);
  return p * std::pow(0.5, n);
}

inline double perron_2x2(double a, double b, double c, double d) {
  const double h = 0.5 * (a - d);
  return 0.5 * (a + d) + std::sqrt(h * h + b * c);
}

inline double golden_s1() { return std::log2(2.0 / (std::sqrt(5.0) - 1.0)); }

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double lognormal_moment(double m, double sigma, double s) {
  return std::exp(m * s + 0.5 * sigma * sigma * s * s);
}
inline double loguniform_moment(double a, double b, double s) {
  if (s == 0.0) return 1.0;
  return (std::exp(s * b) - std::exp(s * a)) / (s * (b - a));
}
inline double atomic_moment(const std::vector<double>& atoms, const std::vector<double>& probs,
                            double s) {
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) total += probs[i] * std::pow(atoms[i], s);
  return total;
}

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle

#endif
