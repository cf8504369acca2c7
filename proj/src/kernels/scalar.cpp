#include <limits>

#include "branchexp/kernels.hpp"

namespace branchexp::kernels {
namespace {

void add_inplace(double* acc, const double* inc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += inc[i];
}

void accumulate_indicator(double* y, const double* x, std::size_t n,
                          double threshold, double weight) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i] >= threshold ? weight : 0.0;
}

void accumulate_weighted(double* y, const double* x, const double* w, std::size_t n,
                         double threshold) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i] >= threshold ? w[i] : 0.0;
}

std::size_t count_at_least(const double* x, std::size_t n, double threshold) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += x[i] >= threshold;
  return count;
}

std::size_t count_at_most(const double* x, std::size_t n, double threshold) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += x[i] <= threshold;
  return count;
}

TailSums weighted_tail_sums(const double* x, const double* w, std::size_t n,
                            double threshold) {
  TailSums out;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] >= threshold) {
      out.weight += w[i];
      out.weight_sq += w[i] * w[i];
      ++out.count;
    }
  }
  return out;
}

void sum_and_sumsq(const double* x, std::size_t n, double* sum, double* sumsq) {
  double s = 0.0, q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += x[i];
    q += x[i] * x[i];
  }
  *sum = s;
  *sumsq = q;
}

double min_value(const double* x, std::size_t n) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = x[i] < m ? x[i] : m;
  return m;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{Isa::kScalar,        "scalar",
                                 add_inplace,         accumulate_indicator,
                                 accumulate_weighted,
                                 count_at_least,      count_at_most,
                                 weighted_tail_sums,  sum_and_sumsq,
                                 min_value,           dot};
  return table;
}

}  // namespace branchexp::kernels
