#ifndef BRANCHEXP_KERNELS_HPP
#define BRANCHEXP_KERNELS_HPP

#include <cstddef>
#include <span>
#include <vector>

// Data-parallel inner loops used by the Monte Carlo estimators and the
// power iteration. Each kernel has a scalar reference implementation and,
// on x86-64 builds, an AVX2 variant chosen at runtime when the CPU supports
// it. Setting BRANCH_EXPONENT_ISA=scalar forces the reference path.
//
// Element-wise kernels and counts are bit-identical across variants;
// floating-point reductions differ only by summation order.

namespace branchexp::kernels {

enum class Isa { kScalar, kAvx2 };

struct TailSums {
  double weight = 0.0;     // sum of w[i] over x[i] >= threshold
  double weight_sq = 0.0;  // sum of w[i]^2 over the same set
  std::size_t count = 0;
};

struct KernelTable {
  Isa isa;
  const char* name;
  void (*add_inplace)(double* acc, const double* inc, std::size_t n);
  void (*accumulate_indicator)(double* y, const double* x, std::size_t n,
                               double threshold, double weight);
  void (*accumulate_weighted)(double* y, const double* x, const double* w, std::size_t n,
                              double threshold);
  std::size_t (*count_at_least)(const double* x, std::size_t n, double threshold);
  std::size_t (*count_at_most)(const double* x, std::size_t n, double threshold);
  TailSums (*weighted_tail_sums)(const double* x, const double* w, std::size_t n,
                                 double threshold);
  void (*sum_and_sumsq)(const double* x, std::size_t n, double* sum, double* sumsq);
  double (*min_value)(const double* x, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
/// nullptr when the build has no AVX2 variant or the CPU lacks AVX2.
const KernelTable* avx2_table() noexcept;
/// Every variant usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();
/// The variant selected for this process (resolved once).
const KernelTable& active() noexcept;

inline void add_inplace(std::span<double> acc, std::span<const double> inc) {
  active().add_inplace(acc.data(), inc.data(), acc.size());
}

/// y[i] += weight whenever x[i] >= threshold.
inline void accumulate_indicator(std::span<double> y, std::span<const double> x,
                                 double threshold, double weight) {
  active().accumulate_indicator(y.data(), x.data(), y.size(), threshold, weight);
}

/// y[i] += w[i] wherever x[i] >= threshold.
inline void accumulate_weighted(std::span<double> y, std::span<const double> x,
                                std::span<const double> w, double threshold) {
  active().accumulate_weighted(y.data(), x.data(), w.data(), y.size(), threshold);
}

inline std::size_t count_at_least(std::span<const double> x, double threshold) {
  return active().count_at_least(x.data(), x.size(), threshold);
}

inline std::size_t count_at_most(std::span<const double> x, double threshold) {
  return active().count_at_most(x.data(), x.size(), threshold);
}

inline TailSums weighted_tail_sums(std::span<const double> x,
                                   std::span<const double> w, double threshold) {
  return active().weighted_tail_sums(x.data(), w.data(), x.size(), threshold);
}

inline void sum_and_sumsq(std::span<const double> x, double& sum, double& sumsq) {
  active().sum_and_sumsq(x.data(), x.size(), &sum, &sumsq);
}

/// +infinity for an empty range.
inline double min_value(std::span<const double> x) {
  return active().min_value(x.data(), x.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

}  // namespace branchexp::kernels

#endif  // BRANCHEXP_KERNELS_HPP
