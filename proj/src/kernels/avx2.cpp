// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <bit>
#include <limits>

#include "branchexp/kernels.hpp"

namespace branchexp::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void add_inplace(double* acc, const double* inc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i,
                     _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_loadu_pd(inc + i)));
  }
  for (; i < n; ++i) acc[i] += inc[i];
}

void accumulate_indicator(double* y, const double* x, std::size_t n,
                          double threshold, double weight) {
  const __m256d thr = _mm256_set1_pd(threshold);
  const __m256d w = _mm256_set1_pd(weight);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), thr, _CMP_GE_OQ);
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_and_pd(mask, w)));
  }
  for (; i < n; ++i) y[i] += x[i] >= threshold ? weight : 0.0;
}

void accumulate_weighted(double* y, const double* x, const double* w, std::size_t n,
                         double threshold) {
  const __m256d thr = _mm256_set1_pd(threshold);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), thr, _CMP_GE_OQ);
    const __m256d add = _mm256_and_pd(mask, _mm256_loadu_pd(w + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), add));
  }
  for (; i < n; ++i) y[i] += x[i] >= threshold ? w[i] : 0.0;
}

template <int Predicate>
std::size_t count_cmp(const double* x, std::size_t n, double threshold) {
  const __m256d thr = _mm256_set1_pd(threshold);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), thr, Predicate);
    count += static_cast<std::size_t>(
        std::popcount(static_cast<unsigned>(_mm256_movemask_pd(mask))));
  }
  for (; i < n; ++i) {
    if constexpr (Predicate == _CMP_GE_OQ) {
      count += x[i] >= threshold;
    } else {
      count += x[i] <= threshold;
    }
  }
  return count;
}

std::size_t count_at_least(const double* x, std::size_t n, double threshold) {
  return count_cmp<_CMP_GE_OQ>(x, n, threshold);
}

std::size_t count_at_most(const double* x, std::size_t n, double threshold) {
  return count_cmp<_CMP_LE_OQ>(x, n, threshold);
}

TailSums weighted_tail_sums(const double* x, const double* w, std::size_t n,
                            double threshold) {
  const __m256d thr = _mm256_set1_pd(threshold);
  __m256d sw = _mm256_setzero_pd();
  __m256d sq = _mm256_setzero_pd();
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), thr, _CMP_GE_OQ);
    const __m256d wv = _mm256_and_pd(mask, _mm256_loadu_pd(w + i));
    sw = _mm256_add_pd(sw, wv);
    sq = _mm256_fmadd_pd(wv, wv, sq);
    count += static_cast<std::size_t>(
        std::popcount(static_cast<unsigned>(_mm256_movemask_pd(mask))));
  }
  TailSums out{hsum(sw), hsum(sq), count};
  for (; i < n; ++i) {
    if (x[i] >= threshold) {
      out.weight += w[i];
      out.weight_sq += w[i] * w[i];
      ++out.count;
    }
  }
  return out;
}

void sum_and_sumsq(const double* x, std::size_t n, double* sum, double* sumsq) {
  __m256d s = _mm256_setzero_pd();
  __m256d q = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    s = _mm256_add_pd(s, v);
    q = _mm256_fmadd_pd(v, v, q);
  }
  double ss = hsum(s), qq = hsum(q);
  for (; i < n; ++i) {
    ss += x[i];
    qq += x[i] * x[i];
  }
  *sum = ss;
  *sumsq = qq;
}

double min_value(const double* x, std::size_t n) {
  __m256d m = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_min_pd(m, _mm256_loadu_pd(x + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double out = lanes[0];
  for (int k = 1; k < 4; ++k) out = lanes[k] < out ? lanes[k] : out;
  for (; i < n; ++i) out = x[i] < out ? x[i] : out;
  return out;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s);
  }
  double out = hsum(s);
  for (; i < n; ++i) out += a[i] * b[i];
  return out;
}

}  // namespace

const KernelTable& avx2_table_impl() noexcept {
  static const KernelTable table{Isa::kAvx2,          "avx2",
                                 add_inplace,         accumulate_indicator,
                                 accumulate_weighted,
                                 count_at_least,      count_at_most,
                                 weighted_tail_sums,  sum_and_sumsq,
                                 min_value,           dot};
  return table;
}

}  // namespace branchexp::kernels
