// AVX2 + FMA kernels. Compiled with -mavx2 -mfma; only called after the
// dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels_internal.hpp"

namespace molexplain::kernels::detail {
namespace {

constexpr std::size_t kNtRowBlock = 32;
constexpr std::size_t kNnDepthBlock = 64;
constexpr std::size_t kTnRowBlock = 16;

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// c[0..n) += a0*b0 + a1*b1 + a2*b2 + a3*b3
inline void axpy4(double a0, double a1, double a2, double a3, const double* b0, const double* b1,
                  const double* b2, const double* b3, double* c, std::size_t n) {
  const __m256d va0 = _mm256_set1_pd(a0);
  const __m256d va1 = _mm256_set1_pd(a1);
  const __m256d va2 = _mm256_set1_pd(a2);
  const __m256d va3 = _mm256_set1_pd(a3);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d vc = _mm256_loadu_pd(c + j);
    vc = _mm256_fmadd_pd(va0, _mm256_loadu_pd(b0 + j), vc);
    vc = _mm256_fmadd_pd(va1, _mm256_loadu_pd(b1 + j), vc);
    vc = _mm256_fmadd_pd(va2, _mm256_loadu_pd(b2 + j), vc);
    vc = _mm256_fmadd_pd(va3, _mm256_loadu_pd(b3 + j), vc);
    _mm256_storeu_pd(c + j, vc);
  }
  for (; j < n; ++j) {
    double s = c[j];
    s = std::fma(a0, b0[j], s);
    s = std::fma(a1, b1[j], s);
    s = std::fma(a2, b2[j], s);
    s = std::fma(a3, b3[j], s);
    c[j] = s;
  }
}

}  // namespace

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c) {
  for (std::size_t jb = 0; jb < n; jb += kNtRowBlock) {
    const std::size_t je = std::min(n, jb + kNtRowBlock);
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = a + i * k;
      double* ci = c + i * n;
      std::size_t j = jb;
      for (; j + 4 <= je; j += 4) {
        const double* b0 = b + j * k;
        const double* b1 = b0 + k;
        const double* b2 = b1 + k;
        const double* b3 = b2 + k;
        __m256d s0 = _mm256_setzero_pd();
        __m256d s1 = _mm256_setzero_pd();
        __m256d s2 = _mm256_setzero_pd();
        __m256d s3 = _mm256_setzero_pd();
        std::size_t p = 0;
        for (; p + 4 <= k; p += 4) {
          const __m256d va = _mm256_loadu_pd(ai + p);
          s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + p), s0);
          s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + p), s1);
          s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + p), s2);
          s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + p), s3);
        }
        double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
        for (; p < k; ++p) {
          r0 = std::fma(ai[p], b0[p], r0);
          r1 = std::fma(ai[p], b1[p], r1);
          r2 = std::fma(ai[p], b2[p], r2);
          r3 = std::fma(ai[p], b3[p], r3);
        }
        ci[j] = r0;
        ci[j + 1] = r1;
        ci[j + 2] = r2;
        ci[j + 3] = r3;
      }
      for (; j < je; ++j) ci[j] = dot_avx2(ai, b + j * k, k);
    }
  }
}

void gemm_nn_acc_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c) {
  for (std::size_t pb = 0; pb < k; pb += kNnDepthBlock) {
    const std::size_t pe = std::min(k, pb + kNnDepthBlock);
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = a + i * k;
      double* ci = c + i * n;
      std::size_t p = pb;
      for (; p + 4 <= pe; p += 4) {
        if (ai[p] == 0.0 && ai[p + 1] == 0.0 && ai[p + 2] == 0.0 && ai[p + 3] == 0.0) continue;
        const double* bp = b + p * n;
        axpy4(ai[p], ai[p + 1], ai[p + 2], ai[p + 3], bp, bp + n, bp + 2 * n, bp + 3 * n, ci, n);
      }
      for (; p < pe; ++p) {
        if (ai[p] != 0.0) axpy_avx2(ai[p], b + p * n, ci, n);
      }
    }
  }
}

void gemm_tn_acc_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c) {
  for (std::size_t ib = 0; ib < m; ib += kTnRowBlock) {
    const std::size_t ie = std::min(m, ib + kTnRowBlock);
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      const double* a0 = a + p * m;
      const double* a1 = a0 + m;
      const double* a2 = a1 + m;
      const double* a3 = a2 + m;
      const double* bp = b + p * n;
      for (std::size_t i = ib; i < ie; ++i) {
        if (a0[i] == 0.0 && a1[i] == 0.0 && a2[i] == 0.0 && a3[i] == 0.0) continue;
        axpy4(a0[i], a1[i], a2[i], a3[i], bp, bp + n, bp + 2 * n, bp + 3 * n, c + i * n, n);
      }
    }
    for (; p < k; ++p) {
      const double* ap = a + p * m;
      for (std::size_t i = ib; i < ie; ++i) {
        if (ap[i] != 0.0) axpy_avx2(ap[i], b + p * n, c + i * n, n);
      }
    }
  }
}

}  // namespace molexplain::kernels::detail
