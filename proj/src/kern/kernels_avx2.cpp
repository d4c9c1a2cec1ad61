#include "xvoxel/kern/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace xv::kern {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double acc = hsum(acc0);
  for (; i < n; ++i) acc += x[i];
  return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpby_avx2(const double* x, double b, double* y, std::size_t n) {
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(vb, vy, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] = x[i] + b * y[i];
}

void axpy3_avx2(double a0, const double* x0, double a1, const double* x1,
                double a2, const double* x2, double* y, std::size_t n) {
  const __m256d v0 = _mm256_set1_pd(a0);
  const __m256d v1 = _mm256_set1_pd(a1);
  const __m256d v2 = _mm256_set1_pd(a2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(v0, _mm256_loadu_pd(x0 + i), vy);
    vy = _mm256_fmadd_pd(v1, _mm256_loadu_pd(x1 + i), vy);
    vy = _mm256_fmadd_pd(v2, _mm256_loadu_pd(x2 + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a0 * x0[i] + a1 * x1[i] + a2 * x2[i];
}

void hadamard_avx2(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void csr_spmv_rows_avx2(const int* rowptr, const int* cols, const double* vals,
                        const double* x, double* y, int row_begin, int row_end) {
  for (int r = row_begin; r < row_end; ++r) {
    const int k0 = rowptr[r];
    const int k1 = rowptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    int k = k0;
    for (; k + 4 <= k1; k += 4) {
      __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(cols + k));
      __m256d vx = _mm256_i32gather_pd(x, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(vals + k), vx, acc);
    }
    double s = hsum(acc);
    for (; k < k1; ++k) s += vals[k] * x[cols[k]];
    y[r] = s;
  }
}

void symv_packed_lower_avx2(const double* ap, int n, const double* x, double* y) {
  for (int i = 0; i < n; ++i) {
    const double* row = ap + static_cast<std::size_t>(i) * (i + 1) / 2;
    const double xi = x[i];
    const __m256d vxi = _mm256_set1_pd(xi);
    __m256d vacc = _mm256_setzero_pd();
    int j = 0;
    for (; j + 4 <= i; j += 4) {
      const __m256d vr = _mm256_loadu_pd(row + j);
      vacc = _mm256_fmadd_pd(vr, _mm256_loadu_pd(x + j), vacc);
      __m256d vy = _mm256_loadu_pd(y + j);
      _mm256_storeu_pd(y + j, _mm256_fmadd_pd(vr, vxi, vy));
    }
    double acc = hsum(vacc);
    for (; j < i; ++j) {
      acc += row[j] * x[j];
      y[j] += row[j] * xi;
    }
    y[i] += acc + row[i] * xi;
  }
}

const Backend kAvx2 = {
    "avx2",      dot_avx2,  sum_avx2,      axpy_avx2,
    xpby_avx2,   axpy3_avx2, hadamard_avx2, csr_spmv_rows_avx2,
    symv_packed_lower_avx2,
};

}  // namespace

bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Backend& avx2_backend() { return kAvx2; }

}  // namespace xv::kern

#endif  // x86_64
