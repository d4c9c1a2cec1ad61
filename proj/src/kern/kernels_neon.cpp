#include "xvoxel/kern/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace xv::kern {

namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_neon(const double* x, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
  double acc = vaddvq_f64(acc0);
  for (; i < n; ++i) acc += x[i];
  return acc;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpby_neon(const double* x, double b, double* y, std::size_t n) {
  const float64x2_t vb = vdupq_n_f64(b);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(x + i), vb, vld1q_f64(y + i)));
  for (; i < n; ++i) y[i] = x[i] + b * y[i];
}

void axpy3_neon(double a0, const double* x0, double a1, const double* x1,
                double a2, const double* x2, double* y, std::size_t n) {
  const float64x2_t v0 = vdupq_n_f64(a0);
  const float64x2_t v1 = vdupq_n_f64(a1);
  const float64x2_t v2 = vdupq_n_f64(a2);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vy = vld1q_f64(y + i);
    vy = vfmaq_f64(vy, v0, vld1q_f64(x0 + i));
    vy = vfmaq_f64(vy, v1, vld1q_f64(x1 + i));
    vy = vfmaq_f64(vy, v2, vld1q_f64(x2 + i));
    vst1q_f64(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a0 * x0[i] + a1 * x1[i] + a2 * x2[i];
}

void hadamard_neon(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(z + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void csr_spmv_rows_neon(const int* rowptr, const int* cols, const double* vals,
                        const double* x, double* y, int row_begin, int row_end) {
  for (int r = row_begin; r < row_end; ++r) {
    double acc = 0.0;
    for (int k = rowptr[r]; k < rowptr[r + 1]; ++k) acc += vals[k] * x[cols[k]];
    y[r] = acc;
  }
}

void symv_packed_lower_neon(const double* ap, int n, const double* x, double* y) {
  for (int i = 0; i < n; ++i) {
    const double* row = ap + static_cast<std::size_t>(i) * (i + 1) / 2;
    const double xi = x[i];
    const float64x2_t vxi = vdupq_n_f64(xi);
    float64x2_t vacc = vdupq_n_f64(0.0);
    int j = 0;
    for (; j + 2 <= i; j += 2) {
      const float64x2_t vr = vld1q_f64(row + j);
      vacc = vfmaq_f64(vacc, vr, vld1q_f64(x + j));
      vst1q_f64(y + j, vfmaq_f64(vld1q_f64(y + j), vr, vxi));
    }
    double acc = vaddvq_f64(vacc);
    for (; j < i; ++j) {
      acc += row[j] * x[j];
      y[j] += row[j] * xi;
    }
    y[i] += acc + row[i] * xi;
  }
}

const Backend kNeon = {
    "neon",      dot_neon,  sum_neon,      axpy_neon,
    xpby_neon,   axpy3_neon, hadamard_neon, csr_spmv_rows_neon,
    symv_packed_lower_neon,
};

}  // namespace

const Backend& neon_backend() { return kNeon; }

}  // namespace xv::kern

#endif  // __aarch64__
