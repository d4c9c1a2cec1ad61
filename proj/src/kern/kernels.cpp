#include "xvoxel/kern/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <stdexcept>

namespace xv::kern {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpby_scalar(const double* x, double b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + b * y[i];
}

void axpy3_scalar(double a0, const double* x0, double a1, const double* x1,
                  double a2, const double* x2, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += a0 * x0[i] + a1 * x1[i] + a2 * x2[i];
}

void hadamard_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void csr_spmv_rows_scalar(const int* rowptr, const int* cols, const double* vals,
                          const double* x, double* y, int row_begin, int row_end) {
  for (int r = row_begin; r < row_end; ++r) {
    double acc = 0.0;
    for (int k = rowptr[r]; k < rowptr[r + 1]; ++k) acc += vals[k] * x[cols[k]];
    y[r] = acc;
  }
}

void symv_packed_lower_scalar(const double* ap, int n, const double* x, double* y) {
  for (int i = 0; i < n; ++i) {
    const double* row = ap + static_cast<std::size_t>(i) * (i + 1) / 2;
    const double xi = x[i];
    double acc = 0.0;
    for (int j = 0; j < i; ++j) {
      acc += row[j] * x[j];
      y[j] += row[j] * xi;
    }
    y[i] += acc + row[i] * xi;
  }
}

const Backend kScalar = {
    "scalar",        dot_scalar,  sum_scalar,           axpy_scalar,
    xpby_scalar,     axpy3_scalar, hadamard_scalar,     csr_spmv_rows_scalar,
    symv_packed_lower_scalar,
};

std::atomic<const Backend*> g_active{nullptr};
std::mutex g_select_mutex;

const Backend* detect() {
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) return &avx2_backend();
#endif
#if defined(__aarch64__)
  return &neon_backend();
#endif
  return &kScalar;
}

const Backend* select_from_env() {
  const char* env = std::getenv("XVOXEL_SIMD");
  if (env == nullptr || std::string(env) == "auto") return detect();
  const std::string want(env);
  if (want == "scalar") return &kScalar;
#if defined(__x86_64__) || defined(_M_X64)
  if (want == "avx2" && avx2_supported()) return &avx2_backend();
#endif
#if defined(__aarch64__)
  if (want == "neon") return &neon_backend();
#endif
  return detect();  // unknown or unsupported value: fall back silently
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active() {
  const Backend* b = g_active.load(std::memory_order_acquire);
  if (b == nullptr) {
    std::lock_guard<std::mutex> lock(g_select_mutex);
    b = g_active.load(std::memory_order_relaxed);
    if (b == nullptr) {
      b = select_from_env();
      g_active.store(b, std::memory_order_release);
    }
  }
  return *b;
}

void set_backend(const std::string& name) {
  std::lock_guard<std::mutex> lock(g_select_mutex);
  if (name == "auto") {
    g_active.store(detect(), std::memory_order_release);
    return;
  }
  if (name == "scalar") {
    g_active.store(&kScalar, std::memory_order_release);
    return;
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (name == "avx2") {
    if (!avx2_supported()) throw std::runtime_error("avx2 not supported on this CPU");
    g_active.store(&avx2_backend(), std::memory_order_release);
    return;
  }
#endif
#if defined(__aarch64__)
  if (name == "neon") {
    g_active.store(&neon_backend(), std::memory_order_release);
    return;
  }
#endif
  throw std::runtime_error("unknown SIMD backend: " + name);
}

}  // namespace xv::kern
