#pragma once

#include <cstddef>
#include <string>

namespace xv::kern {

// Table of data-parallel inner-loop kernels. Every entry has a scalar
// reference implementation; SIMD variants are selected at runtime and must
// agree with the scalar path up to floating-point reassociation.
struct Backend {
  const char* name;

  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);

  // y += a*x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = x + b*y
  void (*xpby)(const double* x, double b, double* y, std::size_t n);
  // y += a0*x0 + a1*x1 + a2*x2  (fused triple update used by BtDB accumulation)
  void (*axpy3)(double a0, const double* x0, double a1, const double* x1,
                double a2, const double* x2, double* y, std::size_t n);
  // z = x .* y
  void (*hadamard)(const double* x, const double* y, double* z, std::size_t n);

  // y[r] = sum_k vals[k]*x[cols[k]] for rows in [row_begin, row_end)
  void (*csr_spmv_rows)(const int* rowptr, const int* cols, const double* vals,
                        const double* x, double* y, int row_begin, int row_end);

  // y += A*x with A symmetric, packed row-major lower triangle
  // (ap[i*(i+1)/2 + j], j <= i).
  void (*symv_packed_lower)(const double* ap, int n, const double* x, double* y);
};

const Backend& scalar_backend();
#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported();
const Backend& avx2_backend();
#endif
#if defined(__aarch64__)
const Backend& neon_backend();
#endif

// Runtime-selected backend. Selection order: XVOXEL_SIMD env var
// ("scalar", "avx2", "neon", "auto"), then CPU detection, then scalar.
const Backend& active();

// Force a backend by name; "auto" re-runs detection. Throws on unknown or
// unsupported names. Intended for tests and the --simd CLI flag.
void set_backend(const std::string& name);

}  // namespace xv::kern
