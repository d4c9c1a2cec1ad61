#include "xvoxel/solve.hpp"

#include <cmath>

#include "xvoxel/errors.hpp"
#include "xvoxel/log.hpp"
#include "xvoxel/parallel.hpp"

namespace xv {

namespace {

// Zero-fill incomplete Cholesky on the lower-triangular pattern of A.
struct Ic0 {
  Csr L;  // lower triangle including diagonal, column-sorted
  bool valid = false;

  bool factor(const Csr& A, double shift) {
    const int n = A.n;
    L.n = n;
    L.rowptr.assign(n + 1, 0);
    for (int r = 0; r < n; ++r)
      for (int k = A.rowptr[r]; k < A.rowptr[r + 1]; ++k)
        if (A.cols[k] <= r) ++L.rowptr[r + 1];
    for (int r = 0; r < n; ++r) L.rowptr[r + 1] += L.rowptr[r];
    L.cols.resize(static_cast<std::size_t>(L.rowptr[n]));
    L.vals.resize(L.cols.size());
    std::vector<int> diag_at(n, -1);
    for (int r = 0; r < n; ++r) {
      int dst = L.rowptr[r];
      for (int k = A.rowptr[r]; k < A.rowptr[r + 1]; ++k) {
        const int c = A.cols[k];
        if (c > r) break;
        L.cols[dst] = c;
        L.vals[dst] = (c == r) ? A.vals[k] * (1.0 + shift) : A.vals[k];
        ++dst;
      }
      diag_at[r] = dst - 1;
      if (L.cols[dst - 1] != r) return false;  // structurally missing diagonal
    }

    for (int i = 0; i < n; ++i) {
      const int i0 = L.rowptr[i], i1 = diag_at[i];
      for (int ki = i0; ki < i1; ++ki) {
        const int j = L.cols[ki];
        // L(i,j) = (A(i,j) - sum_m L(i,m) L(j,m)) / L(j,j), m < j
        double s = L.vals[ki];
        int pi = i0, pj = L.rowptr[j];
        const int je = diag_at[j];
        while (pi < ki && pj < je) {
          if (L.cols[pi] == L.cols[pj]) s -= L.vals[pi++] * L.vals[pj++];
          else if (L.cols[pi] < L.cols[pj]) ++pi;
          else ++pj;
        }
        L.vals[ki] = s / L.vals[diag_at[j]];
      }
      double d = L.vals[i1];
      for (int ki = i0; ki < i1; ++ki) d -= L.vals[ki] * L.vals[ki];
      if (!(d > 0.0)) return false;
      L.vals[i1] = std::sqrt(d);
    }
    valid = true;
    return true;
  }

  // z = (L L^T)^{-1} r
  void apply(const double* r, double* z, std::vector<double>& tmp) const {
    const int n = L.n;
    tmp.assign(r, r + n);
    for (int i = 0; i < n; ++i) {
      const int k0 = L.rowptr[i], k1 = L.rowptr[i + 1] - 1;
      double s = tmp[i];
      for (int k = k0; k < k1; ++k) s -= L.vals[k] * tmp[L.cols[k]];
      tmp[i] = s / L.vals[k1];
    }
    for (int i = 0; i < n; ++i) z[i] = tmp[i];
    for (int i = n - 1; i >= 0; --i) {
      const int k0 = L.rowptr[i], k1 = L.rowptr[i + 1] - 1;
      const double zi = (z[i] /= L.vals[k1]);
      for (int k = k0; k < k1; ++k) z[L.cols[k]] -= L.vals[k] * zi;
    }
  }
};

}  // namespace

SolveInfo solve(ElasticSystem& sys, const SolveOptions& options) {
  const int n = sys.n_dofs;
  SolveInfo info;
  if (n == 0) return info;
  const auto& kb = kern::active();

  const double bnorm = std::sqrt(det_dot(sys.F.data(), sys.F.data(), n));
  if (sys.Q.size() != static_cast<std::size_t>(n)) sys.Q.assign(n, 0.0);
  if (bnorm == 0.0) {
    std::fill(sys.Q.begin(), sys.Q.end(), 0.0);
    return info;
  }
  if (!options.warm_start) std::fill(sys.Q.begin(), sys.Q.end(), 0.0);

  Ic0 ic;
  if (options.use_ic0) {
    double shift = 0.0;
    for (int attempt = 0; attempt < 4 && !ic.valid; ++attempt) {
      if (!ic.factor(sys.K, shift)) {
        ic.valid = false;
        shift = (shift == 0.0) ? 1e-3 : shift * 10.0;
      }
    }
    if (!ic.valid) log_info("IC(0) breakdown; falling back to Jacobi preconditioning");
  }
  std::vector<double> inv_diag;
  if (!ic.valid) {
    inv_diag.resize(n);
    for (int r = 0; r < n; ++r) {
      const double d = sys.K.at(r, r);
      inv_diag[r] = d > 0.0 ? 1.0 / d : 1.0;
    }
  }

  std::vector<double> r(n), z(n), p(n), q(n), tmp;
  sys.K.matvec(sys.Q.data(), r.data());
  for (int i = 0; i < n; ++i) r[i] = sys.F[i] - r[i];

  auto precondition = [&](const double* rin, double* zout) {
    if (ic.valid) ic.apply(rin, zout, tmp);
    else kb.hadamard(rin, inv_diag.data(), zout, n);
  };

  precondition(r.data(), z.data());
  p = z;
  double rz = det_dot(r.data(), z.data(), n);
  const int cap = std::max(100, static_cast<int>(options.iter_cap_factor * std::sqrt(double(n))));
  double rel = std::sqrt(det_dot(r.data(), r.data(), n)) / bnorm;

  int it = 0;
  while (rel > options.tol) {
    if (it >= cap)
      throw NonConvergence("CG hit iteration cap " + std::to_string(cap) +
                           " with relative residual " + std::to_string(rel));
    sys.K.matvec(p.data(), q.data());
    const double pq = det_dot(p.data(), q.data(), n);
    if (!(pq > 0.0))
      throw NonConvergence("CG curvature non-positive (system not SPD?)");
    const double alpha = rz / pq;
    kb.axpy(alpha, p.data(), sys.Q.data(), n);
    kb.axpy(-alpha, q.data(), r.data(), n);
    rel = std::sqrt(det_dot(r.data(), r.data(), n)) / bnorm;
    precondition(r.data(), z.data());
    const double rz_new = det_dot(r.data(), z.data(), n);
    kb.xpby(z.data(), rz_new / rz, p.data(), n);
    rz = rz_new;
    ++it;
  }

  info.iterations = it;
  info.relative_residual = rel;
  info.compliance = det_dot(sys.F.data(), sys.Q.data(), n);
  return info;
}

}  // namespace xv
