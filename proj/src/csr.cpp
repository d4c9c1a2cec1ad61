#include "xvoxel/csr.hpp"

#include <algorithm>
#include <cmath>

#include "xvoxel/parallel.hpp"

namespace xv {

double Csr::at(int r, int c) const {
  const auto begin = cols.begin() + rowptr[r];
  const auto end = cols.begin() + rowptr[r + 1];
  const auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return 0.0;
  return vals[static_cast<std::size_t>(it - cols.begin())];
}

void Csr::matvec(const double* x, double* y) const {
  const auto& k = kern::active();
  parallel_for(0, n, 512, [&](std::int64_t r0, std::int64_t r1) {
    k.csr_spmv_rows(rowptr.data(), cols.data(), vals.data(), x, y, static_cast<int>(r0),
                    static_cast<int>(r1));
  });
}

double Csr::norm_inf() const {
  double best = 0.0;
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int k = rowptr[r]; k < rowptr[r + 1]; ++k) s += std::abs(vals[k]);
    best = std::max(best, s);
  }
  return best;
}

double Csr::symmetry_error() const {
  double err = 0.0;
  for (int r = 0; r < n; ++r)
    for (int k = rowptr[r]; k < rowptr[r + 1]; ++k) {
      const int c = cols[k];
      if (c < r) continue;
      err = std::max(err, std::abs(vals[k] - at(c, r)));
    }
  return err;
}

}  // namespace xv
