#pragma once

#include <cstdint>
#include <vector>

namespace xv {

// Square sparse matrix, CSR with column-sorted rows.
struct Csr {
  int n = 0;
  std::vector<int> rowptr;
  std::vector<int> cols;
  std::vector<double> vals;

  std::size_t nnz() const { return cols.size(); }

  // Value at (r,c) or 0; binary search within the row.
  double at(int r, int c) const;

  // y = A x, parallel over row blocks (deterministic: disjoint writes).
  void matvec(const double* x, double* y) const;

  double norm_inf() const;

  // max |A - A^T| entry, for symmetry checks.
  double symmetry_error() const;
};

}  // namespace xv
