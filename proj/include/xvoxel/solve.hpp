#pragma once

#include "xvoxel/assembly.hpp"

namespace xv {

struct SolveOptions {
  double tol = 1e-10;            // relative residual
  double iter_cap_factor = 20.0; // cap = factor * sqrt(n_dofs)
  bool use_ic0 = true;           // incomplete-Cholesky preconditioner
  bool warm_start = true;        // start from the system's current Q
};

struct SolveInfo {
  int iterations = 0;
  double relative_residual = 0.0;
  double compliance = 0.0;  // F^T Q
};

// Preconditioned conjugate gradients on the constrained system. Deterministic
// for any thread count (chunked reductions, disjoint row writes, serial
// triangular sweeps). Throws NonConvergence at the iteration cap.
SolveInfo solve(ElasticSystem& system, const SolveOptions& options = {});

}  // namespace xv
