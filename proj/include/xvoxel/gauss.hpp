#pragma once

#include <array>
#include <cmath>
#include <span>

namespace xv {

// Gauss-Legendre rules on [-1,1] for n = 1..4 points. The middle weight is
// renormalized so each rule sums to exactly 2.0 in double precision, which
// keeps per-voxel reference weights summing to 8 under subdivision.
struct GaussRule {
  std::span<const double> nodes;
  std::span<const double> weights;
};

GaussRule gauss_rule(int n);

}  // namespace xv
