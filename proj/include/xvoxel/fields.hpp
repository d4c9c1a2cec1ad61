#pragma once

#include <vector>

#include "xvoxel/assembly.hpp"

namespace xv {

// Mode-independent result sample: displacements at the grid corner lattice
// plus a per-voxel von Mises value, so FCM orders and CBN fields compare on
// a common footing.
struct FieldOutput {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<Vec3> corner_displacement;      // (nx+1)(ny+1)(nz+1)
  std::vector<std::uint8_t> corner_valid;
  std::vector<double> cell_von_mises;         // per voxel (0 in void)
  double compliance = 0.0;
  int dofs = 0;
};

struct ResidualMetric {
  double global = 0.0;      // ||u1-u0|| / ||u0|| over common valid nodes
  double top_decile = 0.0;  // same ratio restricted to the top 10% |u0| nodes
};

FieldOutput compute_field_output(const ElasticSystem& system, const XVoxelGrid& grid,
                                 const QuadraturePlan& plan, double compliance);

// Displacement residual r_u between two corner fields.
ResidualMetric displacement_residual(const FieldOutput& u1, const FieldOutput& u0);

double von_mises(const Eigen::Matrix<double, 6, 1>& stress);

}  // namespace xv
