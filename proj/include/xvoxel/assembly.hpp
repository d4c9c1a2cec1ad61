#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "xvoxel/csr.hpp"
#include "xvoxel/element.hpp"
#include "xvoxel/grid.hpp"
#include "xvoxel/material.hpp"
#include "xvoxel/quadrature.hpp"

namespace xv {

struct BoundaryRegion {
  enum class Type { kBox, kFeatureFace };
  Type type = Type::kBox;
  Aabb box;             // kBox: axis-aligned selector
  std::string feature;  // kFeatureFace: exposed boundary of this feature
};

enum class TractionProfile { kConstant, kBearingSinusoidal, kRadialCosineDecay };

struct BoundaryCondition {
  enum class Kind { kDirichletZero, kNeumannTraction };
  Kind kind = Kind::kDirichletZero;
  BoundaryRegion region;
  std::array<bool, 3> components{true, true, true};  // Dirichlet mask

  Vec3 traction = Vec3::Zero();
  TractionProfile profile = TractionProfile::kConstant;
  // bearing_sinusoidal: axis/center of the loaded hole (cos falloff around
  // the traction direction, clamped at zero).
  // radial_cosine_decay: |t| scaled by cos(min(pi/2, dist/radius * pi/2))^exponent.
  Vec3 profile_center = Vec3::Zero();
  Vec3 profile_axis = Vec3(0, 0, 1);
  double profile_radius = 1.0;
  double profile_exponent = 8.0;
};

struct AssemblyOptions {
  bool require_dirichlet = true;
  // Chord tolerance for feature-face load integration, as a fraction of the
  // voxel size.
  double neumann_chord_factor = 0.125;
};

// Assembled FCM system on the order-p node lattice restricted to non-void
// voxels (all voxels in strict-FCM mode). Dirichlet is imposed by zeroed
// rows/columns with a unit diagonal.
class ElasticSystem {
 public:
  int order = 2;
  std::array<int, 3> dims{0, 0, 0};
  Vec3 origin = Vec3::Zero();
  double voxel_size = 1.0;
  Material material;
  bool strict_fcm = false;

  std::array<int, 3> lattice_dims{0, 0, 0};
  std::vector<std::int32_t> node_compact;  // lattice node -> compact id (-1 outside)
  std::vector<std::int32_t> node_lattice;  // compact id -> lattice node
  int n_nodes = 0;
  int n_dofs = 0;

  Csr K;
  std::vector<double> F;
  std::vector<std::uint8_t> constrained;  // per dof
  std::vector<double> Q;                  // solution (warm-started across steps)

  // per-voxel state for incremental reassembly
  std::vector<std::uint8_t> included;
  std::vector<std::shared_ptr<const VoxelRule>> voxel_rule;
  std::vector<std::shared_ptr<const ElementMatrix>> voxel_matrix;

  std::int64_t last_recomputed_elements = 0;  // diagnostics

  int lattice_index(int gx, int gy, int gz) const {
    return gx + lattice_dims[0] * (gy + lattice_dims[1] * gz);
  }
  Vec3 node_position(int lattice_id) const;
  // Lattice ids of the (p+1)^3 nodes of voxel v, ascending.
  void element_nodes(int v, std::vector<int>* out) const;
  // Voxels containing the lattice node (up to 8).
  void voxels_of_node(int lattice_id, std::vector<int>* out) const;
  // Gathers the element displacement vector (node-major, 3 per node).
  void gather_element(int v, std::vector<double>* out) const;

  // Compact corner-node displacement on the (nx+1)(ny+1)(nz+1) grid lattice.
  void corner_displacement(std::vector<Vec3>* u, std::vector<std::uint8_t>* valid) const;
};

ElasticSystem assemble(const XVoxelGrid& grid, const QuadraturePlan& plan,
                       const Material& material, const std::vector<BoundaryCondition>& bcs,
                       const AssemblyOptions& options = {});

// Subtract-free incremental update: rows of nodes touching `active_set` are
// rebuilt from cached element matrices, giving bitwise equality with a fresh
// assemble() whenever the retained-voxel set is unchanged (falls back to a
// full re-sum, still from cached matrices, when it is not).
void reassemble_incremental(ElasticSystem& system, const XVoxelGrid& grid,
                            const QuadraturePlan& plan,
                            const std::vector<BoundaryCondition>& bcs,
                            const std::vector<int>& active_set,
                            const AssemblyOptions& options = {});

// Exposure probe shared by load integration and sensitivities: true when the
// point sits on the current model boundary with `void_dir` pointing into
// void and the opposite side in material.
bool boundary_point_exposed(const XVoxelGrid& grid, const Vec3& x, const Vec3& void_dir,
                            double probe_offset);

}  // namespace xv
