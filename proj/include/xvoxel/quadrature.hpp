#pragma once

#include <memory>
#include <vector>

#include "xvoxel/grid.hpp"

namespace xv {

struct QuadratureSettings {
  int depth = 3;        // octree refinement depth d
  int order = 2;        // shape-function order p; Gauss rule uses p+1 pts/axis
  double alpha = 1e-8;  // fictitious-material factor
  bool strict_fcm = false;  // keep fully-void voxels with weight alpha

  void validate() const;  // throws InvalidParameter
};

struct QuadPoint {
  Vec3 local;        // reference coords in [-1,1]^3 of the voxel
  double weight;     // reference weight; per-voxel sum is 8
  double heaviside;  // 1 for material points, alpha otherwise
  bool material;     // PMC in {IN, ON}
};

struct VoxelRule {
  VoxelNature nature = VoxelNature::kVoid;
  std::vector<QuadPoint> points;
  double material_weight_sum = 0.0;  // sum of weights with material = true
};

class QuadraturePlan {
 public:
  QuadraturePlan() = default;

  const QuadratureSettings& settings() const { return settings_; }
  const VoxelRule& rule(int v) const { return *rules_[v]; }
  const std::shared_ptr<const VoxelRule>& rule_ptr(int v) const { return rules_[v]; }
  int voxel_count() const { return static_cast<int>(rules_.size()); }
  // Shared-rule identity survives update_plan for untouched voxels.
  bool shares_rule(const QuadraturePlan& other, int v) const {
    return rules_[v] == other.rules_[v];
  }

  friend QuadraturePlan build_plan(const XVoxelGrid& grid, const QuadratureSettings& settings);
  friend QuadraturePlan update_plan(const QuadraturePlan& plan, const XVoxelGrid& grid,
                                    const std::vector<int>& active_set);

 private:
  QuadratureSettings settings_;
  std::array<int, 3> dims_{0, 0, 0};
  std::shared_ptr<const VoxelRule> solid_rule_;
  std::shared_ptr<const VoxelRule> void_rule_;
  std::vector<std::shared_ptr<const VoxelRule>> rules_;
};

QuadraturePlan build_plan(const XVoxelGrid& grid, const QuadratureSettings& settings);

// Rebuilds only the rules of `active_set`; other voxels share the previous
// plan's rule objects. Throws StalePlan on dimension mismatch.
QuadraturePlan update_plan(const QuadraturePlan& plan, const XVoxelGrid& grid,
                           const std::vector<int>& active_set);

// Material volume: alpha-weighted fictitious points are excluded.
double integrate_volume(const QuadraturePlan& plan, const XVoxelGrid& grid);

}  // namespace xv
