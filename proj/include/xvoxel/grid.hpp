#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xvoxel/feature.hpp"
#include "xvoxel/geometry.hpp"

namespace xv {

enum class Occupancy : std::uint8_t { kComplete, kPartial };
enum class VoxelNature : std::uint8_t { kSolid, kVoid, kCut };
enum class Membership : std::uint8_t { kIn, kOn, kOut };

const char* to_string(VoxelNature n);
const char* to_string(Membership m);

struct VoxelAttribute {
  std::int32_t feature_index;
  Nature nature;
  Occupancy occupancy;

  bool operator==(const VoxelAttribute&) const = default;
};

struct PmcResult {
  Membership membership = Membership::kOut;
  int governing = -1;  // feature index whose nature decided the answer
};

// Regular hexahedral grid whose voxels carry the ordered feature history
// that touches them. Feature indices are stable; history order is tracked
// with a precedence rank so rearrangement never renumbers features.
class XVoxelGrid {
 public:
  XVoxelGrid(const Vec3& origin, double voxel_size, const std::array<int, 3>& dims);

  // --- geometry ----------------------------------------------------------
  const Vec3& origin() const { return origin_; }
  double voxel_size() const { return h_; }
  const std::array<int, 3>& dims() const { return dims_; }
  int voxel_count() const { return nv_; }
  double eps_on() const { return eps_on_; }

  int flat_index(int ix, int iy, int iz) const {
    return ix + dims_[0] * (iy + dims_[1] * iz);
  }
  std::array<int, 3> unflatten(int v) const {
    return {v % dims_[0], (v / dims_[0]) % dims_[1], v / (dims_[0] * dims_[1])};
  }
  Aabb voxel_aabb(int v) const;
  Vec3 voxel_center(int v) const;
  Aabb domain() const;
  // Voxel containing x; upper domain faces map into the last voxel.
  // Throws OutOfDomain when x lies outside the grid.
  int voxel_of(const Vec3& x) const;

  // --- feature history ---------------------------------------------------
  // Appends the feature at the end of the history. Returns its index and,
  // optionally, the set of voxels it touches. Features reaching outside the
  // grid are clipped with a warning.
  int add_feature(const Feature& feature, std::vector<int>* touched = nullptr);

  // Virtual deletion clears the active bit and leaves attribute lists
  // untouched; physical deletion removes the attribute entries. Physical
  // deletion with live dependents requires cascade. Returns affected voxels.
  std::vector<int> delete_feature(int fid, bool virtual_delete, bool cascade = false);
  // Re-activates a virtually deleted feature.
  std::vector<int> restore_feature(int fid);

  // Physical delete + re-insert at the original precedence with new combined
  // parameters (kind params followed by the 3 translation components).
  // Returns the union of old and new footprints (the active voxel set).
  std::vector<int> edit_parameters(int fid, const std::vector<double>& combined_params);

  // Reorders history. new_order lists live feature indices in their new
  // chronological order and must respect depends_on precedence.
  // Returns the voxels whose attribute sequence changed.
  std::vector<int> rearrange_features(const std::vector<int>& new_order);

  // --- queries -----------------------------------------------------------
  int feature_count() const { return static_cast<int>(features_.size()); }
  bool is_live(int fid) const;
  bool is_active(int fid) const;  // live and not virtually deleted
  const Feature& feature(int fid) const;
  const std::vector<int>& feature_footprint(int fid) const;
  const std::vector<int>& dependents(int fid) const;
  int find_feature(const std::string& name) const;  // -1 when absent
  // Live feature indices in precedence (history) order.
  std::vector<int> history_order() const;

  const std::vector<VoxelAttribute>& attributes(int v) const { return voxels_[v]; }
  VoxelNature voxel_nature(int v) const;

  Membership classify_point(const Vec3& x) const;
  PmcResult classify_point_ex(const Vec3& x) const;
  // PMC with the containing voxel already known (hot path for quadrature).
  PmcResult classify_in_voxel(int v, const Vec3& x) const;
  // Same, with the screen truncated immediately before `excluded_fid`
  // (used by the exposed-boundary test).
  PmcResult classify_in_voxel_before(int v, const Vec3& x, int excluded_fid) const;

  // Active screened feature indices of the voxel, from the governing
  // complete-occupancy entry (if any) to the history tail.
  std::vector<int> screened_features(int v) const;

  // Internal-consistency check (feature_voxels bidirectional, ordering);
  // returns a human-readable violation or nullopt.
  std::optional<std::string> check_invariants() const;

 private:
  struct Slot {
    Feature feature;
    bool live = true;
    bool active = true;
    int precedence = 0;
    std::vector<int> voxels;     // sorted footprint
    std::vector<int> deps;       // indices this feature depends on
    std::vector<int> dependents; // indices depending on this feature
  };

  enum class BoxClass { kOutside, kPartial, kComplete };
  BoxClass classify_box(const Feature& f, const Aabb& box) const;
  bool box_reaches(const Feature& f, const Vec3& center, double half, double threshold,
                   int depth) const;
  bool box_all_at_least(const Feature& f, const Vec3& center, double half, double threshold,
                        int depth) const;

  std::vector<int> compute_footprint(const Feature& f,
                                     std::vector<std::pair<int, Occupancy>>* occ) const;
  void insert_attributes(int fid, const std::vector<std::pair<int, Occupancy>>& occ);
  void remove_attributes(int fid);
  PmcResult classify_screened(int v, const Vec3& x, int excluded_fid) const;

  Vec3 origin_;
  double h_;
  std::array<int, 3> dims_;
  int nv_;
  double eps_on_;
  std::vector<std::vector<VoxelAttribute>> voxels_;
  std::vector<Slot> features_;
  int next_precedence_ = 0;
};

}  // namespace xv
