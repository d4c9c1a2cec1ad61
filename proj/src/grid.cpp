#include "xvoxel/grid.hpp"

#include <algorithm>
#include <cmath>

#include "xvoxel/errors.hpp"
#include "xvoxel/log.hpp"

namespace xv {

namespace {
constexpr int kBnbDepth = 4;  // interval-test refinement depth per voxel
}

const char* to_string(VoxelNature n) {
  switch (n) {
    case VoxelNature::kSolid: return "solid";
    case VoxelNature::kVoid: return "void";
    case VoxelNature::kCut: return "cut";
  }
  return "?";
}

const char* to_string(Membership m) {
  switch (m) {
    case Membership::kIn: return "IN";
    case Membership::kOn: return "ON";
    case Membership::kOut: return "OUT";
  }
  return "?";
}

XVoxelGrid::XVoxelGrid(const Vec3& origin, double voxel_size, const std::array<int, 3>& dims)
    : origin_(origin), h_(voxel_size), dims_(dims) {
  if (!(voxel_size > 0.0) || dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
    throw GridMismatch("grid requires positive voxel_size and dims");
  nv_ = dims_[0] * dims_[1] * dims_[2];
  eps_on_ = 1e-9 * h_;
  voxels_.resize(static_cast<std::size_t>(nv_));
}

Aabb XVoxelGrid::voxel_aabb(int v) const {
  const auto ijk = unflatten(v);
  Aabb b;
  b.min = origin_ + h_ * Vec3(ijk[0], ijk[1], ijk[2]);
  b.max = b.min + Vec3::Constant(h_);
  return b;
}

Vec3 XVoxelGrid::voxel_center(int v) const {
  const auto ijk = unflatten(v);
  return origin_ + h_ * Vec3(ijk[0] + 0.5, ijk[1] + 0.5, ijk[2] + 0.5);
}

Aabb XVoxelGrid::domain() const {
  Aabb b;
  b.min = origin_;
  b.max = origin_ + h_ * Vec3(dims_[0], dims_[1], dims_[2]);
  return b;
}

int XVoxelGrid::voxel_of(const Vec3& x) const {
  const Vec3 rel = (x - origin_) / h_;
  std::array<int, 3> ijk;
  for (int k = 0; k < 3; ++k) {
    if (rel[k] < 0.0 || rel[k] > dims_[k])
      throw OutOfDomain("point outside grid domain");
    ijk[k] = std::min(static_cast<int>(rel[k]), dims_[k] - 1);
  }
  return flat_index(ijk[0], ijk[1], ijk[2]);
}

// --- occupancy classification ---------------------------------------------
//
// "Complete" must certify the whole voxel lies inside the feature and
// "touched" must match the exact AABB-vs-feature intersection, so the corner
// and center samples are refined with a Lipschitz interval test (|phi| is a
// lower bound on the true distance for every kind).

bool XVoxelGrid::box_reaches(const Feature& f, const Vec3& center, double half,
                             double threshold, int depth) const {
  const double phi = sdf(f, center);
  if (phi >= threshold) return true;
  const double half_diag = half * std::sqrt(3.0);
  if (phi + half_diag < threshold) return false;
  if (depth == 0) return false;
  const double q = 0.5 * half;
  for (int c = 0; c < 8; ++c) {
    const Vec3 sub = center + Vec3(c & 1 ? q : -q, c & 2 ? q : -q, c & 4 ? q : -q);
    if (box_reaches(f, sub, q, threshold, depth - 1)) return true;
  }
  return false;
}

bool XVoxelGrid::box_all_at_least(const Feature& f, const Vec3& center, double half,
                                  double threshold, int depth) const {
  const double phi = sdf(f, center);
  const double half_diag = half * std::sqrt(3.0);
  if (phi - half_diag >= threshold) return true;
  if (phi < threshold) return false;
  if (depth == 0) return false;  // undecided: err toward partial
  const double q = 0.5 * half;
  for (int c = 0; c < 8; ++c) {
    const Vec3 sub = center + Vec3(c & 1 ? q : -q, c & 2 ? q : -q, c & 4 ? q : -q);
    if (!box_all_at_least(f, sub, q, threshold, depth - 1)) return false;
  }
  return true;
}

XVoxelGrid::BoxClass XVoxelGrid::classify_box(const Feature& f, const Aabb& box) const {
  const Vec3 center = 0.5 * (box.min + box.max);
  const double half = 0.5 * (box.max.x() - box.min.x());
  const double half_diag = half * std::sqrt(3.0);
  const double phi_c = sdf(f, center);
  if (phi_c - half_diag >= eps_on_) return BoxClass::kComplete;
  if (phi_c + half_diag < -eps_on_) return BoxClass::kOutside;

  bool corner_outside = false;
  bool corner_inside = phi_c >= eps_on_;
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner(c & 1 ? box.max.x() : box.min.x(), c & 2 ? box.max.y() : box.min.y(),
                      c & 4 ? box.max.z() : box.min.z());
    const double phi = sdf(f, corner);
    if (phi < eps_on_) corner_outside = true;
    if (phi >= -eps_on_) corner_inside = true;
  }
  if (!corner_inside && !box_reaches(f, center, half, -eps_on_, kBnbDepth))
    return BoxClass::kOutside;
  if (!corner_outside && box_all_at_least(f, center, half, eps_on_, kBnbDepth))
    return BoxClass::kComplete;
  return BoxClass::kPartial;
}

std::vector<int> XVoxelGrid::compute_footprint(
    const Feature& f, std::vector<std::pair<int, Occupancy>>* occ) const {
  const Aabb dom = domain();
  if (!dom.intersects(f.aabb)) {
    if (!f.aabb.empty())
      log_warn("feature '" + f.spec.name + "' lies outside the grid; clipped to nothing");
    return {};
  }
  if ((f.aabb.min.array() < dom.min.array()).any() ||
      (f.aabb.max.array() > dom.max.array()).any())
    log_warn("feature '" + f.spec.name + "' extends beyond the grid; clipped");

  std::array<int, 3> lo, hi;
  for (int k = 0; k < 3; ++k) {
    lo[k] = std::clamp(static_cast<int>(std::floor((f.aabb.min[k] - origin_[k]) / h_)), 0,
                       dims_[k] - 1);
    hi[k] = std::clamp(static_cast<int>(std::floor((f.aabb.max[k] - origin_[k]) / h_)), 0,
                       dims_[k] - 1);
  }
  std::vector<int> touched;
  for (int iz = lo[2]; iz <= hi[2]; ++iz)
    for (int iy = lo[1]; iy <= hi[1]; ++iy)
      for (int ix = lo[0]; ix <= hi[0]; ++ix) {
        const int v = flat_index(ix, iy, iz);
        const BoxClass c = classify_box(f, voxel_aabb(v));
        if (c == BoxClass::kOutside) continue;
        touched.push_back(v);
        if (occ != nullptr)
          occ->emplace_back(v, c == BoxClass::kComplete ? Occupancy::kComplete
                                                        : Occupancy::kPartial);
      }
  return touched;
}

void XVoxelGrid::insert_attributes(int fid,
                                   const std::vector<std::pair<int, Occupancy>>& occ) {
  const int prec = features_[fid].precedence;
  const Nature nature = features_[fid].feature.spec.nature;
  for (const auto& [v, o] : occ) {
    auto& list = voxels_[v];
    auto it = std::find_if(list.begin(), list.end(), [&](const VoxelAttribute& a) {
      return features_[a.feature_index].precedence > prec;
    });
    list.insert(it, VoxelAttribute{fid, nature, o});
  }
}

void XVoxelGrid::remove_attributes(int fid) {
  for (int v : features_[fid].voxels) {
    auto& list = voxels_[v];
    list.erase(std::remove_if(list.begin(), list.end(),
                              [&](const VoxelAttribute& a) { return a.feature_index == fid; }),
               list.end());
  }
}

int XVoxelGrid::add_feature(const Feature& feature, std::vector<int>* touched) {
  for (const auto& dep : feature.spec.depends_on)
    if (find_feature(dep) < 0)
      throw DependencyViolation("feature '" + feature.spec.name + "' depends on undeclared '" +
                                dep + "'");

  Slot slot;
  slot.feature = feature;
  slot.precedence = next_precedence_++;
  for (const auto& dep : feature.spec.depends_on) slot.deps.push_back(find_feature(dep));

  const int fid = static_cast<int>(features_.size());
  std::vector<std::pair<int, Occupancy>> occ;
  slot.voxels = compute_footprint(feature, &occ);
  features_.push_back(std::move(slot));
  for (int d : features_[fid].deps) features_[d].dependents.push_back(fid);
  // New feature has the highest precedence: appending keeps lists ordered.
  for (const auto& [v, o] : occ)
    voxels_[v].push_back(VoxelAttribute{fid, feature.spec.nature, o});
  if (touched != nullptr) *touched = features_[fid].voxels;
  return fid;
}

bool XVoxelGrid::is_live(int fid) const {
  return fid >= 0 && fid < feature_count() && features_[fid].live;
}

bool XVoxelGrid::is_active(int fid) const { return is_live(fid) && features_[fid].active; }

const Feature& XVoxelGrid::feature(int fid) const {
  if (fid < 0 || fid >= feature_count()) throw UnknownFeature("bad feature index");
  return features_[fid].feature;
}

const std::vector<int>& XVoxelGrid::feature_footprint(int fid) const {
  if (!is_live(fid)) throw UnknownFeature("feature not live");
  return features_[fid].voxels;
}

const std::vector<int>& XVoxelGrid::dependents(int fid) const {
  if (!is_live(fid)) throw UnknownFeature("feature not live");
  return features_[fid].dependents;
}

int XVoxelGrid::find_feature(const std::string& name) const {
  for (int i = 0; i < feature_count(); ++i)
    if (features_[i].live && features_[i].feature.spec.name == name) return i;
  return -1;
}

std::vector<int> XVoxelGrid::history_order() const {
  std::vector<int> order;
  for (int i = 0; i < feature_count(); ++i)
    if (features_[i].live) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return features_[a].precedence < features_[b].precedence;
  });
  return order;
}

std::vector<int> XVoxelGrid::delete_feature(int fid, bool virtual_delete, bool cascade) {
  if (!is_live(fid)) throw UnknownFeature("delete: feature not live");
  if (virtual_delete) {
    features_[fid].active = false;
    return features_[fid].voxels;
  }
  bool has_live_dependents = false;
  for (int d : features_[fid].dependents) has_live_dependents |= is_live(d);
  if (has_live_dependents && !cascade)
    throw DependencyViolation("physical delete of '" + features_[fid].feature.spec.name +
                              "' with live dependents requires cascade");
  std::vector<int> affected;
  if (cascade) {
    // Remove dependents first, latest precedence first.
    std::vector<int> deps;
    for (int d : features_[fid].dependents)
      if (is_live(d)) deps.push_back(d);
    std::sort(deps.begin(), deps.end(), [&](int a, int b) {
      return features_[a].precedence > features_[b].precedence;
    });
    for (int d : deps) {
      auto sub = delete_feature(d, false, true);
      affected.insert(affected.end(), sub.begin(), sub.end());
    }
  }
  remove_attributes(fid);
  affected.insert(affected.end(), features_[fid].voxels.begin(), features_[fid].voxels.end());
  features_[fid].live = false;
  features_[fid].active = false;
  features_[fid].voxels.clear();
  std::sort(affected.begin(), affected.end());
  affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
  return affected;
}

std::vector<int> XVoxelGrid::restore_feature(int fid) {
  if (!is_live(fid)) throw UnknownFeature("restore: feature not live");
  features_[fid].active = true;
  return features_[fid].voxels;
}

std::vector<int> XVoxelGrid::edit_parameters(int fid, const std::vector<double>& combined) {
  if (!is_live(fid)) throw UnknownFeature("edit: feature not live");
  Slot& slot = features_[fid];
  const int nk = slot.feature.kind_param_count();
  if (static_cast<int>(combined.size()) != slot.feature.param_count)
    throw InvalidParameter("edit_parameters expects " + std::to_string(slot.feature.param_count) +
                           " values (kind params + translation)");

  FeatureSpec spec = slot.feature.spec;
  spec.params.assign(combined.begin(), combined.begin() + nk);
  spec.transform.translation = Vec3(combined[nk], combined[nk + 1], combined[nk + 2]);
  Feature updated = instantiate_feature(spec);  // throws like instantiate_feature

  std::vector<int> active = slot.voxels;
  remove_attributes(fid);
  std::vector<std::pair<int, Occupancy>> occ;
  slot.voxels = compute_footprint(updated, &occ);
  slot.feature = std::move(updated);
  insert_attributes(fid, occ);

  active.insert(active.end(), slot.voxels.begin(), slot.voxels.end());
  // Dependents are re-instantiated at their original precedence; their specs
  // are self-contained so occupancy is unchanged, but their footprints join
  // the active set.
  for (int d : features_[fid].dependents)
    if (is_live(d))
      active.insert(active.end(), features_[d].voxels.begin(), features_[d].voxels.end());
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  return active;
}

std::vector<int> XVoxelGrid::rearrange_features(const std::vector<int>& new_order) {
  const std::vector<int> live = history_order();
  if (new_order.size() != live.size())
    throw DependencyViolation("rearrange: order must list every live feature exactly once");
  std::vector<int> sorted = new_order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> live_sorted = live;
  std::sort(live_sorted.begin(), live_sorted.end());
  if (sorted != live_sorted)
    throw DependencyViolation("rearrange: order is not a permutation of live features");

  std::vector<int> position(features_.size(), -1);
  for (std::size_t i = 0; i < new_order.size(); ++i) position[new_order[i]] = static_cast<int>(i);
  for (int fid : new_order)
    for (int dep : features_[fid].deps)
      if (is_live(dep) && position[dep] > position[fid])
        throw DependencyViolation("rearrange: feature '" + features_[fid].feature.spec.name +
                                  "' ordered before its dependency");

  for (std::size_t i = 0; i < new_order.size(); ++i)
    features_[new_order[i]].precedence = static_cast<int>(i);
  next_precedence_ = static_cast<int>(new_order.size());

  std::vector<int> changed;
  for (int v = 0; v < nv_; ++v) {
    auto& list = voxels_[v];
    if (list.size() < 2) continue;
    const auto before = list;
    std::stable_sort(list.begin(), list.end(), [&](const VoxelAttribute& a, const VoxelAttribute& b) {
      return features_[a.feature_index].precedence < features_[b.feature_index].precedence;
    });
    if (list != before) changed.push_back(v);
  }
  return changed;
}

VoxelNature XVoxelGrid::voxel_nature(int v) const {
  const auto& list = voxels_[v];
  for (auto it = list.rbegin(); it != list.rend(); ++it) {
    if (!is_active(it->feature_index)) continue;
    if (it->occupancy == Occupancy::kComplete)
      return it->nature == Nature::kPositive ? VoxelNature::kSolid : VoxelNature::kVoid;
    return VoxelNature::kCut;
  }
  return VoxelNature::kVoid;
}

PmcResult XVoxelGrid::classify_screened(int v, const Vec3& x, int excluded_fid) const {
  const auto& list = voxels_[v];
  // Find the screen start: last active complete entry (before excluded_fid
  // if an exclusion point is given).
  int end = static_cast<int>(list.size());
  if (excluded_fid >= 0) {
    for (int i = end - 1; i >= 0; --i)
      if (list[i].feature_index == excluded_fid) {
        end = i;
        break;
      }
  }
  int start = 0;
  bool has_prefix = false;
  for (int i = end - 1; i >= 0; --i) {
    if (!is_active(list[i].feature_index)) continue;
    if (list[i].occupancy == Occupancy::kComplete) {
      start = i;
      has_prefix = true;
      break;
    }
  }

  int last = -1;
  double last_phi = 0.0;
  for (int i = start; i < end; ++i) {
    if (!is_active(list[i].feature_index)) continue;
    const double phi = sdf(features_[list[i].feature_index].feature, x);
    if (phi >= -eps_on_) {
      last = list[i].feature_index;
      last_phi = phi;
    }
  }
  if (last < 0) {
    if (!has_prefix) return {Membership::kOut, -1};
    const int pf = list[start].feature_index;
    return {features_[pf].feature.spec.nature == Nature::kPositive ? Membership::kIn
                                                                   : Membership::kOut,
            pf};
  }
  const bool on = last_phi <= eps_on_;
  if (features_[last].feature.spec.nature == Nature::kPositive)
    return {on ? Membership::kOn : Membership::kIn, last};
  return {on ? Membership::kOn : Membership::kOut, last};
}

PmcResult XVoxelGrid::classify_in_voxel(int v, const Vec3& x) const {
  return classify_screened(v, x, -1);
}

PmcResult XVoxelGrid::classify_in_voxel_before(int v, const Vec3& x, int excluded_fid) const {
  return classify_screened(v, x, excluded_fid);
}

PmcResult XVoxelGrid::classify_point_ex(const Vec3& x) const {
  return classify_screened(voxel_of(x), x, -1);
}

Membership XVoxelGrid::classify_point(const Vec3& x) const {
  return classify_point_ex(x).membership;
}

std::vector<int> XVoxelGrid::screened_features(int v) const {
  const auto& list = voxels_[v];
  int start = 0;
  for (int i = static_cast<int>(list.size()) - 1; i >= 0; --i) {
    if (!is_active(list[i].feature_index)) continue;
    if (list[i].occupancy == Occupancy::kComplete) {
      start = i;
      break;
    }
  }
  std::vector<int> out;
  for (int i = start; i < static_cast<int>(list.size()); ++i)
    if (is_active(list[i].feature_index)) out.push_back(list[i].feature_index);
  return out;
}

std::optional<std::string> XVoxelGrid::check_invariants() const {
  for (int v = 0; v < nv_; ++v) {
    const auto& list = voxels_[v];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const int fid = list[i].feature_index;
      if (fid < 0 || fid >= feature_count() || !features_[fid].live)
        return "voxel " + std::to_string(v) + " references a dead feature";
      if (list[i].nature != features_[fid].feature.spec.nature)
        return "voxel " + std::to_string(v) + " nature mismatch for feature " + std::to_string(fid);
      if (i > 0 && features_[list[i - 1].feature_index].precedence >=
                       features_[fid].precedence)
        return "voxel " + std::to_string(v) + " attribute list out of precedence order";
      const auto& fv = features_[fid].voxels;
      if (!std::binary_search(fv.begin(), fv.end(), v))
        return "feature_voxels missing voxel " + std::to_string(v) + " for feature " +
               std::to_string(fid);
    }
  }
  for (int f = 0; f < feature_count(); ++f) {
    if (!features_[f].live) continue;
    if (!std::is_sorted(features_[f].voxels.begin(), features_[f].voxels.end()))
      return "feature " + std::to_string(f) + " footprint not sorted";
    for (int v : features_[f].voxels) {
      const auto& list = voxels_[v];
      const bool found = std::any_of(list.begin(), list.end(), [&](const VoxelAttribute& a) {
        return a.feature_index == f;
      });
      if (!found)
        return "feature " + std::to_string(f) + " lists voxel " + std::to_string(v) +
               " without an attribute entry";
    }
  }
  return std::nullopt;
}

}  // namespace xv
