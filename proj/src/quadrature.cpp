#include "xvoxel/quadrature.hpp"

#include <cmath>

#include "xvoxel/errors.hpp"
#include "xvoxel/gauss.hpp"
#include "xvoxel/parallel.hpp"

namespace xv {

void QuadratureSettings::validate() const {
  if (depth < 0 || depth > 6) throw InvalidParameter("quadrature.depth must be in [0,6]");
  if (order < 1 || order > 3) throw InvalidParameter("quadrature.order must be in [1,3]");
  if (!(alpha > 0.0) || alpha > 1e-4)
    throw InvalidParameter("quadrature.alpha must be in (0, 1e-4]");
}

namespace {

struct Builder {
  const XVoxelGrid& grid;
  const QuadratureSettings& settings;

  Vec3 to_world(int v, const Vec3& local) const {
    const Aabb box = grid.voxel_aabb(v);
    return box.min + 0.5 * (local + Vec3::Ones()) * grid.voxel_size();
  }

  void emit_cell(int v, const Vec3& center, double s, std::vector<QuadPoint>* out) const {
    const GaussRule g = gauss_rule(settings.order + 1);
    const double s3 = s * s * s;
    for (std::size_t k = 0; k < g.nodes.size(); ++k)
      for (std::size_t j = 0; j < g.nodes.size(); ++j)
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
          QuadPoint qp;
          qp.local = center + s * Vec3(g.nodes[i], g.nodes[j], g.nodes[k]);
          qp.weight = g.weights[i] * g.weights[j] * g.weights[k] * s3;
          const Membership m = grid.classify_in_voxel(v, to_world(v, qp.local)).membership;
          qp.material = (m != Membership::kOut);
          qp.heaviside = qp.material ? 1.0 : settings.alpha;
          out->push_back(qp);
        }
  }

  bool should_split(int v, const std::vector<int>& screened, const Vec3& center, double s) const {
    // Corner PMC mixed, or the nearest screened feature boundary possibly
    // crosses the cell (|phi| below the half-diagonal, world units).
    const double half_world = 0.5 * s * grid.voxel_size();
    const double half_diag = half_world * std::sqrt(3.0);
    const Vec3 cw = to_world(v, center);
    double min_abs_phi = std::numeric_limits<double>::max();
    for (int fid : screened)
      min_abs_phi = std::min(min_abs_phi, std::abs(sdf(grid.feature(fid), cw)));
    if (min_abs_phi < half_diag) return true;

    bool any_in = false, any_out = false;
    for (int c = 0; c < 8; ++c) {
      const Vec3 corner = center + s * Vec3(c & 1 ? 1 : -1, c & 2 ? 1 : -1, c & 4 ? 1 : -1);
      const Membership m = grid.classify_in_voxel(v, to_world(v, corner)).membership;
      (m == Membership::kOut ? any_out : any_in) = true;
      if (any_in && any_out) return true;
    }
    return false;
  }

  void subdivide(int v, const std::vector<int>& screened, const Vec3& center, double s,
                 int depth, std::vector<QuadPoint>* out) const {
    if (depth < settings.depth && should_split(v, screened, center, s)) {
      const double q = 0.5 * s;
      for (int c = 0; c < 8; ++c) {
        const Vec3 sub = center + q * Vec3(c & 1 ? 1 : -1, c & 2 ? 1 : -1, c & 4 ? 1 : -1);
        subdivide(v, screened, sub, q, depth + 1, out);
      }
      return;
    }
    emit_cell(v, center, s, out);
  }
};

std::shared_ptr<const VoxelRule> make_uniform_rule(VoxelNature nature, bool material,
                                                   const QuadratureSettings& settings) {
  auto rule = std::make_shared<VoxelRule>();
  rule->nature = nature;
  const GaussRule g = gauss_rule(settings.order + 1);
  for (std::size_t k = 0; k < g.nodes.size(); ++k)
    for (std::size_t j = 0; j < g.nodes.size(); ++j)
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        QuadPoint qp;
        qp.local = Vec3(g.nodes[i], g.nodes[j], g.nodes[k]);
        qp.weight = g.weights[i] * g.weights[j] * g.weights[k];
        qp.material = material;
        qp.heaviside = material ? 1.0 : settings.alpha;
        rule->points.push_back(qp);
        if (material) rule->material_weight_sum += qp.weight;
      }
  return rule;
}

}  // namespace

QuadraturePlan build_plan(const XVoxelGrid& grid, const QuadratureSettings& settings) {
  settings.validate();
  QuadraturePlan plan;
  plan.settings_ = settings;
  plan.dims_ = grid.dims();
  plan.solid_rule_ = make_uniform_rule(VoxelNature::kSolid, true, settings);
  plan.void_rule_ = make_uniform_rule(VoxelNature::kVoid, false, settings);
  plan.rules_.resize(static_cast<std::size_t>(grid.voxel_count()));

  parallel_for(0, grid.voxel_count(), 64, [&](std::int64_t v0, std::int64_t v1) {
    for (std::int64_t v = v0; v < v1; ++v) {
      const int vi = static_cast<int>(v);
      const VoxelNature nature = grid.voxel_nature(vi);
      if (nature == VoxelNature::kSolid) {
        plan.rules_[v] = plan.solid_rule_;
      } else if (nature == VoxelNature::kVoid) {
        plan.rules_[v] = plan.void_rule_;
      } else {
        auto rule = std::make_shared<VoxelRule>();
        rule->nature = nature;
        Builder b{grid, settings};
        const std::vector<int> screened = grid.screened_features(vi);
        b.subdivide(vi, screened, Vec3::Zero(), 1.0, 0, &rule->points);
        for (const auto& qp : rule->points)
          if (qp.material) rule->material_weight_sum += qp.weight;
        plan.rules_[v] = std::move(rule);
      }
    }
  });
  return plan;
}

QuadraturePlan update_plan(const QuadraturePlan& plan, const XVoxelGrid& grid,
                           const std::vector<int>& active_set) {
  if (plan.dims_ != grid.dims())
    throw StalePlan("quadrature plan dims mismatch grid dims");
  QuadraturePlan next = plan;  // shares rule objects
  parallel_for(0, static_cast<std::int64_t>(active_set.size()), 16,
               [&](std::int64_t a0, std::int64_t a1) {
                 for (std::int64_t a = a0; a < a1; ++a) {
                   const int v = active_set[static_cast<std::size_t>(a)];
                   const VoxelNature nature = grid.voxel_nature(v);
                   if (nature == VoxelNature::kSolid) {
                     next.rules_[v] = next.solid_rule_;
                   } else if (nature == VoxelNature::kVoid) {
                     next.rules_[v] = next.void_rule_;
                   } else {
                     auto rule = std::make_shared<VoxelRule>();
                     rule->nature = nature;
                     Builder b{grid, plan.settings_};
                     const std::vector<int> screened = grid.screened_features(v);
                     b.subdivide(v, screened, Vec3::Zero(), 1.0, 0, &rule->points);
                     for (const auto& qp : rule->points)
                       if (qp.material) rule->material_weight_sum += qp.weight;
                     next.rules_[v] = std::move(rule);
                   }
                 }
               });
  return next;
}

double integrate_volume(const QuadraturePlan& plan, const XVoxelGrid& grid) {
  const double jac = std::pow(0.5 * grid.voxel_size(), 3);
  return jac * det_range_sum(0, plan.voxel_count(), 256, [&](std::int64_t v0, std::int64_t v1) {
           double acc = 0.0;
           for (std::int64_t v = v0; v < v1; ++v)
             acc += plan.rule(static_cast<int>(v)).material_weight_sum;
           return acc;
         });
}

}  // namespace xv
