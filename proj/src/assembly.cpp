#include "xvoxel/assembly.hpp"

#include <algorithm>
#include <cmath>

#include "xvoxel/errors.hpp"
#include "xvoxel/gauss.hpp"
#include "xvoxel/log.hpp"
#include "xvoxel/parallel.hpp"

namespace xv {

namespace {

Vec3 traction_at(const BoundaryCondition& bc, const Vec3& x) {
  switch (bc.profile) {
    case TractionProfile::kConstant:
      return bc.traction;
    case TractionProfile::kBearingSinusoidal: {
      const Vec3 axis = bc.profile_axis.normalized();
      Vec3 r = x - bc.profile_center;
      r -= r.dot(axis) * axis;
      const double rn = r.norm();
      const double tn = bc.traction.norm();
      if (rn == 0.0 || tn == 0.0) return Vec3::Zero();
      const double w = std::max(0.0, r.dot(bc.traction) / (rn * tn));
      return bc.traction * w;
    }
    case TractionProfile::kRadialCosineDecay: {
      const Vec3 axis = bc.profile_axis.normalized();
      Vec3 r = x - bc.profile_center;
      r -= r.dot(axis) * axis;
      const double arg = std::min(1.0, r.norm() / bc.profile_radius);
      const double w = std::pow(std::cos(0.5 * M_PI * arg), bc.profile_exponent);
      return bc.traction * w;
    }
  }
  return bc.traction;
}

bool classify_material(const XVoxelGrid& grid, const Vec3& x) {
  return grid.classify_point(x) != Membership::kOut;
}

}  // namespace

bool boundary_point_exposed(const XVoxelGrid& grid, const Vec3& x, const Vec3& void_dir,
                            double probe_offset) {
  const Vec3 outside = x + probe_offset * void_dir;
  const Vec3 inside = x - probe_offset * void_dir;
  const Aabb dom = grid.domain();
  if (!dom.contains(inside)) return false;
  if (dom.contains(outside) && classify_material(grid, outside)) return false;
  return classify_material(grid, inside);
}

Vec3 ElasticSystem::node_position(int lattice_id) const {
  const int gx = lattice_id % lattice_dims[0];
  const int gy = (lattice_id / lattice_dims[0]) % lattice_dims[1];
  const int gz = lattice_id / (lattice_dims[0] * lattice_dims[1]);
  const double s = voxel_size / order;
  return origin + s * Vec3(gx, gy, gz);
}

void ElasticSystem::element_nodes(int v, std::vector<int>* out) const {
  const int nx = dims[0], ny = dims[1];
  const int vx = v % nx, vy = (v / nx) % ny, vz = v / (nx * ny);
  const int m = order + 1;
  out->clear();
  out->reserve(static_cast<std::size_t>(m) * m * m);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        out->push_back(lattice_index(order * vx + i, order * vy + j, order * vz + k));
}

void ElasticSystem::voxels_of_node(int lattice_id, std::vector<int>* out) const {
  const int gx = lattice_id % lattice_dims[0];
  const int gy = (lattice_id / lattice_dims[0]) % lattice_dims[1];
  const int gz = lattice_id / (lattice_dims[0] * lattice_dims[1]);
  out->clear();
  // Voxel vx contains lattice coordinate g iff p*vx <= g <= p*vx + p,
  // so vx ranges over [ceil(g/p) - 1, floor(g/p)] clamped to the grid.
  const auto range = [&](int g, int nvox) {
    const int hi = std::min(g / order, nvox - 1);
    const int lo = std::max((g + order - 1) / order - 1, 0);
    return std::pair<int, int>(std::min(lo, hi), hi);
  };
  const auto [x0, x1] = range(gx, dims[0]);
  const auto [y0, y1] = range(gy, dims[1]);
  const auto [z0, z1] = range(gz, dims[2]);
  for (int vz = z0; vz <= z1; ++vz)
    for (int vy = y0; vy <= y1; ++vy)
      for (int vx = x0; vx <= x1; ++vx) {
        if (gx < order * vx || gx > order * vx + order || gy < order * vy ||
            gy > order * vy + order || gz < order * vz || gz > order * vz + order)
          continue;
        out->push_back(vx + dims[0] * (vy + dims[1] * vz));
      }
}

void ElasticSystem::gather_element(int v, std::vector<double>* out) const {
  std::vector<int> nodes;
  element_nodes(v, &nodes);
  out->assign(nodes.size() * 3, 0.0);
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    const int cn = node_compact[nodes[a]];
    if (cn < 0) continue;
    for (int c = 0; c < 3; ++c) (*out)[3 * a + c] = Q[3 * cn + c];
  }
}

void ElasticSystem::corner_displacement(std::vector<Vec3>* u,
                                        std::vector<std::uint8_t>* valid) const {
  const int cx = dims[0] + 1, cy = dims[1] + 1, cz = dims[2] + 1;
  u->assign(static_cast<std::size_t>(cx) * cy * cz, Vec3::Zero());
  valid->assign(u->size(), 0);
  for (int k = 0; k < cz; ++k)
    for (int j = 0; j < cy; ++j)
      for (int i = 0; i < cx; ++i) {
        const int lat = lattice_index(order * i, order * j, order * k);
        const int cn = node_compact[lat];
        if (cn < 0) continue;
        const std::size_t id = static_cast<std::size_t>(i) + cx * (j + static_cast<std::size_t>(cy) * k);
        (*u)[id] = Vec3(Q[3 * cn + 0], Q[3 * cn + 1], Q[3 * cn + 2]);
        (*valid)[id] = 1;
      }
}

namespace {

struct AssemblyContext {
  const XVoxelGrid& grid;
  const QuadraturePlan& plan;
  const std::vector<BoundaryCondition>& bcs;
  const AssemblyOptions& options;
};

bool voxel_included(const QuadraturePlan& plan, int v, bool strict) {
  return strict || plan.rule(v).nature != VoxelNature::kVoid;
}

void build_node_numbering(ElasticSystem& sys) {
  const std::int64_t n_lattice = static_cast<std::int64_t>(sys.lattice_dims[0]) *
                                 sys.lattice_dims[1] * sys.lattice_dims[2];
  std::vector<std::uint8_t> used(static_cast<std::size_t>(n_lattice), 0);
  std::vector<int> nodes;
  for (int v = 0; v < static_cast<int>(sys.included.size()); ++v) {
    if (!sys.included[v]) continue;
    sys.element_nodes(v, &nodes);
    for (int id : nodes) used[id] = 1;
  }
  sys.node_compact.assign(static_cast<std::size_t>(n_lattice), -1);
  sys.node_lattice.clear();
  for (std::int64_t id = 0; id < n_lattice; ++id)
    if (used[id]) {
      sys.node_compact[id] = static_cast<std::int32_t>(sys.node_lattice.size());
      sys.node_lattice.push_back(static_cast<std::int32_t>(id));
    }
  sys.n_nodes = static_cast<int>(sys.node_lattice.size());
  sys.n_dofs = 3 * sys.n_nodes;
}

void build_pattern(ElasticSystem& sys) {
  Csr& K = sys.K;
  K.n = sys.n_dofs;
  K.rowptr.assign(sys.n_dofs + 1, 0);

  std::vector<std::vector<int>> row_nodes(sys.n_nodes);
  std::vector<int> adj, enodes;
  parallel_for(0, sys.n_nodes, 256, [&](std::int64_t c0, std::int64_t c1) {
    std::vector<int> local_adj, local_nodes;
    for (std::int64_t cn = c0; cn < c1; ++cn) {
      sys.voxels_of_node(sys.node_lattice[cn], &local_adj);
      std::vector<int>& cols = row_nodes[cn];
      for (int v : local_adj) {
        if (!sys.included[v]) continue;
        sys.element_nodes(v, &local_nodes);
        for (int id : local_nodes) cols.push_back(sys.node_compact[id]);
      }
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    }
  });

  for (int cn = 0; cn < sys.n_nodes; ++cn) {
    const int cnt = 3 * static_cast<int>(row_nodes[cn].size());
    for (int c = 0; c < 3; ++c) K.rowptr[3 * cn + c + 1] = cnt;
  }
  for (int r = 0; r < sys.n_dofs; ++r) K.rowptr[r + 1] += K.rowptr[r];
  K.cols.resize(static_cast<std::size_t>(K.rowptr[sys.n_dofs]));
  K.vals.assign(K.cols.size(), 0.0);
  parallel_for(0, sys.n_nodes, 256, [&](std::int64_t c0, std::int64_t c1) {
    for (std::int64_t cn = c0; cn < c1; ++cn) {
      for (int c = 0; c < 3; ++c) {
        int* dst = K.cols.data() + K.rowptr[3 * cn + c];
        for (int nb : row_nodes[cn]) {
          *dst++ = 3 * nb + 0;
          *dst++ = 3 * nb + 1;
          *dst++ = 3 * nb + 2;
        }
      }
    }
  });
}

// Rebuilds the three DOF rows of one compact node from cached element
// matrices, iterating adjacent voxels in ascending order (the global
// summation order, so full and incremental paths agree bitwise).
void rebuild_node_rows(ElasticSystem& sys, int cn, std::vector<int>* adj,
                       std::vector<int>* enodes) {
  Csr& K = sys.K;
  for (int c = 0; c < 3; ++c) {
    const int r = 3 * cn + c;
    std::fill(K.vals.begin() + K.rowptr[r], K.vals.begin() + K.rowptr[r + 1], 0.0);
  }
  const int lat = sys.node_lattice[cn];
  sys.voxels_of_node(lat, adj);
  for (int v : *adj) {
    if (!sys.included[v]) continue;
    const ElementMatrix* E = sys.voxel_matrix[v].get();
    if (E == nullptr) continue;
    sys.element_nodes(v, enodes);
    const int a = static_cast<int>(std::lower_bound(enodes->begin(), enodes->end(), lat) -
                                   enodes->begin());
    const int n = E->node_count();
    // Scatter rows (x,y,z of node a) over the element's columns.
    for (int c = 0; c < 3; ++c) {
      const int r = 3 * cn + c;
      const int* cols = K.cols.data() + K.rowptr[r];
      double* vals = K.vals.data() + K.rowptr[r];
      const int row_n = K.rowptr[r + 1] - K.rowptr[r];
      int pos = 0;
      for (int b = 0; b < n; ++b) {
        const int cb = sys.node_compact[(*enodes)[b]];
        const int col0 = 3 * cb;
        while (pos < row_n && cols[pos] < col0) ++pos;
        // cols[pos..pos+2] are exactly col0, col0+1, col0+2
        double e0, e1, e2;
        switch (c) {
          case 0:
            e0 = E->xx(a, b); e1 = E->xy(a, b); e2 = E->xz(a, b);
            break;
          case 1:
            e0 = E->xy(b, a); e1 = E->yy(a, b); e2 = E->yz(a, b);
            break;
          default:
            e0 = E->xz(b, a); e1 = E->yz(b, a); e2 = E->zz(a, b);
            break;
        }
        vals[pos] += e0;
        vals[pos + 1] += e1;
        vals[pos + 2] += e2;
      }
    }
  }
}

void apply_constraint_rows(ElasticSystem& sys, const std::vector<int>& node_list) {
  Csr& K = sys.K;
  for (int cn : node_list) {
    for (int c = 0; c < 3; ++c) {
      const int r = 3 * cn + c;
      const int k0 = K.rowptr[r], k1 = K.rowptr[r + 1];
      if (sys.constrained[r]) {
        for (int k = k0; k < k1; ++k) K.vals[k] = (K.cols[k] == r) ? 1.0 : 0.0;
      } else {
        for (int k = k0; k < k1; ++k)
          if (sys.constrained[K.cols[k]]) K.vals[k] = 0.0;
      }
    }
  }
}

void mark_constraints(ElasticSystem& sys, const std::vector<BoundaryCondition>& bcs,
                      bool require_dirichlet) {
  sys.constrained.assign(static_cast<std::size_t>(sys.n_dofs), 0);
  const double tol = 1e-9 * sys.voxel_size;
  std::size_t count = 0;
  for (const auto& bc : bcs) {
    if (bc.kind != BoundaryCondition::Kind::kDirichletZero) continue;
    if (bc.region.type != BoundaryRegion::Type::kBox)
      throw ValidationError("Dirichlet regions must be grid-conforming boxes");
    Aabb box = bc.region.box;
    box.pad(tol);
    for (int cn = 0; cn < sys.n_nodes; ++cn) {
      if (!box.contains(sys.node_position(sys.node_lattice[cn]))) continue;
      for (int c = 0; c < 3; ++c)
        if (bc.components[c]) {
          if (!sys.constrained[3 * cn + c]) ++count;
          sys.constrained[3 * cn + c] = 1;
        }
    }
  }
  if (require_dirichlet && count == 0)
    throw EmptyDirichlet("no DOF constrained by any Dirichlet region");
}

void integrate_box_face_loads(ElasticSystem& sys, const AssemblyContext& ctx,
                              const BoundaryCondition& bc, const ElementBasis& basis) {
  const auto& grid = ctx.grid;
  const double h = sys.voxel_size;
  const double probe = 1e-3 * h;
  const GaussRule g = gauss_rule(sys.order + 1);
  Aabb region = bc.region.box;
  region.pad(1e-9 * h);

  std::vector<int> enodes;
  std::vector<double> N(basis.node_count()), dN(3 * basis.node_count());
  const int nx = sys.dims[0], ny = sys.dims[1], nz = sys.dims[2];
  for (int v = 0; v < grid.voxel_count(); ++v) {
    if (!sys.included[v]) continue;
    const Aabb box = grid.voxel_aabb(v);
    if (!region.intersects(box)) continue;
    const auto ijk = grid.unflatten(v);
    for (int face = 0; face < 6; ++face) {
      const int axis = face / 2;
      const int dir = face % 2 ? 1 : -1;
      std::array<int, 3> nb = ijk;
      nb[axis] += dir;
      const bool domain_face = nb[axis] < 0 || nb[axis] >= sys.dims[axis];
      if (!domain_face) {
        const int vn = nb[0] + nx * (nb[1] + ny * nb[2]);
        if (sys.included[vn] && ctx.plan.rule(vn).nature != VoxelNature::kVoid) continue;
      }
      (void)nz;
      Vec3 normal = Vec3::Zero();
      normal[axis] = dir;
      const double face_jac = 0.25 * h * h;
      const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
      for (std::size_t jq = 0; jq < g.nodes.size(); ++jq)
        for (std::size_t iq = 0; iq < g.nodes.size(); ++iq) {
          Vec3 local;
          local[axis] = dir;
          local[u_axis] = g.nodes[iq];
          local[v_axis] = g.nodes[jq];
          const Vec3 x = box.min + 0.5 * (local + Vec3::Ones()) * h;
          if (!region.contains(x)) continue;
          const Vec3 inner = x - probe * normal;
          if (!classify_material(grid, inner)) continue;
          if (!domain_face) {
            const Vec3 outer = x + probe * normal;
            if (classify_material(grid, outer)) continue;
          }
          const Vec3 tau = traction_at(bc, x);
          if (tau.squaredNorm() == 0.0) continue;
          const double w = g.weights[iq] * g.weights[jq] * face_jac;
          basis.eval(local, N.data(), dN.data());
          sys.element_nodes(v, &enodes);
          for (std::size_t a = 0; a < enodes.size(); ++a) {
            const int cn = sys.node_compact[enodes[a]];
            if (cn < 0) continue;
            for (int c = 0; c < 3; ++c) sys.F[3 * cn + c] += w * N[a] * tau[c];
          }
        }
    }
  }
}

void integrate_feature_face_loads(ElasticSystem& sys, const AssemblyContext& ctx,
                                  const BoundaryCondition& bc, const ElementBasis& basis) {
  const auto& grid = ctx.grid;
  const int fid = grid.find_feature(bc.region.feature);
  if (fid < 0 || !grid.is_active(fid))
    throw ValidationError("Neumann region references unknown feature '" + bc.region.feature +
                          "'");
  const double h = sys.voxel_size;
  const Feature& feat = grid.feature(fid);
  const BoundaryMesh mesh = triangulate_boundary(feat, ctx.options.neumann_chord_factor * h);
  const double grad_h = 1e-5 * h;
  const double probe = 1e-3 * h;
  const Aabb dom = grid.domain();

  std::vector<int> enodes;
  std::vector<double> N(basis.node_count()), dN(3 * basis.node_count());
  // 3-point mid-edge rule, degree-2 exact on triangles.
  static const double tri_w = 1.0 / 3.0;
  static const double tri_pts[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};

  for (const auto& t : mesh.triangles) {
    const Vec3& p0 = mesh.vertices[t[0]];
    const Vec3& p1 = mesh.vertices[t[1]];
    const Vec3& p2 = mesh.vertices[t[2]];
    const double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
    const Vec3 centroid = (p0 + p1 + p2) / 3.0;
    if (!dom.contains(centroid)) continue;
    const Vec3 g = sdf_spatial_gradient(feat, centroid, grad_h);
    if (g.norm() == 0.0) continue;
    const Vec3 void_dir =
        (feat.spec.nature == Nature::kPositive ? -1.0 : 1.0) * g.normalized();
    if (!boundary_point_exposed(grid, centroid, void_dir, probe)) continue;

    for (int q = 0; q < 3; ++q) {
      const Vec3 x = tri_pts[q][0] * p0 + tri_pts[q][1] * p1 + tri_pts[q][2] * p2;
      if (!dom.contains(x)) continue;
      const int v = grid.voxel_of(x);
      if (!sys.included[v]) continue;
      const Vec3 tau = traction_at(bc, x);
      if (tau.squaredNorm() == 0.0) continue;
      const Aabb box = grid.voxel_aabb(v);
      const Vec3 local = 2.0 * (x - box.min) / h - Vec3::Ones();
      basis.eval(local, N.data(), dN.data());
      sys.element_nodes(v, &enodes);
      const double w = tri_w * area;
      for (std::size_t a = 0; a < enodes.size(); ++a) {
        const int cn = sys.node_compact[enodes[a]];
        if (cn < 0) continue;
        for (int c = 0; c < 3; ++c) sys.F[3 * cn + c] += w * N[a] * tau[c];
      }
    }
  }
}

void build_loads(ElasticSystem& sys, const AssemblyContext& ctx, const ElementBasis& basis) {
  sys.F.assign(static_cast<std::size_t>(sys.n_dofs), 0.0);
  for (const auto& bc : ctx.bcs) {
    if (bc.kind != BoundaryCondition::Kind::kNeumannTraction) continue;
    if (bc.region.type == BoundaryRegion::Type::kBox)
      integrate_box_face_loads(sys, ctx, bc, basis);
    else
      integrate_feature_face_loads(sys, ctx, bc, basis);
  }
  for (int r = 0; r < sys.n_dofs; ++r)
    if (sys.constrained[r]) sys.F[r] = 0.0;
  double fmax = 0.0;
  for (double f : sys.F) fmax = std::max(fmax, std::abs(f));
  if (fmax == 0.0) log_warn("assemble: zero load vector (no traction applied)");
}

void compute_element_matrices(ElasticSystem& sys, const QuadraturePlan& plan,
                              const std::vector<int>& voxels, const ElementBasis& basis) {
  // Deduplicate by rule object so all solid voxels share a single matrix.
  std::unordered_map<const VoxelRule*, std::shared_ptr<const ElementMatrix>> cache;
  for (int v = 0; v < static_cast<int>(sys.voxel_matrix.size()); ++v)
    if (sys.voxel_matrix[v] && sys.voxel_rule[v])
      cache.emplace(sys.voxel_rule[v].get(), sys.voxel_matrix[v]);

  std::vector<int> stale;    // voxels needing a (possibly shared) matrix
  std::vector<int> compute;  // one representative voxel per uncached rule
  for (int v : voxels) {
    if (!sys.included[v]) {
      sys.voxel_rule[v] = nullptr;
      sys.voxel_matrix[v] = nullptr;
      continue;
    }
    const std::shared_ptr<const VoxelRule>& rule = plan.rule_ptr(v);
    if (sys.voxel_rule[v] == rule && sys.voxel_matrix[v]) continue;
    stale.push_back(v);
    if (cache.emplace(rule.get(), nullptr).second) compute.push_back(v);
  }

  std::vector<std::shared_ptr<const ElementMatrix>> computed(compute.size());
  parallel_for(0, static_cast<std::int64_t>(compute.size()), 1,
               [&](std::int64_t m0, std::int64_t m1) {
                 for (std::int64_t m = m0; m < m1; ++m) {
                   const int v = compute[m];
                   computed[m] = std::make_shared<ElementMatrix>(
                       element_stiffness(plan.rule(v), sys.material, sys.voxel_size, basis));
                 }
               });
  for (std::size_t m = 0; m < compute.size(); ++m)
    cache[plan.rule_ptr(compute[m]).get()] = computed[m];
  for (int v : stale) {
    sys.voxel_rule[v] = plan.rule_ptr(v);
    sys.voxel_matrix[v] = cache.at(plan.rule_ptr(v).get());
  }
  sys.last_recomputed_elements += static_cast<std::int64_t>(compute.size());
}

void assemble_all_rows(ElasticSystem& sys) {
  parallel_for(0, sys.n_nodes, 128, [&](std::int64_t c0, std::int64_t c1) {
    std::vector<int> adj, enodes;
    for (std::int64_t cn = c0; cn < c1; ++cn)
      rebuild_node_rows(sys, static_cast<int>(cn), &adj, &enodes);
  });
}

}  // namespace

ElasticSystem assemble(const XVoxelGrid& grid, const QuadraturePlan& plan,
                       const Material& material, const std::vector<BoundaryCondition>& bcs,
                       const AssemblyOptions& options) {
  material.validate();
  if (plan.voxel_count() != grid.voxel_count())
    throw StalePlan("plan does not match grid");

  ElasticSystem sys;
  sys.order = plan.settings().order;
  sys.dims = grid.dims();
  sys.origin = grid.origin();
  sys.voxel_size = grid.voxel_size();
  sys.material = material;
  sys.strict_fcm = plan.settings().strict_fcm;
  sys.lattice_dims = {sys.order * sys.dims[0] + 1, sys.order * sys.dims[1] + 1,
                      sys.order * sys.dims[2] + 1};

  sys.included.resize(static_cast<std::size_t>(grid.voxel_count()));
  for (int v = 0; v < grid.voxel_count(); ++v)
    sys.included[v] = voxel_included(plan, v, sys.strict_fcm);
  sys.voxel_rule.assign(static_cast<std::size_t>(grid.voxel_count()), nullptr);
  sys.voxel_matrix.assign(static_cast<std::size_t>(grid.voxel_count()), nullptr);

  build_node_numbering(sys);
  build_pattern(sys);

  const ElementBasis basis(sys.order);
  std::vector<int> all(static_cast<std::size_t>(grid.voxel_count()));
  for (int v = 0; v < grid.voxel_count(); ++v) all[v] = v;
  sys.last_recomputed_elements = 0;
  compute_element_matrices(sys, plan, all, basis);
  assemble_all_rows(sys);

  mark_constraints(sys, bcs, options.require_dirichlet);
  AssemblyContext ctx{grid, plan, bcs, options};
  build_loads(sys, ctx, basis);
  std::vector<int> all_nodes(static_cast<std::size_t>(sys.n_nodes));
  for (int i = 0; i < sys.n_nodes; ++i) all_nodes[i] = i;
  apply_constraint_rows(sys, all_nodes);

  sys.Q.assign(static_cast<std::size_t>(sys.n_dofs), 0.0);
  return sys;
}

void reassemble_incremental(ElasticSystem& sys, const XVoxelGrid& grid,
                            const QuadraturePlan& plan,
                            const std::vector<BoundaryCondition>& bcs,
                            const std::vector<int>& active_set,
                            const AssemblyOptions& options) {
  if (sys.included.size() != static_cast<std::size_t>(grid.voxel_count()) ||
      plan.voxel_count() != grid.voxel_count())
    throw StaleSystem("system does not match grid/plan");
  if (plan.settings().order != sys.order)
    throw StaleSystem("plan order changed");

  const ElementBasis basis(sys.order);
  sys.last_recomputed_elements = 0;

  bool inclusion_changed = false;
  for (int v : active_set) {
    const bool inc = voxel_included(plan, v, sys.strict_fcm);
    if (inc != static_cast<bool>(sys.included[v])) inclusion_changed = true;
  }

  if (inclusion_changed) {
    // Node set may change: renumber and re-sum everything from cached
    // matrices (integration stays incremental), carrying the warm start.
    std::vector<double> old_q = std::move(sys.Q);
    std::vector<std::int32_t> old_compact = std::move(sys.node_compact);
    for (int v : active_set) sys.included[v] = voxel_included(plan, v, sys.strict_fcm);
    build_node_numbering(sys);
    build_pattern(sys);
    std::vector<int> all(static_cast<std::size_t>(grid.voxel_count()));
    for (int v = 0; v < grid.voxel_count(); ++v) all[v] = v;
    compute_element_matrices(sys, plan, all, basis);
    assemble_all_rows(sys);
    mark_constraints(sys, bcs, options.require_dirichlet);
    AssemblyContext ctx{grid, plan, bcs, options};
    build_loads(sys, ctx, basis);
    std::vector<int> all_nodes(static_cast<std::size_t>(sys.n_nodes));
    for (int i = 0; i < sys.n_nodes; ++i) all_nodes[i] = i;
    apply_constraint_rows(sys, all_nodes);
    sys.Q.assign(static_cast<std::size_t>(sys.n_dofs), 0.0);
    for (int cn = 0; cn < sys.n_nodes; ++cn) {
      const int old_cn = old_compact.empty() ? -1 : old_compact[sys.node_lattice[cn]];
      if (old_cn >= 0 && 3 * old_cn + 2 < static_cast<int>(old_q.size()))
        for (int c = 0; c < 3; ++c) sys.Q[3 * cn + c] = old_q[3 * old_cn + c];
    }
    return;
  }

  // Fast path: node set unchanged. Refresh matrices of voxels whose rule
  // changed, then rebuild only the rows their nodes touch.
  std::vector<int> changed;
  for (int v : active_set) {
    if (!sys.included[v]) continue;
    if (sys.voxel_rule[v].get() != &plan.rule(v)) changed.push_back(v);
  }
  compute_element_matrices(sys, plan, changed, basis);

  std::vector<int> affected_nodes;
  std::vector<int> enodes;
  for (int v : changed) {
    sys.element_nodes(v, &enodes);
    for (int id : enodes) {
      const int cn = sys.node_compact[id];
      if (cn >= 0) affected_nodes.push_back(cn);
    }
  }
  std::sort(affected_nodes.begin(), affected_nodes.end());
  affected_nodes.erase(std::unique(affected_nodes.begin(), affected_nodes.end()),
                       affected_nodes.end());

  parallel_for(0, static_cast<std::int64_t>(affected_nodes.size()), 64,
               [&](std::int64_t i0, std::int64_t i1) {
                 std::vector<int> adj, en;
                 for (std::int64_t i = i0; i < i1; ++i)
                   rebuild_node_rows(sys, affected_nodes[i], &adj, &en);
               });

  mark_constraints(sys, bcs, options.require_dirichlet);
  AssemblyContext ctx{grid, plan, bcs, options};
  build_loads(sys, ctx, basis);
  apply_constraint_rows(sys, affected_nodes);
}

}  // namespace xv
