#include <cmath>
#include <map>
#include <numbers>

#include "xvoxel/errors.hpp"
#include "xvoxel/feature.hpp"

namespace xv {

namespace {

using std::numbers::pi;

// Segments so the chord sagitta of a radius-r circle stays below tol.
int arc_segments(double r, double tol, double arc_angle, int min_segments) {
  tol = std::min(tol, 0.5 * r);
  const double alpha = 2.0 * std::acos(std::clamp(1.0 - tol / r, -1.0, 1.0));
  const int n = static_cast<int>(std::ceil(arc_angle / std::max(alpha, 1e-9)));
  return std::max(n, min_segments);
}

struct MeshBuilder {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  int add(const Vec3& v) {
    vertices.push_back(v);
    return static_cast<int>(vertices.size()) - 1;
  }
  void tri(int a, int b, int c) { triangles.push_back({a, b, c}); }
  void quad(int a, int b, int c, int d) {
    tri(a, b, c);
    tri(a, c, d);
  }
};

// 2D polygon triangulation by ear clipping (CCW input).
std::vector<std::array<int, 3>> ear_clip(const std::vector<double>& xs,
                                         const std::vector<double>& ys) {
  const int n = static_cast<int>(xs.size());
  std::vector<int> ring(n);
  for (int i = 0; i < n; ++i) ring[i] = i;
  std::vector<std::array<int, 3>> tris;

  auto cross = [&](int a, int b, int c) {
    return (xs[b] - xs[a]) * (ys[c] - ys[a]) - (ys[b] - ys[a]) * (xs[c] - xs[a]);
  };
  auto point_in_tri = [&](int p, int a, int b, int c) {
    const double d1 = cross(a, b, p), d2 = cross(b, c, p), d3 = cross(c, a, p);
    return d1 >= 0 && d2 >= 0 && d3 >= 0;
  };

  int guard = 0;
  while (ring.size() > 3) {
    if (++guard > 4 * n * n) throw TessellationFailure("ear clipping failed to converge");
    bool clipped = false;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const int a = ring[(i + ring.size() - 1) % ring.size()];
      const int b = ring[i];
      const int c = ring[(i + 1) % ring.size()];
      if (cross(a, b, c) <= 0) continue;  // reflex
      bool ear = true;
      for (int p : ring) {
        if (p == a || p == b || p == c) continue;
        if (point_in_tri(p, a, b, c)) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      tris.push_back({a, b, c});
      ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw TessellationFailure("no ear found (self-intersecting polygon?)");
  }
  tris.push_back({ring[0], ring[1], ring[2]});
  return tris;
}

void build_box(MeshBuilder& mb, const Vec3& len) {
  int id[2][2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        id[i][j][k] = mb.add(Vec3(i * len.x(), j * len.y(), k * len.z()));
  // Outward-oriented faces.
  mb.quad(id[0][0][0], id[0][0][1], id[0][1][1], id[0][1][0]);  // -x
  mb.quad(id[1][0][0], id[1][1][0], id[1][1][1], id[1][0][1]);  // +x
  mb.quad(id[0][0][0], id[1][0][0], id[1][0][1], id[0][0][1]);  // -y
  mb.quad(id[0][1][0], id[0][1][1], id[1][1][1], id[1][1][0]);  // +y
  mb.quad(id[0][0][0], id[0][1][0], id[1][1][0], id[1][0][0]);  // -z
  mb.quad(id[0][0][1], id[1][0][1], id[1][1][1], id[0][1][1]);  // +z
}

void build_sphere(MeshBuilder& mb, double r, double tol) {
  const int nu = arc_segments(r, tol, 2.0 * pi, 8);   // around
  const int nv = arc_segments(r, tol, pi, 4);         // pole to pole
  const int south = mb.add(Vec3(0, 0, -r));
  const int north = mb.add(Vec3(0, 0, r));
  std::vector<std::vector<int>> ring(nv - 1, std::vector<int>(nu));
  for (int j = 1; j < nv; ++j) {
    const double phi = -0.5 * pi + pi * j / nv;
    for (int i = 0; i < nu; ++i) {
      const double th = 2.0 * pi * i / nu;
      ring[j - 1][i] =
          mb.add(Vec3(r * std::cos(phi) * std::cos(th), r * std::cos(phi) * std::sin(th),
                      r * std::sin(phi)));
    }
  }
  for (int i = 0; i < nu; ++i) {
    const int i1 = (i + 1) % nu;
    mb.tri(south, ring[0][i1], ring[0][i]);
    mb.tri(north, ring[nv - 2][i], ring[nv - 2][i1]);
  }
  for (int j = 0; j + 1 < nv - 1; ++j)
    for (int i = 0; i < nu; ++i) {
      const int i1 = (i + 1) % nu;
      mb.quad(ring[j][i], ring[j][i1], ring[j + 1][i1], ring[j + 1][i]);
    }
}

// Shared helper for cylinders and capped cones: two rings plus cap fans.
void build_capped_rings(MeshBuilder& mb, double r0, double r1, double h, double tol) {
  const int nu = arc_segments(std::max(r0, r1), tol, 2.0 * pi, 8);
  const int c0 = mb.add(Vec3(0, 0, 0));
  const int c1 = mb.add(Vec3(0, 0, h));
  std::vector<int> lo(nu), hi(nu);
  for (int i = 0; i < nu; ++i) {
    const double th = 2.0 * pi * i / nu;
    lo[i] = mb.add(Vec3(r0 * std::cos(th), r0 * std::sin(th), 0.0));
    hi[i] = mb.add(Vec3(r1 * std::cos(th), r1 * std::sin(th), h));
  }
  for (int i = 0; i < nu; ++i) {
    const int i1 = (i + 1) % nu;
    mb.tri(c0, lo[i1], lo[i]);           // bottom cap (outward -z)
    mb.tri(c1, hi[i], hi[i1]);           // top cap (outward +z)
    mb.quad(lo[i], lo[i1], hi[i1], hi[i]);  // wall
  }
}

void build_prism(MeshBuilder& mb, const std::vector<double>& xs, const std::vector<double>& ys,
                 double h, const std::vector<std::array<int, 3>>& cap) {
  const int n = static_cast<int>(xs.size());
  std::vector<int> lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = mb.add(Vec3(xs[i], ys[i], 0.0));
    hi[i] = mb.add(Vec3(xs[i], ys[i], h));
  }
  for (int i = 0; i < n; ++i) {
    const int i1 = (i + 1) % n;
    mb.quad(lo[i], hi[i], hi[i1], lo[i1]);  // wall, outward for CCW section
  }
  for (const auto& t : cap) {
    mb.tri(lo[t[0]], lo[t[2]], lo[t[1]]);  // bottom, flipped
    mb.tri(hi[t[0]], hi[t[1]], hi[t[2]]);  // top
  }
}

}  // namespace

double BoundaryMesh::total_area() const {
  double area = 0.0;
  for (const auto& t : triangles) {
    const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
    const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
    area += 0.5 * e1.cross(e2).norm();
  }
  return area;
}

bool BoundaryMesh::watertight() const {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  for (const auto& [edge, count] : edges)
    if (count != 2) return false;
  return true;
}

BoundaryMesh triangulate_boundary(const Feature& feature, double chord_tol) {
  if (!(chord_tol > 0.0)) throw InvalidParameter("chord_tol must be positive");
  const auto& p = feature.spec.params;
  MeshBuilder mb;
  switch (feature.spec.kind) {
    case FeatureKind::kBox:
      build_box(mb, Vec3(p[0], p[1], p[2]));
      break;
    case FeatureKind::kSphere:
      build_sphere(mb, p[0], chord_tol);
      break;
    case FeatureKind::kCylinder:
      build_capped_rings(mb, p[0], p[0], p[1], chord_tol);
      break;
    case FeatureKind::kCappedCone:
      build_capped_rings(mb, p[0], p[1], p[2], chord_tol);
      break;
    case FeatureKind::kRoundedCornerPrism: {
      const double R = p[0], h = p[1];
      const int na = arc_segments(R, chord_tol, 0.5 * pi, 4);
      std::vector<double> xs{0.0}, ys{0.0};
      for (int i = 0; i <= na; ++i) {
        // Arc from (R,0) to (0,R) around center (R,R).
        const double th = -0.5 * pi - 0.5 * pi * i / na;
        xs.push_back(R + R * std::cos(th));
        ys.push_back(R + R * std::sin(th));
      }
      build_prism(mb, xs, ys, h, ear_clip(xs, ys));
      break;
    }
    case FeatureKind::kExtrudedPolygon: {
      const double h = p[0];
      const int n = static_cast<int>((p.size() - 1) / 2);
      std::vector<double> xs(n), ys(n);
      for (int i = 0; i < n; ++i) {
        xs[i] = p[1 + 2 * i];
        ys[i] = p[2 + 2 * i];
      }
      build_prism(mb, xs, ys, h, ear_clip(xs, ys));
      break;
    }
    default:
      throw UnknownKind("unknown feature kind");
  }

  BoundaryMesh mesh;
  mesh.feature_id = feature.spec.name;
  mesh.vertices.reserve(mb.vertices.size());
  for (const auto& v : mb.vertices) mesh.vertices.push_back(feature.spec.transform.to_world(v));
  mesh.triangles = std::move(mb.triangles);

  const double min_area = 1e-14 * feature.aabb.diagonal() * feature.aabb.diagonal();
  for (const auto& t : mesh.triangles) {
    const Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
    const Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
    if (0.5 * e1.cross(e2).norm() <= min_area)
      throw TessellationFailure("degenerate triangle in tessellation of '" +
                                feature.spec.name + "'");
  }
  return mesh;
}

}  // namespace xv
