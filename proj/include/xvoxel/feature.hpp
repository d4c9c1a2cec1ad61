#pragma once

#include <array>
#include <string>
#include <vector>

#include "xvoxel/geometry.hpp"

namespace xv {

enum class FeatureKind {
  kBox,
  kSphere,
  kCylinder,
  kCappedCone,
  kRoundedCornerPrism,
  kExtrudedPolygon,
};

enum class Nature { kPositive, kNegative };

const char* to_string(FeatureKind kind);
const char* to_string(Nature nature);
FeatureKind feature_kind_from_string(const std::string& s);

// Parametric primitive description. Kind parameters (model units):
//   box:                  (lx, ly, lz), local extent [0,lx]x[0,ly]x[0,lz]
//   sphere:               (r), centered at the local origin
//   cylinder:             (r, h), axis +z, z in [0,h]
//   capped-cone:          (r0, r1, h), radius r0 at z=0 and r1 at z=h
//   rounded-corner-prism: (R, h), corner fillet cross-section [0,R]^2 minus
//                         the disk of radius R centered at (R,R), z in [0,h]
//   extruded-polygon:     (h, x0,y0, x1,y1, ...), CCW simple polygon, z in [0,h]
// The three world-translation components are addressable as extra parameters
// after the kind parameters, so positions can be design variables.
struct FeatureSpec {
  FeatureKind kind = FeatureKind::kBox;
  std::vector<double> params;
  RigidTransform transform;
  Nature nature = Nature::kPositive;
  std::string name;
  std::vector<std::string> depends_on;
};

struct Feature {
  FeatureSpec spec;
  Aabb aabb;        // world-space, strictly contains the zero level set
  int param_count = 0;  // kind params + 3 translation params

  int kind_param_count() const { return param_count - 3; }
};

// Number of kind parameters expected for `kind`; for extruded polygons the
// count is validated against the actual vector (odd, >= 7).
int expected_kind_params(FeatureKind kind);

// Validates the spec and computes the tight world AABB.
// Throws InvalidParameter / UnknownKind.
Feature instantiate_feature(const FeatureSpec& spec);

// Inward-positive signed distance (exact for box/sphere/cylinder,
// distance-like lower bound for the compound kinds).
double sdf(const Feature& feature, const Vec3& x);

// d(phi)/d(param). Analytic for sphere radius, cylinder radius/height,
// box edge lengths and all translations of exact-SDF kinds; central finite
// differences (h = 1e-6 * max(|p|,1)) otherwise. Throws IndexOutOfRange.
double sdf_param_gradient(const Feature& feature, const Vec3& x, int param_index);

// Spatial gradient of the SDF by central differences with step h.
Vec3 sdf_spatial_gradient(const Feature& feature, const Vec3& x, double h);

struct BoundaryMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::string feature_id;

  double total_area() const;
  bool watertight() const;  // every edge shared by exactly two triangles
};

// Watertight closed triangulation by parametric-domain subdivision; vertices
// satisfy |sdf| <= chord_tol. Throws TessellationFailure on degenerate input.
BoundaryMesh triangulate_boundary(const Feature& feature, double chord_tol);

}  // namespace xv
