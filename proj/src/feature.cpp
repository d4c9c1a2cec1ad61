#include "xvoxel/feature.hpp"

#include <array>
#include <cmath>
#include <map>
#include <utility>

#include "xvoxel/errors.hpp"

namespace xv {

namespace {

constexpr double kRotationTol = 1e-12;

double box_sdf(const Vec3& xl, const Vec3& len) {
  const Vec3 c = 0.5 * len;
  const Vec3 q = (xl - c).cwiseAbs() - c;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return -(outside + inside);
}

double cylinder_sdf(const Vec3& xl, double r, double h) {
  const double rho = std::hypot(xl.x(), xl.y());
  const double dr = rho - r;
  const double dz = std::max(-xl.z(), xl.z() - h);
  const double outside = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
  const double inside = std::min(std::max(dr, dz), 0.0);
  return -(outside + inside);
}

double capped_cone_sdf(const Vec3& xl, double r0, double r1, double h) {
  const double rho = std::hypot(xl.x(), xl.y());
  const double rz = r0 + (r1 - r0) * (xl.z() / h);
  const double slant_cos = h / std::sqrt(h * h + (r1 - r0) * (r1 - r0));
  return std::min((rz - rho) * slant_cos, std::min(xl.z(), h - xl.z()));
}

double box2_sdf(double x, double y, double lx, double ly) {
  const double cx = 0.5 * lx, cy = 0.5 * ly;
  const double qx = std::abs(x - cx) - cx, qy = std::abs(y - cy) - cy;
  const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
  const double inside = std::min(std::max(qx, qy), 0.0);
  return -(outside + inside);
}

double rounded_corner_sdf(const Vec3& xl, double R, double h) {
  const double corner = box2_sdf(xl.x(), xl.y(), R, R);
  const double disk_complement = std::hypot(xl.x() - R, xl.y() - R) - R;
  const double phi2d = std::min(corner, disk_complement);
  return std::min(phi2d, std::min(xl.z(), h - xl.z()));
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double abx = bx - ax, aby = by - ay;
  const double apx = px - ax, apy = py - ay;
  const double len2 = abx * abx + aby * aby;
  double t = len2 > 0.0 ? (apx * abx + apy * aby) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = apx - t * abx, dy = apy - t * aby;
  return std::hypot(dx, dy);
}

// Exact inward-positive SDF of a simple polygon (even-odd inside test).
double polygon2_sdf(double px, double py, const double* pts, int n) {
  double dist = std::numeric_limits<double>::max();
  bool inside = false;
  for (int i = 0, j = n - 1; i < n; j = i++) {
    const double xi = pts[2 * i], yi = pts[2 * i + 1];
    const double xj = pts[2 * j], yj = pts[2 * j + 1];
    dist = std::min(dist, segment_distance(px, py, xj, yj, xi, yi));
    if ((yi > py) != (yj > py)) {
      const double xc = xj + (py - yj) / (yi - yj) * (xi - xj);
      if (px < xc) inside = !inside;
    }
  }
  return inside ? dist : -dist;
}

double extruded_polygon_sdf(const Vec3& xl, const std::vector<double>& params) {
  const double h = params[0];
  const int n = static_cast<int>((params.size() - 1) / 2);
  const double phi2d = polygon2_sdf(xl.x(), xl.y(), params.data() + 1, n);
  return std::min(phi2d, std::min(xl.z(), h - xl.z()));
}

double local_sdf(const FeatureSpec& spec, const Vec3& xl) {
  const auto& p = spec.params;
  switch (spec.kind) {
    case FeatureKind::kBox:
      return box_sdf(xl, Vec3(p[0], p[1], p[2]));
    case FeatureKind::kSphere:
      return p[0] - xl.norm();
    case FeatureKind::kCylinder:
      return cylinder_sdf(xl, p[0], p[1]);
    case FeatureKind::kCappedCone:
      return capped_cone_sdf(xl, p[0], p[1], p[2]);
    case FeatureKind::kRoundedCornerPrism:
      return rounded_corner_sdf(xl, p[0], p[1]);
    case FeatureKind::kExtrudedPolygon:
      return extruded_polygon_sdf(xl, p);
  }
  throw UnknownKind("unhandled feature kind");
}

Aabb local_aabb(const FeatureSpec& spec) {
  const auto& p = spec.params;
  Aabb b;
  switch (spec.kind) {
    case FeatureKind::kBox:
      b.expand(Vec3::Zero());
      b.expand(Vec3(p[0], p[1], p[2]));
      break;
    case FeatureKind::kSphere:
      b.expand(Vec3::Constant(-p[0]));
      b.expand(Vec3::Constant(p[0]));
      break;
    case FeatureKind::kCylinder:
      b.expand(Vec3(-p[0], -p[0], 0.0));
      b.expand(Vec3(p[0], p[0], p[1]));
      break;
    case FeatureKind::kCappedCone: {
      const double m = std::max(p[0], p[1]);
      b.expand(Vec3(-m, -m, 0.0));
      b.expand(Vec3(m, m, p[2]));
      break;
    }
    case FeatureKind::kRoundedCornerPrism:
      b.expand(Vec3::Zero());
      b.expand(Vec3(p[0], p[0], p[1]));
      break;
    case FeatureKind::kExtrudedPolygon: {
      const int n = static_cast<int>((p.size() - 1) / 2);
      for (int i = 0; i < n; ++i) {
        b.expand(Vec3(p[1 + 2 * i], p[2 + 2 * i], 0.0));
        b.expand(Vec3(p[1 + 2 * i], p[2 + 2 * i], p[0]));
      }
      break;
    }
  }
  return b;
}

double polygon_signed_area(const double* pts, int n) {
  double a = 0.0;
  for (int i = 0, j = n - 1; i < n; j = i++)
    a += pts[2 * j] * pts[2 * i + 1] - pts[2 * i] * pts[2 * j + 1];
  return 0.5 * a;
}

void validate_spec(const FeatureSpec& spec) {
  const auto& p = spec.params;
  auto require_positive = [&](int idx, const char* what) {
    if (idx >= static_cast<int>(p.size()) || !(p[idx] > 0.0) || !std::isfinite(p[idx]))
      throw InvalidParameter("feature '" + spec.name + "': " + what + " must be positive");
  };
  switch (spec.kind) {
    case FeatureKind::kBox:
      if (p.size() != 3) throw InvalidParameter("box expects 3 params");
      require_positive(0, "lx");
      require_positive(1, "ly");
      require_positive(2, "lz");
      break;
    case FeatureKind::kSphere:
      if (p.size() != 1) throw InvalidParameter("sphere expects 1 param");
      require_positive(0, "radius");
      break;
    case FeatureKind::kCylinder:
      if (p.size() != 2) throw InvalidParameter("cylinder expects 2 params");
      require_positive(0, "radius");
      require_positive(1, "height");
      break;
    case FeatureKind::kCappedCone:
      if (p.size() != 3) throw InvalidParameter("capped-cone expects 3 params");
      require_positive(0, "r0");
      require_positive(1, "r1");
      require_positive(2, "height");
      break;
    case FeatureKind::kRoundedCornerPrism:
      if (p.size() != 2) throw InvalidParameter("rounded-corner-prism expects 2 params");
      require_positive(0, "radius");
      require_positive(1, "height");
      break;
    case FeatureKind::kExtrudedPolygon: {
      if (p.size() < 7 || p.size() % 2 == 0)
        throw InvalidParameter("extruded-polygon expects (h, x0,y0, x1,y1, x2,y2, ...)");
      require_positive(0, "height");
      const int n = static_cast<int>((p.size() - 1) / 2);
      const double area = polygon_signed_area(p.data() + 1, n);
      if (!(std::abs(area) > 0.0))
        throw InvalidParameter("extruded-polygon has zero area");
      break;
    }
    default:
      throw UnknownKind("unknown feature kind");
  }

  const Mat3& R = spec.transform.rotation;
  if ((R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > kRotationTol ||
      std::abs(R.determinant() - 1.0) > kRotationTol)
    throw InvalidParameter("feature '" + spec.name + "': rotation is not a proper orthonormal matrix");
  if (!spec.transform.translation.allFinite() ||
      std::any_of(p.begin(), p.end(), [](double v) { return !std::isfinite(v); }))
    throw InvalidParameter("feature '" + spec.name + "': non-finite values");
}

}  // namespace

const char* to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kBox: return "box";
    case FeatureKind::kSphere: return "sphere";
    case FeatureKind::kCylinder: return "cylinder";
    case FeatureKind::kCappedCone: return "capped-cone";
    case FeatureKind::kRoundedCornerPrism: return "rounded-corner-prism";
    case FeatureKind::kExtrudedPolygon: return "extruded-polygon";
  }
  return "?";
}

const char* to_string(Nature nature) {
  return nature == Nature::kPositive ? "positive" : "negative";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  static const std::map<std::string, FeatureKind> table = {
      {"box", FeatureKind::kBox},
      {"sphere", FeatureKind::kSphere},
      {"cylinder", FeatureKind::kCylinder},
      {"capped-cone", FeatureKind::kCappedCone},
      {"rounded-corner-prism", FeatureKind::kRoundedCornerPrism},
      {"extruded-polygon", FeatureKind::kExtrudedPolygon},
  };
  const auto it = table.find(s);
  if (it == table.end()) throw UnknownKind("unknown feature kind: " + s);
  return it->second;
}

int expected_kind_params(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kBox: return 3;
    case FeatureKind::kSphere: return 1;
    case FeatureKind::kCylinder: return 2;
    case FeatureKind::kCappedCone: return 3;
    case FeatureKind::kRoundedCornerPrism: return 2;
    case FeatureKind::kExtrudedPolygon: return -1;  // variable
  }
  return -1;
}

Feature instantiate_feature(const FeatureSpec& spec) {
  FeatureSpec s = spec;
  // Normalize polygon winding so the inward-positive convention holds.
  if (s.kind == FeatureKind::kExtrudedPolygon && s.params.size() >= 7) {
    const int n = static_cast<int>((s.params.size() - 1) / 2);
    if (polygon_signed_area(s.params.data() + 1, n) < 0.0) {
      for (int i = 0; i < n / 2; ++i)
        for (int k = 0; k < 2; ++k)
          std::swap(s.params[1 + 2 * i + k], s.params[1 + 2 * (n - 1 - i) + k]);
    }
  }
  validate_spec(s);

  Feature f;
  f.spec = std::move(s);
  const Aabb lb = local_aabb(f.spec);
  for (int cx = 0; cx < 2; ++cx)
    for (int cy = 0; cy < 2; ++cy)
      for (int cz = 0; cz < 2; ++cz) {
        const Vec3 corner(cx ? lb.max.x() : lb.min.x(), cy ? lb.max.y() : lb.min.y(),
                          cz ? lb.max.z() : lb.min.z());
        f.aabb.expand(f.spec.transform.to_world(corner));
      }
  f.aabb.pad(1e-12 * (1.0 + f.aabb.diagonal()));
  f.param_count = static_cast<int>(f.spec.params.size()) + 3;
  return f;
}

double sdf(const Feature& feature, const Vec3& x) {
  return local_sdf(feature.spec, feature.spec.transform.to_local(x));
}

namespace {

// Analytic gradient of the local SDF for the exact kinds; nullopt-like flag
// for kinds handled by finite differences.
bool local_gradient(const FeatureSpec& spec, const Vec3& xl, Vec3* grad) {
  const auto& p = spec.params;
  switch (spec.kind) {
    case FeatureKind::kSphere: {
      const double n = xl.norm();
      *grad = n > 0.0 ? Vec3(-xl / n) : Vec3::Zero();
      return true;
    }
    case FeatureKind::kBox: {
      const Vec3 c = 0.5 * Vec3(p[0], p[1], p[2]);
      const Vec3 d = xl - c;
      const Vec3 q = d.cwiseAbs() - c;
      const Vec3 qp = q.cwiseMax(0.0);
      const double outn = qp.norm();
      Vec3 g = Vec3::Zero();
      if (outn > 0.0) {
        for (int k = 0; k < 3; ++k)
          g[k] = -(qp[k] / outn) * (d[k] >= 0.0 ? 1.0 : -1.0);
      } else {
        int a = 0;
        q.maxCoeff(&a);
        g[a] = -(d[a] >= 0.0 ? 1.0 : -1.0);
      }
      *grad = g;
      return true;
    }
    case FeatureKind::kCylinder: {
      const double r = p[0], h = p[1];
      const double rho = std::hypot(xl.x(), xl.y());
      const double dr = rho - r;
      const double dz = std::max(-xl.z(), xl.z() - h);
      const double zsign = (xl.z() - h > -xl.z()) ? 1.0 : -1.0;
      Vec3 radial = Vec3::Zero();
      if (rho > 0.0) radial = Vec3(xl.x() / rho, xl.y() / rho, 0.0);
      Vec3 g = Vec3::Zero();
      const double mp = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
      if (mp > 0.0) {
        g = -(std::max(dr, 0.0) / mp) * radial;
        g.z() = -(std::max(dz, 0.0) / mp) * zsign;
      } else {
        if (dr >= dz) g = -radial;
        else g.z() = -zsign;
      }
      *grad = g;
      return true;
    }
    default:
      return false;
  }
}

double fd_step(double p) { return 1e-6 * std::max(std::abs(p), 1.0); }

double sdf_with_params(const Feature& feature, const std::vector<double>& params, const Vec3& x) {
  FeatureSpec s = feature.spec;
  s.params = params;
  return local_sdf(s, s.transform.to_local(x));
}

}  // namespace

double sdf_param_gradient(const Feature& feature, const Vec3& x, int param_index) {
  if (param_index < 0 || param_index >= feature.param_count)
    throw IndexOutOfRange("param_index " + std::to_string(param_index) + " out of range");

  const int nk = feature.kind_param_count();
  const auto& p = feature.spec.params;
  const Vec3 xl = feature.spec.transform.to_local(x);

  if (param_index >= nk) {
    // Translation component: d(phi)/dt_k = -(d phi/d x_k) in world frame.
    const int k = param_index - nk;
    Vec3 gl;
    if (local_gradient(feature.spec, xl, &gl)) {
      const Vec3 gw = feature.spec.transform.rotation * gl;
      return -gw[k];
    }
    const double h = fd_step(feature.spec.transform.translation[k]);
    Vec3 xp = x, xm = x;
    xp[k] -= h;  // moving the feature by +h equals moving the point by -h
    xm[k] += h;
    return (sdf(feature, xp) - sdf(feature, xm)) / (2.0 * h);
  }

  switch (feature.spec.kind) {
    case FeatureKind::kSphere:
      return 1.0;
    case FeatureKind::kCylinder: {
      const double r = p[0], h = p[1];
      const double rho = std::hypot(xl.x(), xl.y());
      const double dr = rho - r;
      const double dz = std::max(-xl.z(), xl.z() - h);
      const double dz_dh = (xl.z() - h > -xl.z()) ? 1.0 : 0.0;
      const double mp = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
      if (param_index == 0) {
        if (mp > 0.0) return std::max(dr, 0.0) / mp;
        return dr >= dz ? 1.0 : 0.0;
      }
      if (mp > 0.0) return (std::max(dz, 0.0) / mp) * dz_dh;
      return dz > dr ? dz_dh : 0.0;
    }
    case FeatureKind::kBox: {
      const Vec3 c = 0.5 * Vec3(p[0], p[1], p[2]);
      const Vec3 d = xl - c;
      const Vec3 q = d.cwiseAbs() - c;
      const Vec3 qp = q.cwiseMax(0.0);
      const double outn = qp.norm();
      const int i = param_index;
      if (outn > 0.0)
        return (qp[i] > 0.0 && d[i] > 0.0) ? qp[i] / outn : 0.0;
      int a = 0;
      q.maxCoeff(&a);
      return (a == i && d[i] > 0.0) ? 1.0 : 0.0;
    }
    default: {
      const double h = fd_step(p[param_index]);
      std::vector<double> pp = p, pm = p;
      pp[param_index] += h;
      pm[param_index] -= h;
      return (sdf_with_params(feature, pp, x) - sdf_with_params(feature, pm, x)) / (2.0 * h);
    }
  }
}

Vec3 sdf_spatial_gradient(const Feature& feature, const Vec3& x, double h) {
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    g[k] = (sdf(feature, xp) - sdf(feature, xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace xv
