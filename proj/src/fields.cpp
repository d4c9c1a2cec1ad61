#include "xvoxel/fields.hpp"

#include <algorithm>
#include <cmath>

#include "xvoxel/parallel.hpp"

namespace xv {

double von_mises(const Eigen::Matrix<double, 6, 1>& s) {
  const double a = s[0] - s[1], b = s[1] - s[2], c = s[2] - s[0];
  return std::sqrt(0.5 * (a * a + b * b + c * c) +
                   3.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]));
}

FieldOutput compute_field_output(const ElasticSystem& sys, const XVoxelGrid& grid,
                                 const QuadraturePlan& plan, double compliance) {
  FieldOutput out;
  out.dims = sys.dims;
  out.compliance = compliance;
  out.dofs = sys.n_dofs;
  sys.corner_displacement(&out.corner_displacement, &out.corner_valid);
  out.cell_von_mises.assign(static_cast<std::size_t>(grid.voxel_count()), 0.0);

  const ElementBasis basis(sys.order);
  const int n = basis.node_count();
  const Eigen::Matrix<double, 6, 6> D = sys.material.elasticity();
  const double dscale = 2.0 / sys.voxel_size;

  parallel_for(0, grid.voxel_count(), 64, [&](std::int64_t v0, std::int64_t v1) {
    std::vector<double> qe, N(n), dN(3 * n);
    for (std::int64_t v = v0; v < v1; ++v) {
      if (!sys.included[v]) continue;
      const VoxelRule& rule = plan.rule(static_cast<int>(v));
      sys.gather_element(static_cast<int>(v), &qe);
      double acc = 0.0;
      int count = 0;
      for (const QuadPoint& qp : rule.points) {
        if (!qp.material) continue;
        basis.eval(qp.local, N.data(), dN.data());
        Eigen::Matrix<double, 6, 1> eps = Eigen::Matrix<double, 6, 1>::Zero();
        for (int a = 0; a < n; ++a) {
          const double gx = dN[3 * a + 0] * dscale;
          const double gy = dN[3 * a + 1] * dscale;
          const double gz = dN[3 * a + 2] * dscale;
          const double ux = qe[3 * a + 0], uy = qe[3 * a + 1], uz = qe[3 * a + 2];
          eps[0] += gx * ux;
          eps[1] += gy * uy;
          eps[2] += gz * uz;
          eps[3] += gz * uy + gy * uz;
          eps[4] += gz * ux + gx * uz;
          eps[5] += gy * ux + gx * uy;
        }
        acc += von_mises(D * eps);
        ++count;
      }
      if (count > 0) out.cell_von_mises[v] = acc / count;
    }
  });
  return out;
}

ResidualMetric displacement_residual(const FieldOutput& u1, const FieldOutput& u0) {
  ResidualMetric m;
  std::vector<std::pair<double, std::size_t>> mags;
  double num = 0.0, den = 0.0;
  const std::size_t count = std::min(u0.corner_displacement.size(), u1.corner_displacement.size());
  for (std::size_t i = 0; i < count; ++i) {
    if (!u0.corner_valid[i] || !u1.corner_valid[i]) continue;
    const Vec3 d = u1.corner_displacement[i] - u0.corner_displacement[i];
    num += d.squaredNorm();
    den += u0.corner_displacement[i].squaredNorm();
    mags.emplace_back(u0.corner_displacement[i].norm(), i);
  }
  m.global = den > 0.0 ? std::sqrt(num / den) : 0.0;

  if (!mags.empty()) {
    std::sort(mags.begin(), mags.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    const std::size_t top = std::max<std::size_t>(1, mags.size() / 10);
    double tn = 0.0, td = 0.0;
    for (std::size_t k = 0; k < top; ++k) {
      const std::size_t i = mags[k].second;
      const Vec3 d = u1.corner_displacement[i] - u0.corner_displacement[i];
      tn += d.squaredNorm();
      td += u0.corner_displacement[i].squaredNorm();
    }
    m.top_decile = td > 0.0 ? std::sqrt(tn / td) : 0.0;
  }
  return m;
}

}  // namespace xv
