#include "xvoxel/element.hpp"

#include "xvoxel/kern/kernels.hpp"

namespace xv {

ElementBasis::ElementBasis(int p) : p_(p), n_((p + 1) * (p + 1) * (p + 1)) {
  if (p < 1 || p > 3) throw InvalidParameter("element order p must be in [1,3]");
  nodes1d_.resize(p + 1);
  for (int i = 0; i <= p; ++i) nodes1d_[i] = -1.0 + 2.0 * i / p;
}

void ElementBasis::eval1d(double x, double* val, double* der) const {
  const int m = p_ + 1;
  for (int i = 0; i < m; ++i) {
    double v = 1.0;
    double d = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double denom = nodes1d_[i] - nodes1d_[j];
      const double term = (x - nodes1d_[j]) / denom;
      d = d * term + v / denom;
      v *= term;
    }
    val[i] = v;
    der[i] = d;
  }
}

void ElementBasis::eval(const Vec3& xi, double* N, double* dN) const {
  const int m = p_ + 1;
  double vx[4], dx[4], vy[4], dy[4], vz[4], dz[4];
  eval1d(xi.x(), vx, dx);
  eval1d(xi.y(), vy, dy);
  eval1d(xi.z(), vz, dz);
  int a = 0;
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i, ++a) {
        N[a] = vx[i] * vy[j] * vz[k];
        dN[3 * a + 0] = dx[i] * vy[j] * vz[k];
        dN[3 * a + 1] = vx[i] * dy[j] * vz[k];
        dN[3 * a + 2] = vx[i] * vy[j] * dz[k];
      }
}

Vec3 ElementBasis::node_local(int a) const {
  const int m = p_ + 1;
  return Vec3(nodes1d_[a % m], nodes1d_[(a / m) % m], nodes1d_[a / (m * m)]);
}

ElementMatrix::ElementMatrix(int node_count) : n_(node_count) {
  const std::size_t sz = static_cast<std::size_t>(n_) * n_;
  kxx_.assign(sz, 0.0);
  kyy_.assign(sz, 0.0);
  kzz_.assign(sz, 0.0);
  kxy_.assign(sz, 0.0);
  kxz_.assign(sz, 0.0);
  kyz_.assign(sz, 0.0);
}

double ElementMatrix::entry(int dof_row, int dof_col) const {
  const int a = dof_row / 3, c = dof_row % 3;
  const int b = dof_col / 3, d = dof_col % 3;
  switch (c * 3 + d) {
    case 0: return xx(a, b);
    case 1: return xy(a, b);
    case 2: return xz(a, b);
    case 3: return xy(b, a);
    case 4: return yy(a, b);
    case 5: return yz(a, b);
    case 6: return xz(b, a);
    case 7: return yz(b, a);
    default: return zz(a, b);
  }
}

Eigen::MatrixXd ElementMatrix::dense() const {
  Eigen::MatrixXd K(3 * n_, 3 * n_);
  for (int r = 0; r < 3 * n_; ++r)
    for (int c = 0; c < 3 * n_; ++c) K(r, c) = entry(r, c);
  return K;
}

void ElementMatrix::accumulate(double w, double lambda, double mu, const double* gx,
                               const double* gy, const double* gz) {
  const auto& k = kern::active();
  const double lm2 = lambda + 2.0 * mu;
  const std::size_t n = static_cast<std::size_t>(n_);
  for (int a = 0; a < n_; ++a) {
    const double wgx = w * gx[a], wgy = w * gy[a], wgz = w * gz[a];
    double* rxx = kxx_.data() + idx(a, 0);
    double* ryy = kyy_.data() + idx(a, 0);
    double* rzz = kzz_.data() + idx(a, 0);
    double* rxy = kxy_.data() + idx(a, 0);
    double* rxz = kxz_.data() + idx(a, 0);
    double* ryz = kyz_.data() + idx(a, 0);
    k.axpy3(lm2 * wgx, gx, mu * wgy, gy, mu * wgz, gz, rxx, n);
    k.axpy3(mu * wgx, gx, lm2 * wgy, gy, mu * wgz, gz, ryy, n);
    k.axpy3(mu * wgx, gx, mu * wgy, gy, lm2 * wgz, gz, rzz, n);
    k.axpy(lambda * wgx, gy, rxy, n);
    k.axpy(mu * wgy, gx, rxy, n);
    k.axpy(lambda * wgx, gz, rxz, n);
    k.axpy(mu * wgz, gx, rxz, n);
    k.axpy(lambda * wgy, gz, ryz, n);
    k.axpy(mu * wgz, gy, ryz, n);
  }
}

ElementMatrix& ElementMatrix::axpy(double s, const ElementMatrix& other) {
  const auto& k = kern::active();
  const std::size_t n = kxx_.size();
  k.axpy(s, other.kxx_.data(), kxx_.data(), n);
  k.axpy(s, other.kyy_.data(), kyy_.data(), n);
  k.axpy(s, other.kzz_.data(), kzz_.data(), n);
  k.axpy(s, other.kxy_.data(), kxy_.data(), n);
  k.axpy(s, other.kxz_.data(), kxz_.data(), n);
  k.axpy(s, other.kyz_.data(), kyz_.data(), n);
  return *this;
}

void ElementMatrix::scale(double s) {
  for (auto* blk : {&kxx_, &kyy_, &kzz_, &kxy_, &kxz_, &kyz_})
    for (double& v : *blk) v *= s;
}

ElementMatrix element_stiffness(const VoxelRule& rule, const Material& material,
                                double voxel_size, const ElementBasis& basis) {
  const int n = basis.node_count();
  ElementMatrix K(n);
  const double lambda = material.lame_lambda();
  const double mu = material.lame_mu();
  const double jac = std::pow(0.5 * voxel_size, 3);
  const double dscale = 2.0 / voxel_size;  // d/dx = (2/h) d/dxi

  std::vector<double> N(n), dN(3 * n), gx(n), gy(n), gz(n);
  for (const QuadPoint& qp : rule.points) {
    basis.eval(qp.local, N.data(), dN.data());
    for (int a = 0; a < n; ++a) {
      gx[a] = dN[3 * a + 0] * dscale;
      gy[a] = dN[3 * a + 1] * dscale;
      gz[a] = dN[3 * a + 2] * dscale;
    }
    K.accumulate(qp.weight * qp.heaviside * jac, lambda, mu, gx.data(), gy.data(), gz.data());
  }
  return K;
}

}  // namespace xv
