#pragma once

#include <Eigen/Dense>
#include <vector>

#include "xvoxel/material.hpp"
#include "xvoxel/quadrature.hpp"

namespace xv {

// Tensor-product Lagrange basis of order p on [-1,1]^3 with equally spaced
// nodes, local node index a = i + (p+1)*(j + (p+1)*k).
class ElementBasis {
 public:
  explicit ElementBasis(int p);

  int order() const { return p_; }
  int nodes_per_axis() const { return p_ + 1; }
  int node_count() const { return n_; }

  // Values N[a] and reference gradients dN[3*a+k] = dN_a/dxi_k.
  void eval(const Vec3& xi, double* N, double* dN) const;

  // Local node coordinate in [-1,1]^3.
  Vec3 node_local(int a) const;

 private:
  void eval1d(double x, double* val, double* der) const;
  int p_;
  int n_;
  std::vector<double> nodes1d_;
};

// Element stiffness stored as six n-by-n component blocks so quadrature
// accumulation maps onto contiguous fused-multiply kernels.
// K[(c,a),(c',b)] with c,c' in {x,y,z}: xx/yy/zz symmetric, xy/xz/yz general
// (the yx block is the transpose of xy, etc).
class ElementMatrix {
 public:
  ElementMatrix() = default;
  ElementMatrix(int node_count);

  int node_count() const { return n_; }
  double xx(int a, int b) const { return kxx_[idx(a, b)]; }
  double yy(int a, int b) const { return kyy_[idx(a, b)]; }
  double zz(int a, int b) const { return kzz_[idx(a, b)]; }
  double xy(int a, int b) const { return kxy_[idx(a, b)]; }
  double xz(int a, int b) const { return kxz_[idx(a, b)]; }
  double yz(int a, int b) const { return kyz_[idx(a, b)]; }

  // Entry in (node-major, component-minor) DOF numbering: dof = 3*a + c.
  double entry(int dof_row, int dof_col) const;

  // Dense (3n x 3n) view in node-major DOF numbering (tests, CBN oracles).
  Eigen::MatrixXd dense() const;

  // Accumulates w * B^T D B at one quadrature point given world-space shape
  // gradients (SoA arrays of length n).
  void accumulate(double w, double lambda, double mu, const double* gx, const double* gy,
                  const double* gz);

  ElementMatrix& axpy(double s, const ElementMatrix& other);  // this += s*other
  void scale(double s);

 private:
  std::size_t idx(int a, int b) const { return static_cast<std::size_t>(a) * n_ + b; }
  int n_ = 0;
  std::vector<double> kxx_, kyy_, kzz_, kxy_, kxz_, kyz_;
};

// Integrates the element stiffness of one voxel from its quadrature rule.
// voxel_size enters through the constant Jacobian h/2 per axis.
ElementMatrix element_stiffness(const VoxelRule& rule, const Material& material,
                                double voxel_size, const ElementBasis& basis);

}  // namespace xv
