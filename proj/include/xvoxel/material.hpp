#pragma once

#include <Eigen/Dense>

#include "xvoxel/errors.hpp"

namespace xv {

// Isotropic linear elasticity. Voigt order (xx, yy, zz, yz, xz, xy) with
// engineering shear strains.
struct Material {
  double youngs_modulus = 2e11;  // Pa
  double poisson_ratio = 0.3;

  void validate() const {
    if (!(youngs_modulus > 0.0))
      throw InvalidParameter("material: Young's modulus must be positive");
    if (!(poisson_ratio > -1.0) || !(poisson_ratio < 0.5))
      throw InvalidParameter("material: Poisson ratio must be in (-1, 0.5)");
  }

  double lame_lambda() const {
    return youngs_modulus * poisson_ratio /
           ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
  }
  double lame_mu() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }

  Eigen::Matrix<double, 6, 6> elasticity() const {
    const double l = lame_lambda();
    const double m = lame_mu();
    Eigen::Matrix<double, 6, 6> d = Eigen::Matrix<double, 6, 6>::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) d(i, j) = (i == j) ? l + 2.0 * m : l;
    for (int i = 3; i < 6; ++i) d(i, i) = m;
    return d;
  }
};

}  // namespace xv
