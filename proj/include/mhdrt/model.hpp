#pragma once

#include <Eigen/Dense>
#include <string>

namespace mhdrt {

/// Physical configuration of the two-layer problem. All quantities are
/// dimensionless reals in a consistent unit system.
struct FluidParams {
  double rho_plus = 2.0;   // mass density, upper fluid
  double rho_minus = 1.0;  // mass density, lower fluid
  double mu_plus = 1.0;    // dynamic viscosity, upper
  double mu_minus = 1.0;   // dynamic viscosity, lower
  double g = 1.0;          // gravity
  double ell = 1.0;        // upper layer depth
  double m = 1.0;          // lower layer depth

  double density_jump() const { return rho_plus - rho_minus; }

  /// Throws std::invalid_argument unless all fields are strictly positive and
  /// the upper fluid is heavier (the density jump is positive).
  void validate() const;
};

/// The uniform steady magnetic field.
struct MagneticField {
  Eigen::Vector3d b = Eigen::Vector3d::Zero();

  Eigen::Vector2d horizontal() const { return b.head<2>(); }
  double vertical() const { return b[2]; }
};

enum class Regime { subcritical, critical, supercritical };

const char* to_string(Regime r);

struct RegimeLabel {
  Regime regime = Regime::subcritical;
  double margin = 0.0;  // |B3| - M_c
};

/// The critical vertical field strength sqrt((rho+ - rho-) g / (1/ell + 1/m)).
/// Independent of the viscosities.
double critical_field(const FluidParams& params);

/// Compares |B3| against M_c with an explicit tolerance band for "critical".
RegimeLabel classify_regime(const FluidParams& params, const MagneticField& field, double tol);

struct Canonicalized {
  MagneticField field;       // horizontal part rotated onto (|B*|, 0)
  Eigen::Vector2d k;         // the same rotation applied to the wavevector
  Eigen::Matrix2d rotation;  // R with B*' = R^T B*, k' = R^T k
};

/// Rotates the horizontal frame so the horizontal field points along e1.
/// All per-mode quadratic forms are invariant under this change of basis.
Canonicalized canonicalize(const MagneticField& field, const Eigen::Vector2d& k);

}  // namespace mhdrt
