#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>

#include "mhdrt/chebgrid.hpp"
#include "mhdrt/model.hpp"

namespace mhdrt {

/// One divergence-free normal mode in reduced variables: the vertical velocity
/// profile w3 and the transverse shear amplitude b along kperp/|k|, stored as
/// values at all nodes of both layers (upper block first, then lower).
struct ReducedMode {
  Eigen::VectorXcd w3;
  Eigen::VectorXcd b;
  Eigen::Vector2d k = Eigen::Vector2d::Zero();
};

/// Full 3-component complex velocity profile at the nodes of both layers.
struct VelocityProfile {
  Eigen::VectorXcd u1, u2, u3;
};

/// The per-wavevector parameterization of divergence-free fields that vanish
/// on the rigid boundaries and are continuous across the interface. Columns of
/// Zw/Zb span the admissible node-value vectors of w3 and b; reduced
/// coordinates are coefficients in these bases.
struct ReducedBasis {
  TwoLayerGrid grid;
  Eigen::Vector2d k;
  double kappa = 0.0;
  Eigen::Vector2d khat, kperp;
  Eigen::MatrixXd Zw, Zb;  // orthonormal columns

  int dof() const { return static_cast<int>(Zw.cols() + Zb.cols()); }
  Eigen::VectorXcd to_coords(const ReducedMode& mode) const;
  ReducedMode from_coords(const Eigen::VectorXcd& coords) const;
};

ReducedBasis reduce_basis(const TwoLayerGrid& grid, const Eigen::Vector2d& k);

struct QuadFormsCache;  // internal: whitened pencil and energy split

/// Hermitian matrices of the energy functionals over reduced coordinates.
/// x^H E0 x, x^H E1 x and x^H J x are the per-unit-horizontal-area values of
/// the magnetic-plus-surface energy, the viscous form and the rho-weighted
/// mass of the lifted velocity field.
struct QuadForms {
  Eigen::MatrixXcd E0, E1, J;
  FluidParams params;
  MagneticField field;
  ReducedBasis basis;
  std::shared_ptr<const QuadFormsCache> cache;
};

QuadForms assemble_forms(const FluidParams& params, const MagneticField& field,
                         const Eigen::Vector2d& k, const TwoLayerGrid& grid);

/// Reusable per-(params, k, grid) assembly: building forms for many field
/// vectors (stability scans) costs O(dof^2) each instead of a fresh assembly.
class FormsFactory {
 public:
  FormsFactory(const FluidParams& params, const Eigen::Vector2d& k, const TwoLayerGrid& grid);
  QuadForms make(const MagneticField& field) const;
  const ReducedBasis& basis() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Lifts reduced node values to the full 3-component profile:
/// u_* = a khat + b kperp with a = i w3'/|k|, u3 = w3. The per-mode divergence
/// i k . u_* + u3' vanishes identically by construction. Rejects modes that
/// violate the boundary/interface value invariants.
VelocityProfile lift_velocity(const TwoLayerGrid& grid, const ReducedMode& mode);

/// Pointwise per-mode divergence of a profile (diagnostic; ~roundoff for any
/// lifted mode).
Eigen::VectorXcd mode_divergence(const TwoLayerGrid& grid, const Eigen::Vector2d& k,
                                 const VelocityProfile& profile);

struct EnergyBreakdown {
  double E = 0.0;   // E0 + s E1
  double E0 = 0.0;  // magnetic - surface
  double E1 = 0.0;  // viscous
  double J = 0.0;   // rho-weighted mass
};

/// Evaluates the functionals on a mode by direct Clenshaw-Curtis quadrature of
/// the lifted profile (independent of the assembled matrices).
EnergyBreakdown evaluate_energy(const QuadForms& forms, const ReducedMode& mode, double s);

}  // namespace mhdrt
