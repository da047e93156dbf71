#pragma once

#include <Eigen/Dense>

#include "mhdrt/forms.hpp"

namespace mhdrt {

/// alpha(s, k) = inf of E(.; s) over the J-unit sphere, with the minimizer.
struct AlphaResult {
  double alpha = 0.0;
  ReducedMode minimizer;        // J-normalized, phase-normalized
  Eigen::VectorXcd coords;      // reduced coordinates of the minimizer
  double eig_residual = 0.0;    // pencil residual relative to the spectral radius
};

/// Smallest eigenvalue of the Hermitian pencil (E0 + s E1, J) and its
/// eigenvector. The eigenvector phase is fixed by making the entry of largest
/// modulus real and positive; ties are broken by lowest index.
AlphaResult alpha(const QuadForms& forms, double s);

/// alpha with the eigenvalue sharpened by extended-precision inverse
/// iteration. The double-precision value is only good to eps * ||pencil||
/// absolute, which matters when alpha is tested near zero.
double alpha_refined(const QuadForms& forms, double s);

/// inf of Int |(B.grad) w|^2 over divergence-free modes normalized by the
/// interface trace |w3(0)|^2. Always >= B3^2 (1/ell + 1/m) up to
/// discretization, and exactly 0 when the operator annihilates the mode
/// family (B3 = 0 and B* . k = 0).
double inviscid_quotient(const MagneticField& field, const Eigen::Vector2d& k,
                         const TwoLayerGrid& grid);

struct SteadyResidual {
  double momentum = 0.0;        // sup-norm residual of the vertical and
                                // transverse momentum rows, relative to the
                                // largest term magnitude
  double jump = 0.0;            // stress-jump condition on the interface,
                                // relative to the largest term magnitude
  Eigen::VectorXcd pressure;    // recovered q at the nodes (upper, then lower)
};

/// Verifies that (lambda, mode) solves the steady eigenproblem in strong form.
/// The pressure is recovered algebraically from the horizontal momentum rows;
/// the vertical row, the transverse row and the full stress-jump condition on
/// the interface are then genuine predictions. Meaningful only for
/// fixed-point output; a perturbed lambda shows up as an O(1) jump residual.
SteadyResidual steady_residual(const FluidParams& params, const MagneticField& field,
                               const TwoLayerGrid& grid, double lambda,
                               const ReducedMode& mode);

}  // namespace mhdrt
