#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mhdrt/chebgrid.hpp"
#include "mhdrt/forms.hpp"
#include "mhdrt/model.hpp"

namespace mhdrt {

/// Extremal ratio of a discrete inequality over a random sample. The paper's
/// unspecified constants are estimated, never asserted in-type.
struct ConstantEstimate {
  double best_ratio = 0.0;
  int sample_size = 0;
  double refinement_drift = 0.0;  // relative change of best_ratio under n -> 2n
};

/// Poincare bound ||f||^2 <= ((m^2 + ell^2)/B3^2) ||(B.grad) f||^2 over random
/// per-mode scalar profiles vanishing on the rigid boundaries. best_ratio is
/// the maximal ||f||^2 / ||(B.grad) f||^2; the caller compares it against the
/// explicit constant.
ConstantEstimate poincare_check(const MagneticField& field, const Eigen::Vector2d& k,
                                const TwoLayerGrid& grid, int n_samples,
                                std::uint64_t seed = 0x5eed0001u);

/// Trace bound |f(0)|^2 <= C |B3|^{-1} ||(B.grad) f|| ||f||: maximal ratio over
/// the sample; the constant is unspecified, so finiteness and refinement
/// stability are what the caller asserts.
ConstantEstimate trace_check(const MagneticField& field, const Eigen::Vector2d& k,
                             const TwoLayerGrid& grid, int n_samples,
                             std::uint64_t seed = 0x5eed0002u);

/// Korn bound ||w||_1^2 <= C ||D w||^2 over random lifted divergence-free
/// modes.
ConstantEstimate korn_check(const Eigen::Vector2d& k, const TwoLayerGrid& grid, int n_samples,
                            std::uint64_t seed = 0x5eed0003u);

struct TestFnRow {
  double k = 0.0;
  double n = 0.0;
  double ratio = 0.0;  // magnetic energy over interface trace of w_{k,n}
  double e0 = 0.0;     // E0(w_{k,n}) up to the common horizontal scale
};

struct TestFnTable {
  std::vector<TestFnRow> rows;
  double limit = 0.0;             // B3^2 (1/ell + 1/m) evaluated on the grid
  double truncation_error = 0.0;  // worst relative quadrature-vs-closed-form gap
};

/// The concentrated test-function family w_{k,n} built from the piecewise
/// profile psi and Gaussian horizontal factors, evaluated through factorized
/// 1D integrals: Gaussian factors by quadrature on a truncated line
/// (cross-checked against closed forms), vertical factors on the grid.
TestFnTable testfn_limits(const FluidParams& params, const MagneticField& field,
                          const std::vector<double>& k_seq, const std::vector<double>& n_seq,
                          const TwoLayerGrid& grid);

/// The piecewise-affine interface profile: 1 at x3 = 0, 0 on the boundaries.
Eigen::VectorXcd psi_profile(const LayerGrid& layer);

}  // namespace mhdrt
